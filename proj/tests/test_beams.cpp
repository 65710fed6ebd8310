#include <cmath>

#include "beamlab/beams.hpp"
#include "beamlab/error.hpp"
#include "doctest.h"

using namespace beamlab;

namespace {

WarpedMetric metric(int dim, bool perturbed) {
  if (!perturbed) return WarpedMetric::minkowski(dim);
  Bump b;
  b.center.assign(dim, 0.5);
  b.center[0] = 0.45;
  b.width = 0.4;
  b.amplitude = 0.1;
  return WarpedMetric::lapse_bump(dim, b);
}

// null geodesic through the box centre with spatial direction (0.8, 0.6, 0, ...)
FermiChart chart_for(const WarpedMetric& g, const Vec& p) {
  const int dim = static_cast<int>(p.size());
  Vec xi = Vec::Zero(dim);
  xi[1] = 0.8;
  xi[2] = 0.6;
  xi[0] = -std::sqrt(g.lapse(p.data()) / g.conformal(p.data()));
  return build_fermi_chart(g, trace_null_geodesic(g, p, xi, Direction::forward));
}

FermiChart centre_chart(int dim, bool perturbed, const WarpedMetric& g) {
  return chart_for(g, Vec::Constant(dim, 0.5));
}

CMat iI(int m, double lam = 1.0) { return cplx(0.0, lam) * CMat::Identity(m, m); }

BeamOptions window(double w) {
  BeamOptions o;
  o.tau_lo = -w;
  o.tau_hi = w;
  return o;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("flat Riccati matches the closed form") {
  const auto g = metric(3, false);
  const auto ch = centre_chart(3, false, g);
  const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
  double err = 0.0;
  for (size_t i = 0; i < r.tau.size(); ++i) {
    // independent oracle: H = diag(i, i / (1 + 2 i tau))
    const double t = r.tau[i];
    CMat ref = CMat::Zero(2, 2);
    ref(0, 0) = cplx(0, 1);
    ref(1, 1) = cplx(0, 1) / (1.0 + cplx(0, 2.0 * t));
    err = std::max(err, (r.H[i] - ref).cwiseAbs().maxCoeff());
    err = std::max(err, (flat_riccati_H(iI(2), t) - ref).cwiseAbs().maxCoeff());
  }
  CHECK(err < 1e-8);
  CHECK(r.c0[-r.i_lo] == doctest::Approx(1.0));
}

TEST_CASE("Riccati invariants on a perturbed metric") {
  const auto g = metric(3, true);
  const auto ch = centre_chart(3, true, g);
  CMat H0 = iI(2);
  H0(0, 1) = H0(1, 0) = cplx(0.2, 0.1);
  const auto r = solve_riccati(ch, H0, CMat::Identity(2, 2));
  CHECK(r.c0_drift() < 1e-6);
  CHECK(r.min_imag_eig() > 0.0);
  CHECK(r.symmetry_defect() < 1e-12);
  CHECK(r.min_abs_det_Y() > 0.0);
  // drift is at round-off for step 1e-3, so the order is read off coarser steps
  RiccatiOptions a, b;
  a.step = 0.02;
  b.step = 0.01;
  const double da = solve_riccati(ch, H0, CMat::Identity(2, 2), a).c0_drift();
  const double db = solve_riccati(ch, H0, CMat::Identity(2, 2), b).c0_drift();
  CHECK(std::log2(da / db) >= 3.8);
}

TEST_CASE("Riccati rejects invalid initial data") {
  const auto g = metric(3, false);
  const auto ch = centre_chart(3, false, g);
  CMat bad = iI(2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(solve_riccati(ch, bad, CMat::Identity(2, 2)), DomainError);
  CHECK_THROWS_AS(solve_riccati(ch, -iI(2), CMat::Identity(2, 2)), DomainError);
  CHECK_THROWS_AS(solve_riccati(ch, iI(2), CMat::Zero(2, 2)), DomainError);
}

TEST_CASE("eikonal vanishes to order N+1 on the axis") {
  for (bool pert : {false, true}) {
    const auto g = metric(3, pert);
    const auto ch = centre_chart(3, pert, g);
    const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
    for (int N : {2, 4}) {
      const auto ph = build_phase(ch, r, N, window(0.3));
      for (double t : {0.0, 0.1}) {
        const Vec z1 = Vec::Constant(2, 0.04 / std::sqrt(2.0));
        const double e1 = std::abs(ph.eikonal(t, z1)), e2 = std::abs(ph.eikonal(t, 0.5 * z1));
        CAPTURE(pert);
        CAPTURE(N);
        CHECK(std::log2(e1 / e2) > N + 1 - 0.3);
        CHECK(std::abs(ph.eikonal(t, Vec::Zero(2))) < 1e-10);
      }
    }
  }
}

TEST_CASE("Im phi is bounded below by the Riccati eigenvalue near the axis") {
  const auto g = metric(3, true);
  const auto ch = centre_chart(3, true, g);
  const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
  const auto ph = build_phase(ch, r, 4, window(0.3));
  const double lam = r.min_imag_eig();
  for (double t : {-0.2, 0.0, 0.2})
    for (double ang = 0.0; ang < 2.0 * kPi; ang += 0.5) {
      Vec z(2);
      z << 0.1 * std::cos(ang), 0.1 * std::sin(ang);
      CHECK(ph.value(t, z).imag() >= 0.5 * lam * z.squaredNorm());
    }
}

TEST_CASE("flat leading amplitude is (1 + 2 i tau)^(-1/2)") {
  const auto g = metric(3, false);
  const auto ch = centre_chart(3, false, g);
  const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
  const auto ph = build_phase(ch, r, 4, window(0.3));
  const auto am = build_amplitude(ph, r);
  CHECK(am.a00_ode_deviation() < 1e-8);
  for (double t : {-0.25, -0.1, 0.0, 0.13, 0.25}) {
    const cplx ref = 1.0 / std::sqrt(1.0 + cplx(0.0, 2.0 * t));
    CHECK(std::abs(am.a00(t) - ref) < 1e-8);
    const cplx detY = r.Y_at(t).determinant();
    CHECK(std::pow(std::abs(am.a00(t)), 4) * std::norm(detY) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("transport equations hold on the table") {
  const auto g = metric(3, true);
  const auto ch = centre_chart(3, true, g);
  const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
  const auto ph = build_phase(ch, r, 4, window(0.3));
  const auto am = build_amplitude(ph, r);
  REQUIRE(am.terms() == 2);
  CHECK(am.a00_ode_deviation() < 1e-8);
  const auto& T = ph.table();
  for (int idx : {T.count() / 4, T.count() / 2, 3 * T.count() / 4})
    for (int k = 0; k < am.terms(); ++k) {
      const Poly t = am.transport_taylor(k, idx);
      double m = 0.0;
      for (int i = 0; i < t.basis()->size(); ++i) m = std::max(m, std::abs(t[i]));
      CAPTURE(k);
      CHECK(m < 1e-7);
    }
}

TEST_CASE("beam values: axis, support and conjugation") {
  const auto g = metric(3, false);
  const auto ch = centre_chart(3, false, g);
  const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
  const auto ph = build_phase(ch, r, 2, window(0.3));
  const auto am = build_amplitude(ph, r);
  const auto beam = assemble_beam(ph, am, 50.0, 1.0, 0.4);
  const auto conj = assemble_beam(ph, am, 50.0, -1.0, 0.4);
  for (double t : {-0.2, 0.0, 0.2}) {
    CHECK(std::abs(beam.evaluate_chart(t, Vec::Zero(2)) - am.a00(t)) < 1e-10);
    Vec z(2);
    z << 0.05, -0.03;
    CHECK(std::abs(conj.evaluate_chart(t, z) - std::conj(beam.evaluate_chart(t, z))) < 1e-14);
    z << 0.15, 0.15;
    CHECK(beam.evaluate_chart(t, z) == cplx(0.0));
  }
  // spacetime evaluation agrees with the chart and vanishes far from the tube
  Vec z(2);
  z << 0.03, 0.02;
  CHECK(std::abs(beam.evaluate(ch.map(0.1, z)) - beam.evaluate_chart(0.1, z)) < 1e-9);
  Vec far = ch.axis_point(0.0);
  far[1] += 0.4;
  far[2] -= 0.3;
  CHECK(beam.evaluate(far) == cplx(0.0));
  CHECK_THROWS_AS(assemble_beam(ph, am, -1.0, 1.0, 0.4), DomainError);
  CHECK_THROWS_AS(assemble_beam(ph, am, 10.0, 0.0, 0.4), DomainError);
  CHECK(beam.metadata()["rho"] == 50.0);
}

TEST_CASE("beam gradient matches finite differences") {
  const auto g = metric(3, true);
  const auto ch = centre_chart(3, true, g);
  const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
  const auto ph = build_phase(ch, r, 4, window(0.3));
  const auto beam = assemble_beam(ph, build_amplitude(ph, r), 20.0, 1.0, 0.5);
  Vec z(2);
  z << 0.04, -0.05;
  const Vec x = ch.map(0.05, z);
  const auto v = beam.evaluate_with_gradient(x);
  REQUIRE(v.has_value());
  const double h = 1e-5;
  for (int mu = 0; mu < 3; ++mu) {
    Vec xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    const cplx fd = (beam.evaluate(xp) - beam.evaluate(xm)) / (2.0 * h);
    CHECK(std::abs(fd - v->second[mu]) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("residual on the cutoff core decays at the predicted rate") {
  const auto g = metric(3, false);
  const auto ch = centre_chart(3, false, g);
  const auto r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
  for (int N : {2, 4}) {
    const auto ph = build_phase(ch, r, N, window(0.3));
    const auto am = build_amplitude(ph, r);
    std::vector<double> rhos{32, 64, 128, 256}, norms;
    for (double rho : rhos) {
      ResidualOptions o;
      o.tau_lo = -0.1;
      o.tau_hi = 0.1;
      o.tau_points = 9;
      o.points_per_width = 4.0;
      o.core_only = true;
      const auto rep = beam_residual(assemble_beam(ph, am, rho, 1.0, 0.6), o);
      CHECK(rep.shell_fraction == 0.0);
      norms.push_back(rep.core_norm);
    }
    const double expect = (3.0 - N) / 2.0 - 0.5;
    CAPTURE(N);
    CHECK(std::abs(fitted_slope(rhos, norms) - expect) < 0.5);
  }
  ResidualOptions bad;
  bad.points_per_width = 1.0;
  const auto ph = build_phase(ch, r, 2, window(0.3));
  CHECK_THROWS_AS(beam_residual(assemble_beam(ph, build_amplitude(ph, r), 16, 1, 0.6), bad), DomainError);
}

namespace {

struct FlatBeam {
  WarpedMetric g = WarpedMetric::minkowski(3);
  FermiChart ch;
  RiccatiTrajectory r;
  BeamPhase ph;
  BeamAmplitude am;

  // axis through (t0, 0.5, 0.5) with spatial direction (0.8, 0.6)
  FlatBeam(double t0, int N) {
    Vec p(3), xi(3);
    p << t0, 0.5, 0.5;
    xi << -1.0, 0.8, 0.6;
    ch = build_fermi_chart(g, trace_null_geodesic(g, p, xi, Direction::forward));
    r = solve_riccati(ch, iI(2), CMat::Identity(2, 2));
    ph = build_phase(ch, r, N);
    am = build_amplitude(ph, r);
  }
};

// relative l2 difference between the solver driven by the beam's Neumann data and the beam at time t
double solver_mismatch(const FlatBeam& fb, double rho, int cells, double T, double t) {
  const auto beam = assemble_beam(fb.ph, fb.am, rho, 1.0, 4.0);
  const auto grid = SpacetimeGrid::with_courant(fb.g, cells, T, 0.8);
  SourceOptions so;
  so.margin = -1.0;  // the Gaussian tail reaches t = 0 at these rho; the ramp removes it
  so.ramp_width = 0.05;
  const auto src = beam_neumann_source(beam, fb.g, grid, so);
  NeumannSource re = src.source, im = src.source;
  re.imag.clear();
  im.values = src.source.imag;
  im.imag.clear();
  const auto ur = solve_linear(fb.g, grid, nullptr, re);
  const auto ui = solve_linear(fb.g, grid, nullptr, im);
  const auto ref = sample_beam(beam, grid);
  const size_t n = grid.spatial_nodes();
  const size_t k = static_cast<size_t>(std::lround(t / grid.dt()));
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const cplx u(ur.u[k * n + i], ui.u[k * n + i]);
    num += std::norm(u - ref[k * n + i]);
    den += std::norm(ref[k * n + i]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("Neumann source is localized on the tube") {
  FlatBeam fb(0.9, 2);
  const auto beam = assemble_beam(fb.ph, fb.am, 20.0, 1.0, 0.4);
  const SpacetimeGrid grid(fb.g, 24, 60, 1.4);
  const auto rep = beam_neumann_source(beam, fb.g, grid);
  CHECK(rep.footprint_nodes > 0);
  CHECK(rep.t_first > 0.02);
  const size_t nb = grid.boundary_nodes();
  int off_tube = 0;
  for (int k = 0; k <= grid.steps(); ++k)
    for (int face = 0; face < grid.faces(); ++face)
      for (size_t j = 0; j < grid.face_nodes(); ++j) {
        const size_t p = k * nb + face * grid.face_nodes() + j;
        if (rep.source.values[p] == 0.0 && rep.source.imag[p] == 0.0) continue;
        double tau;
        Vec z;
        const bool ok = fb.ch.inverse(grid.boundary_point(face, j, k), tau, z);
        if (!ok || z.norm() >= 0.5 * beam.delta()) ++off_tube;
      }
  CHECK(off_tube == 0);
  // the pre-ramp sampling matches the beam's normal derivative on a footprint node
  CHECK(rep.source.max_abs() > 0.0);
}

TEST_CASE("beam outside the time window gives a zero source") {
  FlatBeam fb(1.4, 2);
  const auto beam = assemble_beam(fb.ph, fb.am, 20.0, 1.0, 0.3);
  const SpacetimeGrid grid(fb.g, 16, 12, 0.3);
  const auto rep = beam_neumann_source(beam, fb.g, grid);
  CHECK(rep.footprint_nodes == 0);
  CHECK(rep.source.is_zero());
  for (double v : rep.source.imag) CHECK(v == 0.0);
  for (const cplx& v : sample_beam(beam, grid)) CHECK(v == cplx(0.0));
}

TEST_CASE("footprint near t = 0 is rejected") {
  FlatBeam fb(0.9, 2);
  const auto beam = assemble_beam(fb.ph, fb.am, 20.0, 1.0, 4.0);
  const SpacetimeGrid grid(fb.g, 16, 40, 1.2);
  CHECK_THROWS_AS(beam_neumann_source(beam, fb.g, grid), DomainError);
}

TEST_CASE("solver driven by the beam source reproduces the beam, better at larger rho") {
  FlatBeam fb(1.2, 4);
  const double e8 = solver_mismatch(fb, 8.0, 32, 1.6, 0.9);
  const double e16 = solver_mismatch(fb, 16.0, 64, 1.6, 0.9);
  CAPTURE(e8);
  CAPTURE(e16);
  CHECK(e16 < 0.1);
  CHECK(e16 < 0.6 * e8);
}
