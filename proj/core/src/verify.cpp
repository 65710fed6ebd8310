#include "beamlab/verify.hpp"

#include <chrono>
#include <cmath>

#include "beamlab/covector.hpp"
#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

FermiChart chart_through(const WarpedMetric& g, const Vec& p, const Vec& xi) {
  return build_fermi_chart(g, trace_null_geodesic(g, p, xi, Direction::forward));
}

double order_of(const std::vector<int>& cells, const std::vector<double>& err) {
  const size_t n = err.size();
  if (n < 2) return 0.0;
  return std::log(err[n - 2] / err[n - 1]) / std::log(static_cast<double>(cells[n - 1]) / cells[n - 2]);
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need two or more matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: samples must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Vec null_covector(const WarpedMetric& g, const Vec& p, const Vec& dir) {
  if (dir.size() != g.dim() - 1 || dir.norm() == 0.0) throw DomainError("null_covector: bad spatial direction");
  Vec xi(g.dim());
  xi.tail(g.dim() - 1) = dir.normalized();
  xi[0] = -std::sqrt(g.lapse(p.data()) / g.conformal(p.data()));
  return xi;
}

nlohmann::json RiccatiCheck::to_json() const {
  return {{"drift", drift},
          {"coarse_drift", coarse_drift},
          {"fine_drift", fine_drift},
          {"halving_order", halving_order},
          {"flat_deviation", flat_deviation},
          {"min_imag_eig", min_imag_eig},
          {"symmetry_defect", symmetry_defect},
          {"seconds", seconds}};
}

RiccatiCheck riccati_check(const WarpedMetric& g, const Vec& p, const Vec& xi, const CMat& H0, double step,
                           double coarse_step) {
  const auto t0 = Clock::now();
  const auto ch = chart_through(g, p, xi);
  const CMat Y0 = CMat::Identity(H0.rows(), H0.cols());
  RiccatiOptions o;
  o.step = step;
  const auto r = solve_riccati(ch, H0, Y0, o);
  RiccatiCheck c;
  c.drift = r.c0_drift();
  c.min_imag_eig = r.min_imag_eig();
  c.symmetry_defect = r.symmetry_defect();
  if (g.is_flat()) {
    c.flat_deviation = 0.0;
    for (size_t i = 0; i < r.tau.size(); ++i)
      c.flat_deviation = std::max(c.flat_deviation, (r.H[i] - flat_riccati_H(H0, r.tau[i])).cwiseAbs().maxCoeff());
  }
  o.step = coarse_step;
  c.coarse_drift = solve_riccati(ch, H0, Y0, o).c0_drift();
  o.step = 0.5 * coarse_step;
  c.fine_drift = solve_riccati(ch, H0, Y0, o).c0_drift();
  c.halving_order = std::log2(c.coarse_drift / c.fine_drift);
  c.seconds = since(t0);
  return c;
}

CsvTable covector_table(const std::vector<double>& r0s, const std::vector<double>& varsigmas) {
  CsvTable t;
  t.schema = "interaction_sum";
  t.columns = {"r0", "varsigma", "b", "sum_over_varsigma2", "target", "relative_error", "decomposition_residual"};
  for (double r0 : r0s)
    for (double vs : varsigmas) {
      const auto f = make_null_frame(r0, vs, 4);
      const double s = interaction_sum(f) / (vs * vs);
      const double target = 3.0 / (4.0 * f.b * f.b);
      t.add_row({r0, vs, f.b, s, target, std::abs(s - target) / target, f.decomposition_residual()});
    }
  return t;
}

CsvTable SlopeStudy::csv() const {
  CsvTable t;
  t.schema = "beam_residual";
  t.columns = {"order", "rho", "residual_l2"};
  for (size_t i = 0; i < rho.size(); ++i) t.add_row({static_cast<double>(order), rho[i], norm[i]});
  return t;
}

double residual_slope_target(int order) { return -((order + 1) / 2.0 - 1.0); }

SlopeStudy residual_slope_study(const WarpedMetric& g, const Vec& p, const Vec& xi, int order,
                                const std::vector<double>& rhos, const SlopeOptions& opt) {
  const auto t0 = Clock::now();
  const int m = g.dim() - 1;
  const auto ch = chart_through(g, p, xi);
  const CMat H0 = cplx(0.0, 1.0) * CMat::Identity(m, m);
  const auto r = solve_riccati(ch, H0, CMat::Identity(m, m));
  BeamOptions bo;
  bo.tau_lo = -3.0 * opt.window;
  bo.tau_hi = 3.0 * opt.window;
  const auto ph = build_phase(ch, r, order, bo);
  const auto am = build_amplitude(ph, r);
  SlopeStudy s;
  s.order = order;
  s.target = residual_slope_target(order);
  ResidualOptions ro;
  ro.tau_lo = -opt.window;
  ro.tau_hi = opt.window;
  ro.tau_points = opt.tau_points;
  ro.points_per_width = opt.points_per_width;
  ro.core_only = opt.core_only;
  for (double rho : rhos) {
    const auto rep = beam_residual(assemble_beam(ph, am, rho, 1.0, opt.delta), ro);
    s.rho.push_back(rho);
    s.norm.push_back(opt.core_only ? rep.core_norm : rep.norm);
  }
  s.slope = loglog_slope(s.rho, s.norm);
  s.seconds = since(t0);
  return s;
}

CsvTable OrderStudy::csv(const std::string& schema) const {
  CsvTable t;
  t.schema = schema;
  t.columns = {"cells", "error"};
  for (size_t i = 0; i < cells.size(); ++i) t.add_row({static_cast<double>(cells[i]), error[i]});
  return t;
}

OrderStudy manufactured_study(const WarpedMetric& g, const std::vector<int>& cells, double horizon, double omega) {
  const auto t0 = Clock::now();
  const int d = g.dim(), n = d - 1;
  OrderStudy st;
  auto exact = [&](const Vec& x) {
    double u = std::cos(omega * x[0]);
    for (int i = 1; i < d; ++i) u *= std::cos(kPi * x[i]);
    return u;
  };
  for (int c : cells) {
    const auto grid = SpacetimeGrid::with_courant(g, c, horizon, 0.8);
    std::vector<double> F(grid.field_size());
    std::vector<double> bg(d), bh(d * d), cg(d), chh(d * d);
    for (size_t p = 0; p < F.size(); ++p) {
      const size_t i = p % grid.spatial_nodes();
      const int k = static_cast<int>(p / grid.spatial_nodes());
      const Vec x = grid.point(i, k);
      double beta, conf;
      g.lapse_jet(x.data(), beta, bg.data(), bh.data());
      g.conformal_jet(x.data(), conf, cg.data(), chh.data());
      // Box u = sum_mu g^{mu mu} (d_mu^2 u + L_mu d_mu u) for the diagonal metric
      const double u = exact(x);
      double box = 0.0;
      for (int mu = 0; mu < d; ++mu) {
        double du, ddu;
        if (mu == 0) {
          double space = 1.0;
          for (int j = 1; j < d; ++j) space *= std::cos(kPi * x[j]);
          du = -omega * std::sin(omega * x[0]) * space;
          ddu = -omega * omega * u;
        } else {
          double rest = std::cos(omega * x[0]);
          for (int j = 1; j < d; ++j)
            if (j != mu) rest *= std::cos(kPi * x[j]);
          du = -kPi * std::sin(kPi * x[mu]) * rest;
          ddu = -kPi * kPi * u;
        }
        const double ginv = mu == 0 ? -1.0 / beta : 1.0 / conf;
        const double L = mu == 0 ? 0.5 * n * cg[0] / conf - 0.5 * bg[0] / beta
                                 : 0.5 * bg[mu] / beta + (0.5 * n - 1.0) * cg[mu] / conf;
        box += ginv * (ddu + L * du);
      }
      F[p] = box;
    }
    InitialData init;
    init.u0.resize(grid.spatial_nodes());
    init.u1.assign(grid.spatial_nodes(), 0.0);
    for (size_t i = 0; i < grid.spatial_nodes(); ++i) init.u0[i] = exact(grid.point(i, 0));
    const auto sol = solve_linear(g, grid, &F, NeumannSource::zero(grid), TimeMode::forward, &init);
    double err = 0.0;
    const int kT = grid.steps();
    for (size_t i = 0; i < grid.spatial_nodes(); ++i) err = std::max(err, std::abs(sol.at(grid, kT, i) - exact(grid.point(i, kT))));
    st.cells.push_back(c);
    st.error.push_back(err);
  }
  st.order = order_of(st.cells, st.error);
  st.seconds = since(t0);
  return st;
}

NeumannSource pulse_source(const SpacetimeGrid& grid, int face, double t0, double s0, double width2) {
  if (face < 0 || face >= grid.faces()) throw DomainError("pulse_source: no such face");
  const int axis = face / 2 + 1;
  const int other = axis == 1 ? 2 : 1;
  return sample_source(grid, [&](int f, const Vec& x) {
    if (f != face) return 0.0;
    double r2 = (x[0] - t0) * (x[0] - t0) + (x[other] - s0) * (x[other] - s0);
    for (int j = 1; j < grid.dim(); ++j)
      if (j != axis && j != other) r2 += (x[j] - 0.5) * (x[j] - 0.5);
    return std::exp(-r2 / width2);
  });
}

OrderStudy reciprocity_study(const WarpedMetric& g, const std::vector<int>& cells, double horizon) {
  const auto t0 = Clock::now();
  OrderStudy st;
  for (int c : cells) {
    const auto grid = SpacetimeGrid::with_courant(g, c, horizon, 0.8);
    const auto f = pulse_source(grid, 0, 0.3 * horizon, 0.5);
    const auto h = pulse_source(grid, 2, 0.7 * horizon, 0.4);
    const auto u = solve_linear(g, grid, nullptr, f, TimeMode::forward);
    const auto v = solve_linear(g, grid, nullptr, h, TimeMode::backward);
    const double a = boundary_pairing(g, grid, f.values, v.trace.values, FaceRule::midpoint);
    const double b = boundary_pairing(g, grid, u.trace.values, h.values, FaceRule::midpoint);
    st.cells.push_back(c);
    st.error.push_back(std::abs(a - b) / std::max(std::abs(a), 1e-300));
  }
  st.order = order_of(st.cells, st.error);
  st.seconds = since(t0);
  return st;
}

CsvTable PicardStudy::csv() const {
  CsvTable t;
  t.schema = "picard";
  t.columns = {"iteration", "distance", "ratio"};
  for (size_t i = 0; i < distances.size(); ++i)
    t.add_row({static_cast<double>(i + 1), distances[i], i >= 1 && i - 1 < ratios.size() ? ratios[i - 1] : 0.0});
  return t;
}

PicardStudy picard_study(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                         const NeumannSource& shape, double fraction, int min_iterations) {
  const auto t0 = Clock::now();
  PicardStudy s;
  s.scale = fraction * smallness_threshold(g, grid, H, shape, 0.5);
  SemilinearOptions o;
  o.tol = 0.0;
  o.min_iterations = min_iterations;
  const auto r = solve_semilinear(g, grid, H, shape.scaled(s.scale), o);
  s.distances = r.distances;
  s.ratios = r.ratios;
  s.iterations = r.iterations;
  s.max_ratio = r.max_ratio();
  // geometric: five or more consecutive contractions with the ratio below one
  int run = 0, best = 0;
  for (double q : s.ratios) {
    run = q < 1.0 ? run + 1 : 0;
    best = std::max(best, run);
  }
  s.geometric = best >= 5 && s.max_ratio < 1.0;
  s.seconds = since(t0);
  return s;
}

nlohmann::json LinearizationCheck::to_json() const {
  return {{"relative_difference", relative_difference}, {"max_node_ratio", max_node_ratio}, {"seconds", seconds}};
}

LinearizationCheck linearization_check(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                                       const std::vector<NeumannSource>& sources, const MultiIndex& beta, double eps,
                                       int workers) {
  const auto t0 = Clock::now();
  MixedDerivativeOptions mo;
  mo.workers = workers;
  const auto fd = mixed_derivative_ndmap(g, grid, H, sources, make_stencil(beta, eps), mo);
  const auto cs = cascade_solve(g, grid, H, sources, beta);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < fd.trace.values.size(); ++i) {
    const double d = fd.trace.values[i] - cs.field.trace.values[i];
    num += d * d;
    den += cs.field.trace.values[i] * cs.field.trace.values[i];
  }
  LinearizationCheck c;
  c.relative_difference = std::sqrt(num / std::max(den, 1e-300));
  for (double q : fd.node_ratios) c.max_node_ratio = std::max(c.max_node_ratio, q);
  c.seconds = since(t0);
  return c;
}

}  // namespace beamlab
