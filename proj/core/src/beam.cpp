#include <cmath>

#include <Eigen/Eigenvalues>

#include "beamlab/beams.hpp"
#include "beamlab/error.hpp"

namespace beamlab {

void cutoff(double t, double& c, double& dc, double& ddc) {
  const double at = std::abs(t);
  c = dc = ddc = 0.0;
  if (at >= 0.5) return;
  if (at <= 0.25) {
    c = 1.0;
    return;
  }
  // psi(s) = f(s) / (f(s) + f(1 - s)), f(x) = exp(-1/x), s = (1/2 - |t|) / (1/4)
  const double s = (0.5 - at) * 4.0;
  auto f = [](double x) { return std::exp(-1.0 / x); };
  auto f1 = [&](double x) { return f(x) / (x * x); };
  auto f2 = [&](double x) { return f(x) * (1.0 / (x * x * x * x) - 2.0 / (x * x * x)); };
  const double A = f(s), B = f(1.0 - s);
  const double A1 = f1(s), B1 = -f1(1.0 - s);
  const double A2 = f2(s), B2 = f2(1.0 - s);
  const double S = A + B, S1 = A1 + B1;
  const double N = A1 * B - A * B1;
  const double N1 = A2 * B - A * B2;
  const double psi = A / S;
  const double psi1 = N / (S * S);
  const double psi2 = N1 / (S * S) - 2.0 * N * S1 / (S * S * S);
  const double ds = t >= 0 ? -4.0 : 4.0;
  c = psi;
  dc = psi1 * ds;
  ddc = psi2 * 16.0;
}

namespace {

// Phase and amplitude polynomials frozen at one tau, with the z-derivatives needed for Box.
struct Slice {
  int m = 0;
  Poly phi, phit, phitt, A, At, Att;
  std::vector<Poly> phia, phita, Aa, Ata;
  std::vector<std::vector<Poly>> phiab, Aab;

  Slice(const GaussianBeam& b, double tau) {
    const auto& T = b.phase().table();
    m = T.chart->m();
    b.phase().field().at(T, tau, phi, phit, phitt);
    const double rho = b.rho_eff();
    const auto& amp = b.amplitude();
    A = Poly(T.basis);
    At = Poly(T.basis);
    Att = Poly(T.basis);
    double scale = 1.0;
    for (int k = 0; k < amp.terms(); ++k) {
      Poly v, vt, vtt;
      amp.field(k).at(T, tau, v, vt, vtt);
      A += v * cplx(scale);
      At += vt * cplx(scale);
      Att += vtt * cplx(scale);
      scale /= rho;
    }
    for (int a = 0; a < m; ++a) {
      phia.push_back(phi.derivative(a));
      phita.push_back(phit.derivative(a));
      Aa.push_back(A.derivative(a));
      Ata.push_back(At.derivative(a));
    }
    phiab.resize(m);
    Aab.resize(m);
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c) {
        phiab[a].push_back(phia[a].derivative(c));
        Aab[a].push_back(Aa[a].derivative(c));
      }
  }
};

// values and chart derivatives (first and second) of phi and of the cut-off amplitude at z
struct Point {
  cplx phi;
  CVec dphi, damp;
  CMat ddphi, ddamp;
  cplx amp;
  double r = 0.0;
};

bool eval_point(const Slice& S, double delta, const Vec& z, bool second, Point& p) {
  const int m = S.m, d = m + 1;
  p.r = z.norm();
  if (p.r >= 0.5 * delta) return false;
  double q, q1, q2;
  cutoff(p.r / delta, q, q1, q2);
  q1 /= delta;
  q2 /= delta * delta;
  Vec qa = Vec::Zero(m);
  Mat qab = Mat::Zero(m, m);
  if (q1 != 0.0 || q2 != 0.0) {
    const Vec u = z / p.r;
    qa = q1 * u;
    qab = q2 * u * u.transpose() + (q1 / p.r) * (Mat::Identity(m, m) - u * u.transpose());
  }
  const double* zp = z.data();
  const cplx A = S.A.eval(zp);
  p.phi = S.phi.eval(zp);
  p.amp = q * A;
  p.dphi.resize(d);
  p.damp.resize(d);
  p.dphi[0] = S.phit.eval(zp);
  const cplx At = S.At.eval(zp);
  p.damp[0] = q * At;
  CVec Aa(m);
  for (int a = 0; a < m; ++a) {
    p.dphi[1 + a] = S.phia[a].eval(zp);
    Aa[a] = S.Aa[a].eval(zp);
    p.damp[1 + a] = qa[a] * A + q * Aa[a];
  }
  if (!second) return true;
  p.ddphi.resize(d, d);
  p.ddamp.resize(d, d);
  p.ddphi(0, 0) = S.phitt.eval(zp);
  p.ddamp(0, 0) = q * S.Att.eval(zp);
  for (int a = 0; a < m; ++a) {
    p.ddphi(0, 1 + a) = p.ddphi(1 + a, 0) = S.phita[a].eval(zp);
    p.ddamp(0, 1 + a) = p.ddamp(1 + a, 0) = qa[a] * At + q * S.Ata[a].eval(zp);
    for (int c = 0; c < m; ++c) {
      p.ddphi(1 + a, 1 + c) = S.phiab[a][c].eval(zp);
      p.ddamp(1 + a, 1 + c) = qab(a, c) * A + qa[a] * Aa[c] + qa[c] * Aa[a] + q * S.Aab[a][c].eval(zp);
    }
  }
  return true;
}

// exact chart metric, first-order coefficients V and log sqrt|det G| at (tau, z)
struct Geometry {
  Mat Gi;
  Vec V;
  double logsq = 0.0;
};

Geometry geometry_at(const FermiChart& ch, double tau, const Vec& z) {
  Geometry g;
  const int d = ch.dim();
  g.Gi = ch.chart_inverse_metric(tau, z);
  g.logsq = ch.chart_log_sqrt_det(tau, z);
  g.V = Vec::Zero(d);
  if (ch.flat()) return g;
  const double eta = 1e-3;
  Vec dl(d);
  std::vector<Mat> dG(d);
  for (int mu = 0; mu < d; ++mu) {
    Mat acc = Mat::Zero(d, d);
    double al = 0.0;
    const double c[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
    const double o[4] = {-2.0, -1.0, 1.0, 2.0};
    for (int q = 0; q < 4; ++q) {
      double t = tau;
      Vec zz = z;
      if (mu == 0)
        t += o[q] * eta;
      else
        zz[mu - 1] += o[q] * eta;
      acc += c[q] * ch.chart_inverse_metric(t, zz);
      al += c[q] * ch.chart_log_sqrt_det(t, zz);
    }
    dG[mu] = acc / eta;
    dl[mu] = al / eta;
  }
  for (int nu = 0; nu < d; ++nu) {
    double v = 0.0;
    for (int mu = 0; mu < d; ++mu) v += dG[mu](mu, nu) + g.Gi(mu, nu) * dl[mu];
    g.V[nu] = v;
  }
  return g;
}

// envelope R with Box u = e^{i rho phi} R
cplx envelope(const Geometry& G, const Point& p, double rho) {
  const CMat Gi = G.Gi.cast<cplx>();
  const cplx S = p.dphi.transpose() * Gi * p.dphi;
  const cplx cross = p.dphi.transpose() * Gi * p.damp;
  const int d = static_cast<int>(G.V.size());
  cplx boxphi = 0.0, boxamp = 0.0;
  for (int mu = 0; mu < d; ++mu) {
    for (int nu = 0; nu < d; ++nu) {
      boxphi += G.Gi(mu, nu) * p.ddphi(mu, nu);
      boxamp += G.Gi(mu, nu) * p.ddamp(mu, nu);
    }
    boxphi += G.V[mu] * p.dphi[mu];
    boxamp += G.V[mu] * p.damp[mu];
  }
  const cplx I(0.0, 1.0);
  return -rho * rho * S * p.amp + I * rho * (2.0 * cross + boxphi * p.amp) + boxamp;
}

double min_eig_imag(const Poly& p2, int m) {
  const BasisPtr& b = p2.basis();
  Mat M(m, m);
  std::vector<int> al(m);
  for (int a = 0; a < m; ++a)
    for (int c = a; c < m; ++c) {
      std::fill(al.begin(), al.end(), 0);
      al[a] += 1;
      al[c] += 1;
      const double v = p2[b->index(al.data())].imag();
      M(a, c) = M(c, a) = a == c ? v : 0.5 * v;
    }
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace

GaussianBeam::GaussianBeam(BeamPhase phase, BeamAmplitude amp, double rho, double kappa, double delta)
    : phase_(std::move(phase)), amp_(std::move(amp)), rho_(rho), kappa_(kappa), delta_(delta) {
  if (!(rho > 0.0)) throw DomainError("assemble_beam: rho must be positive");
  if (kappa == 0.0) throw DomainError("assemble_beam: kappa must be nonzero");
  if (!(delta > 0.0)) throw DomainError("assemble_beam: delta must be positive");
  const auto& ch = chart();
  double emax = 0.0;
  for (double t = phase_.tau_min(); t <= phase_.tau_max() + 1e-12; t += 0.01) {
    axis_tau_.push_back(t);
    axis_pts_.push_back(ch.axis_point(t));
    for (int a = 0; a < ch.m(); ++a) emax = std::max(emax, ch.frame(t, a).norm());
  }
  double vmax = 0.0;
  for (double t : axis_tau_) vmax = std::max(vmax, ch.axis_velocity(t).norm());
  reach_ = 0.5 * delta * emax * 1.5 + 0.01 * vmax;
}

GaussianBeam assemble_beam(const BeamPhase& phase, const BeamAmplitude& amp, double rho, double kappa, double delta) {
  return GaussianBeam(phase, amp, rho, kappa, delta);
}

BeamSample GaussianBeam::chart_sample(double tau, const Vec& z) const {
  const int d = chart().dim();
  BeamSample s{cplx(0.0), CVec::Zero(d)};
  if (z.norm() >= 0.5 * delta_) return s;
  const Slice S(*this, tau);
  Point p;
  eval_point(S, delta_, z, false, p);
  const double rho = rho_eff();
  const cplx e = std::exp(cplx(0.0, rho) * p.phi);
  s.u = p.amp * e;
  s.grad = e * (p.damp + cplx(0.0, rho) * p.amp * p.dphi);
  if (kappa_ < 0.0) {
    s.u = std::conj(s.u);
    s.grad = s.grad.conjugate();
  }
  return s;
}

std::optional<std::pair<double, Vec>> locate(const GaussianBeam& b, const Vec& x) {
  double best = 1e300;
  size_t at = 0;
  for (size_t i = 0; i < b.axis_pts_.size(); ++i) {
    const double r = (b.axis_pts_[i] - x).norm();
    if (r < best) {
      best = r;
      at = i;
    }
  }
  if (best > b.reach_) return std::nullopt;
  double tau;
  Vec z;
  if (!b.chart().inverse(x, tau, z)) {
    // past either end of the tube the chart may legitimately stop
    if (at == 0 || at + 1 == b.axis_pts_.size()) return std::nullopt;
    throw DomainError("beam: point near the tube is outside the chart");
  }
  if (tau < b.phase().tau_min() || tau > b.phase().tau_max()) return std::nullopt;
  return std::make_pair(tau, z);
}

cplx GaussianBeam::evaluate(const Vec& x) const {
  const auto loc = locate(*this, x);
  if (!loc) return 0.0;
  return evaluate_chart(loc->first, loc->second);
}

std::optional<std::pair<cplx, CVec>> GaussianBeam::evaluate_with_gradient(const Vec& x) const {
  const auto loc = locate(*this, x);
  if (!loc || loc->second.norm() >= 0.5 * delta_) return std::nullopt;
  const BeamSample s = chart_sample(loc->first, loc->second);
  Vec X;
  Mat J;
  chart().map_jacobian(loc->first, loc->second, X, J);
  // d/d(tau, z) = J^T d/dx
  const CVec gx = J.transpose().cast<cplx>().partialPivLu().solve(s.grad);
  return std::make_pair(s.u, gx);
}

double GaussianBeam::width(double tau_lo, double tau_hi) const {
  const auto& T = phase_.table();
  double lam = 1e300;
  for (int i = 0; i < T.count(); ++i) {
    const double t = T.tau(i);
    if (t < tau_lo - 1e-12 || t > tau_hi + 1e-12) continue;
    lam = std::min(lam, min_eig_imag(phase_.field().v[i].degree_part(2), T.chart->m()));
  }
  if (!(lam > 0.0 && lam < 1e299)) throw NumericalError("beam: Im H is not positive on the window");
  return 1.0 / std::sqrt(rho_eff() * lam);
}

nlohmann::json GaussianBeam::metadata() const {
  const auto& ch = chart();
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["order"] = phase_.order();
  j["rho"] = rho_;
  j["kappa"] = kappa_;
  j["delta"] = delta_;
  j["base_point"] = vec(ch.base_point());
  j["tau_window"] = {phase_.tau_min(), phase_.tau_max()};
  j["axis_start"] = vec(ch.axis_point(phase_.tau_min()));
  j["axis_end"] = vec(ch.axis_point(phase_.tau_max()));
  j["a00_ode_deviation"] = amp_.a00_ode_deviation();
  return j;
}

ResidualReport beam_residual(const GaussianBeam& beam, const ResidualOptions& opt) {
  if (opt.norm_order < 0 || opt.norm_order > 1) throw DomainError("beam_residual: norm order must be 0 or 1");
  if (opt.tau_points < 3 || opt.tau_points % 2 == 0) throw DomainError("beam_residual: tau_points must be odd and >= 3");
  // ten samples per envelope wavelength 2 pi w
  if (opt.points_per_width < 10.0 / (2.0 * kPi)) throw DomainError("beam_residual: quadrature under-resolves the beam");
  const double tlo = std::max(opt.tau_lo, beam.phase().tau_min());
  const double thi = std::min(opt.tau_hi, beam.phase().tau_max());
  if (!(thi > tlo)) throw DomainError("beam_residual: empty tau window");
  const auto& ch = beam.chart();
  const int m = ch.m();
  const double rho = beam.rho_eff();
  const double w = beam.width(tlo, thi);
  const double hz = w / opt.points_per_width;
  const double radius = (opt.core_only ? 0.25 : 0.5) * beam.delta();
  const double ext = std::min(opt.extent_widths * w, radius);
  const int nz = static_cast<int>(std::ceil(ext / hz));
  const int side = 2 * nz + 1;
  long total = 1;
  for (int a = 0; a < m; ++a) total *= side;
  const double ht = (thi - tlo) / (opt.tau_points - 1);
  const double eta_t = 0.25 * ht, eta_z = 0.25 * hz;
  const double vol = std::pow(hz, m);

  Geometry flatG;
  if (ch.flat()) flatG = geometry_at(ch, 0.0, Vec::Zero(m));
  auto geom = [&](double t, const Vec& z) { return ch.flat() ? flatG : geometry_at(ch, t, z); };
  auto Rat = [&](const Slice& S, double t, const Vec& z, cplx& R, cplx& phi, double* logsq) {
    Point p;
    if (!eval_point(S, beam.delta(), z, true, p)) return false;
    const Geometry G = geom(t, z);
    R = envelope(G, p, rho);
    phi = p.phi;
    if (logsq) *logsq = G.logsq;
    return true;
  };

  double sum = 0.0, shell = 0.0, core = 0.0;
  for (int it = 0; it < opt.tau_points; ++it) {
    const double t = tlo + it * ht;
    const double wt = ht / 3.0 * (it == 0 || it == opt.tau_points - 1 ? 1.0 : (it % 2 ? 4.0 : 2.0));
    const Slice S(beam, t);
    std::vector<Slice> St;
    if (opt.norm_order == 1)
      for (double o : {-2.0, -1.0, 1.0, 2.0}) St.emplace_back(beam, std::clamp(t + o * eta_t, beam.phase().tau_min(), beam.phase().tau_max()));
    Vec z(m);
    for (long q = 0; q < total; ++q) {
      long r = q;
      for (int a = 0; a < m; ++a) {
        z[a] = (static_cast<int>(r % side) - nz) * hz;
        r /= side;
      }
      if (z.norm() >= radius) continue;
      cplx R, phi;
      double logsq = 0.0;
      if (!Rat(S, t, z, R, phi, &logsq)) continue;
      const double damp = std::exp(-2.0 * rho * phi.imag());
      double val = std::norm(R) * damp;
      if (opt.norm_order == 1) {
        // |d_mu (e^{i rho phi} R)|^2 = |d_mu R + i rho phi_mu R|^2 e^{-2 rho Im phi}
        Point p;
        eval_point(S, beam.delta(), z, false, p);
        const double c[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
        const double o[4] = {-2.0, -1.0, 1.0, 2.0};
        for (int mu = 0; mu <= m; ++mu) {
          cplx dR = 0.0;
          for (int k = 0; k < 4; ++k) {
            cplx Rk = 0.0, ph;
            if (mu == 0) {
              Rat(St[k], t + o[k] * eta_t, z, Rk, ph, nullptr);
            } else {
              Vec zz = z;
              zz[mu - 1] += o[k] * eta_z;
              Rat(S, t, zz, Rk, ph, nullptr);
            }
            dR += c[k] * Rk;
          }
          dR /= (mu == 0 ? eta_t : eta_z);
          val += std::norm(dR + cplx(0.0, rho) * p.dphi[mu] * R) * damp;
        }
      }
      const double contrib = wt * vol * std::exp(logsq) * val;
      sum += contrib;
      if (z.norm() >= 0.25 * beam.delta()) shell += contrib;
      else core += contrib;
    }
  }
  ResidualReport rep;
  rep.norm = std::sqrt(sum);
  rep.core_norm = std::sqrt(core);
  rep.shell_fraction = sum > 0.0 ? shell / sum : 0.0;
  rep.width = w;
  rep.points = static_cast<int>(total) * opt.tau_points;
  return rep;
}

BeamSourceReport beam_neumann_source(const GaussianBeam& beam, const WarpedMetric& g, const SpacetimeGrid& grid,
                                     const SourceOptions& opt) {
  BeamSourceReport rep;
  rep.source = NeumannSource::zero(grid);
  rep.source.imag.assign(grid.boundary_size(), 0.0);
  const size_t fn = grid.face_nodes();
  const size_t nb = grid.boundary_nodes();
  double peak = 0.0;
  for (int k = 0; k <= grid.steps(); ++k)
    for (int face = 0; face < grid.faces(); ++face)
      for (size_t j = 0; j < fn; ++j) {
        const Vec x = grid.boundary_point(face, j, k);
        const auto v = beam.evaluate_with_gradient(x);
        if (!v) continue;
        const int axis = face / 2;
        const double sign = face % 2 == 0 ? -1.0 : 1.0;
        const cplx dn = sign * v->second[1 + axis] / std::sqrt(g.conformal(x.data()));
        const size_t p = k * nb + face * fn + j;
        rep.source.values[p] = dn.real();
        rep.source.imag[p] = dn.imag();
        peak = std::max(peak, std::abs(dn));
      }
  // footprint: nodes above a relative floor, so Gaussian tails do not trip the margin check
  double wsum = 0.0;
  rep.footprint_center = Vec::Zero(grid.dim());
  rep.t_first = 1e300;
  rep.t_last = -1e300;
  for (int k = 0; k <= grid.steps(); ++k)
    for (int face = 0; face < grid.faces(); ++face)
      for (size_t j = 0; j < fn; ++j) {
        const size_t p = k * nb + face * fn + j;
        const double a = std::hypot(rep.source.values[p], rep.source.imag[p]);
        if (peak == 0.0 || a < kFootprintFloor * peak) continue;
        const Vec x = grid.boundary_point(face, j, k);
        rep.footprint_nodes++;
        rep.t_first = std::min(rep.t_first, x[0]);
        rep.t_last = std::max(rep.t_last, x[0]);
        rep.footprint_center += a * x;
        wsum += a;
      }
  if (rep.footprint_nodes == 0) {
    rep.t_first = rep.t_last = 0.0;
    return rep;
  }
  rep.footprint_center /= wsum;
  // forward beams must vanish near t = 0, backward ones near t = T
  if (!opt.backward && rep.t_first < opt.margin)
    throw DomainError("beam_neumann_source: footprint overlaps the t = 0 margin");
  if (opt.backward && rep.t_last > grid.horizon() - opt.margin)
    throw DomainError("beam_neumann_source: footprint overlaps the t = T margin");
  const double width =
      opt.ramp_width > 0.0 ? opt.ramp_width : 0.5 * (opt.backward ? grid.horizon() - rep.t_last : rep.t_first);
  apply_temporal_ramp(grid, rep.source, width, !opt.backward);
  return rep;
}

std::vector<cplx> sample_beam(const GaussianBeam& beam, const SpacetimeGrid& grid) {
  std::vector<cplx> out(grid.field_size(), cplx(0.0));
  const size_t n = grid.spatial_nodes();
  for (int k = 0; k <= grid.steps(); ++k)
    for (size_t i = 0; i < n; ++i) out[static_cast<size_t>(k) * n + i] = beam.evaluate(grid.point(i, k));
  return out;
}

}  // namespace beamlab
