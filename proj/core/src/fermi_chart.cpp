#include <algorithm>
#include <cmath>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab {

namespace {

struct FrameState {
  Vec x, v;
  std::vector<Vec> E;
};

// Gamma(u, w)^l = Gamma^l_{mn} u^m w^n
Vec gamma_apply(const std::vector<double>& G, int d, const Vec& u, const Vec& w) {
  Vec r = Vec::Zero(d);
  for (int l = 0; l < d; ++l) {
    double s = 0.0;
    for (int m = 0; m < d; ++m) {
      if (u[m] == 0.0) continue;
      for (int n = 0; n < d; ++n) s += G[(l * d + m) * d + n] * u[m] * w[n];
    }
    r[l] = s;
  }
  return r;
}

FrameState frame_rhs(const WarpedMetric& g, const FrameState& s) {
  const int d = g.dim();
  FrameState r;
  std::vector<double> G(d * d * d);
  g.christoffel(s.x.data(), G.data());
  r.x = s.v;
  r.v = -gamma_apply(G, d, s.v, s.v);
  r.E.resize(s.E.size());
  for (size_t a = 0; a < s.E.size(); ++a) r.E[a] = -gamma_apply(G, d, s.v, s.E[a]);
  return r;
}

FrameState axpy(const FrameState& s, double h, const FrameState& k) {
  FrameState r;
  r.x = s.x + h * k.x;
  r.v = s.v + h * k.v;
  r.E.resize(s.E.size());
  for (size_t a = 0; a < s.E.size(); ++a) r.E[a] = s.E[a] + h * k.E[a];
  return r;
}

void frame_rk4(const WarpedMetric& g, FrameState& s, double h) {
  const FrameState k1 = frame_rhs(g, s);
  const FrameState k2 = frame_rhs(g, axpy(s, 0.5 * h, k1));
  const FrameState k3 = frame_rhs(g, axpy(s, 0.5 * h, k2));
  const FrameState k4 = frame_rhs(g, axpy(s, h, k3));
  s.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  s.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  for (size_t a = 0; a < s.E.size(); ++a) s.E[a] += h / 6.0 * (k1.E[a] + 2.0 * k2.E[a] + 2.0 * k3.E[a] + k4.E[a]);
}

// Restore g(v,N) = 1, N null, E_a orthonormal and orthogonal to v and N.
void reorthonormalize(const WarpedMetric& g, FrameState& s) {
  auto dot = [&](const Vec& a, const Vec& b) { return metric_dot(g, s.x, a, b); };
  Vec& N = s.E[0];
  N /= dot(s.v, N);
  N -= 0.5 * dot(N, N) * s.v;
  for (size_t a = 1; a < s.E.size(); ++a) {
    Vec& X = s.E[a];
    X -= dot(X, N) * s.v + dot(X, s.v) * N;
    for (size_t b = 1; b < a; ++b) X -= dot(X, s.E[b]) * s.E[b];
    X /= std::sqrt(dot(X, X));
  }
}

FrameState initial_frame(const WarpedMetric& g, const Vec& p, const Vec& v) {
  const int d = g.dim();
  const double beta = g.lapse(p.data()), c = g.conformal(p.data());
  const double c0 = v[0] * std::sqrt(beta);
  if (!(c0 > 0.0)) throw DomainError("build_fermi_chart: geodesic must be future pointing");
  Vec n = v.tail(d - 1) * std::sqrt(c) / c0;  // unit spatial direction in the orthonormal frame
  FrameState s;
  s.x = p;
  s.v = v;
  Vec N(d);
  N[0] = -1.0 / std::sqrt(beta);
  N.tail(d - 1) = n / std::sqrt(c);
  N /= 2.0 * c0;
  s.E.push_back(N);
  // transverse: orthonormal complement of n in R^{d-1}
  std::vector<Vec> basis;
  for (int i = 0; i < d - 1 && static_cast<int>(basis.size()) < d - 2; ++i) {
    Vec w = Vec::Zero(d - 1);
    w[i] = 1.0;
    w -= w.dot(n) * n;
    for (const auto& b : basis) w -= w.dot(b) * b;
    if (w.norm() < 1e-6) continue;
    w.normalize();
    basis.push_back(w);
  }
  if (static_cast<int>(basis.size()) != d - 2) throw NumericalError("build_fermi_chart: frame degeneracy");
  for (const auto& w : basis) {
    Vec E = Vec::Zero(d);
    E.tail(d - 1) = w / std::sqrt(c);
    s.E.push_back(E);
  }
  reorthonormalize(g, s);
  return s;
}

std::vector<FrameState> integrate_frame(const WarpedMetric& g, FrameState s, double h, double cap, int every) {
  std::vector<FrameState> out;
  out.push_back(s);
  int k = 0;
  while (std::abs(k * h) < cap) {
    frame_rk4(g, s, h);
    ++k;
    if (every > 0 && k % every == 0) reorthonormalize(g, s);
    out.push_back(s);
    if (!g.in_extended_domain(s.x)) break;
  }
  return out;
}

}  // namespace

int FermiChart::pair(int a, int b) const {
  if (a > b) std::swap(a, b);
  const int m = d_ - 1;
  return a * m - a * (a - 1) / 2 + (b - a);
}

FermiChart::Interp FermiChart::weights(double tau) const {
  if (tau < tau_min() - 1e-9 || tau > tau_max() + 1e-9)
    throw DomainError("FermiChart: tau = " + std::to_string(tau) + " outside chart range");
  Interp w;
  const double s = (tau - tau0_) / h_;
  int i0 = static_cast<int>(std::floor(s)) - 2;
  i0 = std::clamp(i0, 0, n_ - 6);
  w.i0 = i0;
  for (int j = 0; j < 6; ++j) {
    double num = 1.0, den = 1.0, dsum = 0.0;
    for (int k = 0; k < 6; ++k) {
      if (k == j) continue;
      num *= s - (i0 + k);
      den *= static_cast<double>(j - k);
    }
    // derivative of prod_{k != j} (s - s_k)
    for (int l = 0; l < 6; ++l) {
      if (l == j) continue;
      double p = 1.0;
      for (int k = 0; k < 6; ++k)
        if (k != j && k != l) p *= s - (i0 + k);
      dsum += p;
    }
    w.w[j] = num / den;
    w.dw[j] = dsum / den / h_;
  }
  return w;
}

Vec FermiChart::interp(const std::vector<Vec>& data, const Interp& w) const {
  Vec r = w.w[0] * data[w.i0];
  for (int j = 1; j < 6; ++j) r += w.w[j] * data[w.i0 + j];
  return r;
}

Vec FermiChart::axis_point(double tau) const { return interp(gam_, weights(tau)); }
Vec FermiChart::axis_velocity(double tau) const { return interp(vel_, weights(tau)); }
Vec FermiChart::frame(double tau, int a) const { return interp(E_[a], weights(tau)); }

Vec FermiChart::map(double tau, const Vec& z) const {
  const Interp w = weights(tau);
  const int m = d_ - 1;
  Vec X = interp(gam_, w);
  for (int a = 0; a < m; ++a) {
    if (z[a] == 0.0) continue;
    X += z[a] * interp(E_[a], w);
    for (int b = a; b < m; ++b) {
      const double f = a == b ? 0.5 : 1.0;
      X += f * z[a] * z[b] * interp(Q_[pair(a, b)], w);
    }
  }
  return X;
}

void FermiChart::map_jacobian(double tau, const Vec& z, Vec& X, Mat& J) const {
  const Interp w = weights(tau);
  const int m = d_ - 1;
  X = interp(gam_, w);
  J.resize(d_, d_);
  J.col(0) = interp(vel_, w);
  std::vector<Vec> Q(m * (m + 1) / 2), Qd(m * (m + 1) / 2);
  for (int p = 0; p < m * (m + 1) / 2; ++p) {
    Q[p] = interp(Q_[p], w);
    Qd[p] = interp(Qdot_[p], w);
  }
  for (int a = 0; a < m; ++a) {
    const Vec Ea = interp(E_[a], w);
    X += z[a] * Ea;
    J.col(0) += z[a] * interp(Edot_[a], w);
    J.col(1 + a) = Ea;
    for (int b = 0; b < m; ++b) {
      X += 0.5 * z[a] * z[b] * Q[pair(a, b)];
      J.col(0) += 0.5 * z[a] * z[b] * Qd[pair(a, b)];
      J.col(1 + a) += z[b] * Q[pair(a, b)];
    }
  }
}

bool FermiChart::inverse(const Vec& x, double& tau, Vec& z, double tol) const {
  // coarse nearest-sample search, then local refinement
  int best = 0;
  double bd = 1e300;
  const int stride = std::max(1, n_ / 200);
  for (int i = 0; i < n_; i += stride) {
    const double dd = (gam_[i] - x).squaredNorm();
    if (dd < bd) bd = dd, best = i;
  }
  for (int i = std::max(0, best - stride); i < std::min(n_, best + stride + 1); ++i) {
    const double dd = (gam_[i] - x).squaredNorm();
    if (dd < bd) bd = dd, best = i;
  }
  tau = sample_tau(best);
  z = Vec::Zero(d_ - 1);
  Vec X;
  Mat J;
  for (int it = 0; it < 30; ++it) {
    map_jacobian(tau, z, X, J);
    const Vec r = X - x;
    const Vec delta = J.partialPivLu().solve(r);
    tau -= delta[0];
    z -= delta.tail(d_ - 1);
    if (!std::isfinite(tau) || tau < tau_min() || tau > tau_max()) return false;
    if (delta.norm() < tol) {
      map_jacobian(tau, z, X, J);
      return (X - x).norm() < 1e3 * tol + 1e-12;
    }
  }
  return false;
}

template <class T>
void FermiChart::metric_at(double tau, const T* z, Eigen::Matrix<T, -1, -1>& G) const {
  const Interp w = weights(tau);
  const int m = d_ - 1;
  using VT = Eigen::Matrix<T, -1, 1>;
  VT X = interp(gam_, w).template cast<T>();
  Eigen::Matrix<T, -1, -1> J(d_, d_);
  J.col(0) = interp(vel_, w).template cast<T>();
  std::vector<Vec> Q(m * (m + 1) / 2), Qd(m * (m + 1) / 2);
  for (int p = 0; p < m * (m + 1) / 2; ++p) {
    Q[p] = interp(Q_[p], w);
    Qd[p] = interp(Qdot_[p], w);
  }
  for (int a = 0; a < m; ++a) {
    const Vec Ea = interp(E_[a], w);
    X += z[a] * Ea.template cast<T>();
    J.col(0) += z[a] * interp(Edot_[a], w).template cast<T>();
    J.col(1 + a) = Ea.template cast<T>();
    for (int b = 0; b < m; ++b) {
      X += T(0.5) * z[a] * z[b] * Q[pair(a, b)].template cast<T>();
      J.col(0) += T(0.5) * z[a] * z[b] * Qd[pair(a, b)].template cast<T>();
      J.col(1 + a) += z[b] * Q[pair(a, b)].template cast<T>();
    }
  }
  std::vector<T> gd(d_);
  g_->diagonal(X.data(), gd.data());
  G.resize(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = i; j < d_; ++j) {
      T s = T(0);
      for (int k = 0; k < d_; ++k) s += J(k, i) * gd[k] * J(k, j);
      G(i, j) = s;
      G(j, i) = s;
    }
}

Mat FermiChart::chart_metric(double tau, const Vec& z) const {
  Mat G;
  metric_at<double>(tau, z.data(), G);
  return G;
}

Mat FermiChart::chart_inverse_metric(double tau, const Vec& z) const { return chart_metric(tau, z).inverse(); }

double FermiChart::chart_log_sqrt_det(double tau, const Vec& z) const {
  return 0.5 * std::log(std::abs(chart_metric(tau, z).determinant()));
}

void FermiChart::complex_inverse_metric(double tau, const cplx* z, cplx* ginv_upper, cplx* logsqrt) const {
  CMat G;
  metric_at<cplx>(tau, z, G);
  const CMat Gi = G.inverse();
  int k = 0;
  for (int i = 0; i < d_; ++i)
    for (int j = i; j < d_; ++j) ginv_upper[k++] = Gi(i, j);
  // det G < 0 for a Lorentzian metric; -det stays near a positive real for small z
  *logsqrt = 0.5 * std::log(-G.determinant());
}

std::vector<Poly> FermiChart::taylor(double tau, const BasisPtr& basis) const {
  const int nf = d_ * (d_ + 1) / 2 + 1;
  if (flat()) {
    // the chart is affine, so the metric is constant in z
    std::vector<cplx> z(d_ - 1, cplx(0)), vals(nf);
    complex_inverse_metric(tau, z.data(), vals.data(), &vals[nf - 1]);
    std::vector<Poly> out;
    for (int q = 0; q < nf; ++q) out.push_back(Poly::constant(basis, vals[q]));
    return out;
  }
  return cauchy_taylor(
      basis, nf, [&](const cplx* z, cplx* out) { complex_inverse_metric(tau, z, out, &out[nf - 1]); },
      taylor_radius_, std::max(taylor_points_, basis->max_degree() + 4));
}

double FermiChart::axis_fidelity(int stride) const {
  double worst = 0.0;
  for (int i = 3; i < n_ - 3; i += stride) {
    double t;
    Vec z;
    if (!inverse(gam_[i], t, z)) return 1e300;
    worst = std::max({worst, std::abs(t - sample_tau(i)), z.norm()});
  }
  return worst;
}

FermiChart build_fermi_chart(const WarpedMetric& g, const NullGeodesic& gamma, const FermiOptions& opt) {
  const int d = g.dim();
  FermiChart ch;
  ch.g_store_ = std::make_shared<WarpedMetric>(g);
  ch.g_ = ch.g_store_.get();
  ch.d_ = d;
  ch.h_ = opt.step;
  ch.base_ = gamma.p;
  ch.taylor_radius_ = opt.taylor_radius;
  ch.taylor_points_ = opt.taylor_points;
  const int m = d - 1;

  const Vec v0 = sharp(g, gamma.p, gamma.xi);
  const FrameState s0 = initial_frame(g, gamma.p, v0);
  auto fwd = integrate_frame(g, s0, opt.step, opt.tau_cap, opt.reorthonormalize_every);
  auto bwd = integrate_frame(g, s0, -opt.step, opt.tau_cap, opt.reorthonormalize_every);
  std::vector<FrameState> all(bwd.rbegin(), bwd.rend());
  all.insert(all.end(), fwd.begin() + 1, fwd.end());
  ch.n_ = static_cast<int>(all.size());
  if (ch.n_ < 12) throw DomainError("build_fermi_chart: geodesic too short for a chart");
  ch.tau0_ = -opt.step * static_cast<double>(bwd.size() - 1);

  const int np = m * (m + 1) / 2;
  ch.E_.assign(m, {});
  ch.Edot_.assign(m, {});
  ch.Q_.assign(np, {});
  ch.Qdot_.assign(np, {});
  std::vector<double> G(d * d * d), dG(d * d * d * d);
  for (const auto& s : all) {
    ch.gam_.push_back(s.x);
    ch.vel_.push_back(s.v);
    g.christoffel_jet(s.x.data(), G.data(), dG.data());
    // dGamma along the axis: (v . d) Gamma
    std::vector<double> Gdot(d * d * d, 0.0);
    for (int q = 0; q < d * d * d; ++q)
      for (int r = 0; r < d; ++r) Gdot[q] += dG[q * d + r] * s.v[r];
    std::vector<Vec> Ed(m);
    for (int a = 0; a < m; ++a) {
      Ed[a] = -gamma_apply(G, d, s.v, s.E[a]);
      ch.E_[a].push_back(s.E[a]);
      ch.Edot_[a].push_back(Ed[a]);
    }
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        const int p = ch.pair(a, b);
        ch.Q_[p].push_back(-gamma_apply(G, d, s.E[a], s.E[b]));
        ch.Qdot_[p].push_back(-gamma_apply(Gdot, d, s.E[a], s.E[b]) - gamma_apply(G, d, Ed[a], s.E[b]) -
                              gamma_apply(G, d, s.E[a], Ed[b]));
      }
  }

  // tube self-overlap: points far apart in tau must stay more than 2 delta apart
  const int stride = 10;
  const double delta = opt.tube_halfwidth;
  for (int i = 0; i < ch.n_; i += stride)
    for (int j = i + stride; j < ch.n_; j += stride) {
      const double dtau = (j - i) * ch.h_;
      const double speed = std::min(ch.vel_[i].norm(), ch.vel_[j].norm());
      if (dtau * speed <= 4.0 * delta) continue;
      if ((ch.gam_[i] - ch.gam_[j]).norm() < 2.0 * delta)
        throw DomainError("build_fermi_chart: tube self-overlap along the geodesic");
    }
  return ch;
}

RiccatiData riccati_data(const FermiChart& chart, double tau) {
  if (tau < chart.tau_min() || tau > chart.tau_max()) throw DomainError("riccati_data: tau out of chart range");
  const int m = chart.m();
  const int d = chart.dim();
  RiccatiData r;
  r.C = Mat::Zero(m, m);
  for (int a = 1; a < m; ++a) r.C(a, a) = 2.0;
  r.D = Mat::Zero(m, m);
  if (chart.flat()) return r;
  // second-order coefficient of G^{11}(s v) on a circle in s, for a few directions v
  const int nf = d * (d + 1) / 2 + 1;
  const int M = std::max(6, chart.taylor_points() / 2);
  const double rad = chart.taylor_radius();
  std::vector<cplx> all(nf), z(m);
  auto c2 = [&](int a, int c) {
    cplx acc = 0.0;
    for (int j = 0; j < M; ++j) {
      const cplx w = std::polar(1.0, 2.0 * kPi * j / M);
      std::fill(z.begin(), z.end(), cplx(0.0));
      z[a] += rad * w;
      if (c >= 0) z[c] += rad * w;
      chart.complex_inverse_metric(tau, z.data(), all.data(), &all[nf - 1]);
      acc += all[d] / (w * w);
    }
    return acc.real() / (M * rad * rad);
  };
  std::vector<double> diag(m);
  for (int a = 0; a < m; ++a) {
    diag[a] = c2(a, -1);
    r.D(a, a) = 0.5 * diag[a];
  }
  for (int a = 0; a < m; ++a)
    for (int c = a + 1; c < m; ++c) r.D(a, c) = r.D(c, a) = 0.25 * (c2(a, c) - diag[a] - diag[c]);
  return r;
}

}  // namespace beamlab
