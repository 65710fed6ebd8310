#include "beamlab/metric.hpp"

#include <algorithm>

#include "beamlab/error.hpp"

namespace beamlab {

void Bump::jet(const double* x, double& v, double* grad, double* hess) const {
  const int n = static_cast<int>(center.size());
  v = value(x);
  const double w2 = width * width;
  for (int i = 0; i < n; ++i) grad[i] = -2.0 * (x[i] - center[i]) / w2 * v;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double h = 4.0 * (x[i] - center[i]) * (x[j] - center[j]) / (w2 * w2);
      if (i == j) h -= 2.0 / w2;
      hess[i * n + j] = h * v;
    }
}

MetricPreset metric_preset_from_name(const std::string& name) {
  if (name == "minkowski") return MetricPreset::minkowski;
  if (name == "lapse_bump") return MetricPreset::lapse_bump;
  if (name == "conformal_bump") return MetricPreset::conformal_bump;
  throw ConfigError("unknown metric preset '" + name + "' (expected minkowski, lapse_bump, conformal_bump)");
}

std::string metric_preset_name(MetricPreset p) {
  switch (p) {
    case MetricPreset::minkowski: return "minkowski";
    case MetricPreset::lapse_bump: return "lapse_bump";
    case MetricPreset::conformal_bump: return "conformal_bump";
  }
  return "?";
}

WarpedMetric::WarpedMetric(int dim, MetricPreset p, Bump b) : dim_(dim), preset_(p), bump_(std::move(b)) {
  if (dim_ != 3 && dim_ != 4) throw DomainError("spacetime dimension must be 3 or 4");
  if (preset_ != MetricPreset::minkowski) {
    if (static_cast<int>(bump_.center.size()) != dim_)
      throw DomainError("metric bump center must have one entry per spacetime coordinate");
    if (!(bump_.width > 0.0)) throw DomainError("metric bump width must be positive");
    // keep beta and c bounded away from zero
    if (bump_.amplitude <= -0.9) throw DomainError("metric bump amplitude must exceed -0.9");
  }
}

WarpedMetric WarpedMetric::minkowski(int dim) { return WarpedMetric(dim, MetricPreset::minkowski, Bump{}); }
WarpedMetric WarpedMetric::lapse_bump(int dim, const Bump& b) { return WarpedMetric(dim, MetricPreset::lapse_bump, b); }
WarpedMetric WarpedMetric::conformal_bump(int dim, const Bump& b) {
  return WarpedMetric(dim, MetricPreset::conformal_bump, b);
}

namespace {
void constant_jet(int d, double c, double& v, double* grad, double* hess) {
  v = c;
  std::fill(grad, grad + d, 0.0);
  std::fill(hess, hess + d * d, 0.0);
}
}  // namespace

void WarpedMetric::lapse_jet(const double* x, double& v, double* grad, double* hess) const {
  if (preset_ != MetricPreset::lapse_bump) return constant_jet(dim_, 1.0, v, grad, hess);
  bump_.jet(x, v, grad, hess);
  v += 1.0;
}

void WarpedMetric::conformal_jet(const double* x, double& v, double* grad, double* hess) const {
  if (preset_ != MetricPreset::conformal_bump) return constant_jet(dim_, 1.0, v, grad, hess);
  bump_.jet(x, v, grad, hess);
  v += 1.0;
}

Mat WarpedMetric::metric(const Vec& x) const {
  std::vector<double> gd(dim_);
  diagonal(x.data(), gd.data());
  Mat g = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) g(i, i) = gd[i];
  return g;
}

Mat WarpedMetric::inverse(const Vec& x) const {
  std::vector<double> gd(dim_);
  diagonal(x.data(), gd.data());
  Mat g = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i) g(i, i) = 1.0 / gd[i];
  return g;
}

Mat WarpedMetric::spatial_metric(const Vec& x) const {
  return conformal(x.data()) * Mat::Identity(dim_ - 1, dim_ - 1);
}

double WarpedMetric::sqrt_abs_det(const Vec& x) const {
  return std::sqrt(lapse(x.data()) * std::pow(conformal(x.data()), dim_ - 1));
}

void WarpedMetric::christoffel(const double* x, double* gamma) const {
  const int d = dim_;
  std::fill(gamma, gamma + d * d * d, 0.0);
  if (is_flat()) return;
  std::vector<double> dgd(d * d), hb(d * d), hc(d * d), gb(d), gc(d);
  double b, c;
  lapse_jet(x, b, gb.data(), hb.data());
  conformal_jet(x, c, gc.data(), hc.data());
  // dgd[k*d + m] = d_m g_kk
  std::vector<double> gd(d);
  for (int k = 0; k < d; ++k) {
    gd[k] = k == 0 ? -b : c;
    for (int m = 0; m < d; ++m) dgd[k * d + m] = k == 0 ? -gb[m] : gc[m];
  }
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) {
        double s = 0.0;
        if (l == n) s += dgd[l * d + m];
        if (l == m) s += dgd[l * d + n];
        if (m == n) s -= dgd[m * d + l];
        gamma[(l * d + m) * d + n] = 0.5 * s / gd[l];
      }
}

void WarpedMetric::christoffel_jet(const double* x, double* gamma, double* dgamma) const {
  const int d = dim_;
  std::fill(gamma, gamma + d * d * d, 0.0);
  std::fill(dgamma, dgamma + d * d * d * d, 0.0);
  if (is_flat()) return;
  std::vector<double> hb(d * d), hc(d * d), gb(d), gc(d);
  double b, c;
  lapse_jet(x, b, gb.data(), hb.data());
  conformal_jet(x, c, gc.data(), hc.data());
  auto gd = [&](int k) { return k == 0 ? -b : c; };
  auto dg = [&](int k, int m) { return k == 0 ? -gb[m] : gc[m]; };
  auto ddg = [&](int k, int m, int s) { return k == 0 ? -hb[m * d + s] : hc[m * d + s]; };
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) {
        double s0 = 0.0;
        if (l == n) s0 += dg(l, m);
        if (l == m) s0 += dg(l, n);
        if (m == n) s0 -= dg(m, l);
        const double inv = 1.0 / gd(l);
        gamma[(l * d + m) * d + n] = 0.5 * s0 * inv;
        for (int s = 0; s < d; ++s) {
          double s1 = 0.0;
          if (l == n) s1 += ddg(l, m, s);
          if (l == m) s1 += ddg(l, n, s);
          if (m == n) s1 -= ddg(m, l, s);
          const double dinv = -dg(l, s) * inv * inv;
          dgamma[((l * d + m) * d + n) * d + s] = 0.5 * (s0 * dinv + s1 * inv);
        }
      }
}

bool WarpedMetric::in_extended_domain(const Vec& x, double tol) const {
  for (int i = 1; i < dim_; ++i)
    if (x[i] < kExtLo - tol || x[i] > kExtHi + tol) return false;
  return true;
}

bool WarpedMetric::in_box(const Vec& x, double tol) const {
  for (int i = 1; i < dim_; ++i)
    if (x[i] < -tol || x[i] > 1.0 + tol) return false;
  return true;
}

double metric_inner(const WarpedMetric& g, const Vec& x, const Vec& xi, const Vec& eta) {
  const int d = g.dim();
  if (x.size() != d || xi.size() != d || eta.size() != d) throw DomainError("metric_inner: dimension mismatch");
  if (!g.in_extended_domain(x)) throw DomainError("metric_inner: point outside extended domain");
  const double b = g.lapse(x.data());
  const double c = g.conformal(x.data());
  double s = -xi[0] * eta[0] / b;
  for (int i = 1; i < d; ++i) s += xi[i] * eta[i] / c;
  return s;
}

}  // namespace beamlab
