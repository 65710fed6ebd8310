#include <algorithm>
#include <cmath>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab {

const char* causal_class_name(CausalClass c) {
  switch (c) {
    case CausalClass::null_future: return "null_future";
    case CausalClass::null_past: return "null_past";
    case CausalClass::timelike_future: return "timelike_future";
    case CausalClass::timelike_past: return "timelike_past";
    case CausalClass::spacelike: return "spacelike";
    case CausalClass::zero: return "zero";
  }
  return "?";
}

PointedCovector make_pointed_covector(const WarpedMetric& g, const Vec& x, const Vec& xi, double tol) {
  PointedCovector pc{x, xi, CausalClass::zero};
  const double scale = xi.squaredNorm();
  if (scale == 0.0) return pc;
  const double q = metric_inner(g, x, xi, xi);
  // a covector with xi_0 < 0 raises to a vector with positive time component
  const bool future = xi[0] < 0.0;
  if (std::abs(q) <= tol * scale)
    pc.causal = future ? CausalClass::null_future : CausalClass::null_past;
  else if (q < 0.0)
    pc.causal = future ? CausalClass::timelike_future : CausalClass::timelike_past;
  else
    pc.causal = CausalClass::spacelike;
  return pc;
}

Vec sharp(const WarpedMetric& g, const Vec& x, const Vec& xi) {
  Vec v(xi.size());
  const double b = g.lapse(x.data()), c = g.conformal(x.data());
  v[0] = -xi[0] / b;
  for (int i = 1; i < xi.size(); ++i) v[i] = xi[i] / c;
  return v;
}

Vec flat(const WarpedMetric& g, const Vec& x, const Vec& v) {
  Vec xi(v.size());
  const double b = g.lapse(x.data()), c = g.conformal(x.data());
  xi[0] = -b * v[0];
  for (int i = 1; i < v.size(); ++i) xi[i] = c * v[i];
  return xi;
}

double metric_dot(const WarpedMetric& g, const Vec& x, const Vec& u, const Vec& v) {
  const double b = g.lapse(x.data()), c = g.conformal(x.data());
  double s = -b * u[0] * v[0];
  for (int i = 1; i < u.size(); ++i) s += c * u[i] * v[i];
  return s;
}

namespace {

Vec geodesic_accel(const WarpedMetric& g, const Vec& x, const Vec& v) {
  const int d = g.dim();
  Vec a = Vec::Zero(d);
  if (g.is_flat()) return a;
  std::vector<double> G(d * d * d);
  g.christoffel(x.data(), G.data());
  for (int l = 0; l < d; ++l) {
    double s = 0.0;
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) s += G[(l * d + m) * d + n] * v[m] * v[n];
    a[l] = -s;
  }
  return a;
}

// >= 0 inside the box, < 0 outside
double box_indicator(const Vec& x) {
  double m = 1e300;
  for (int i = 1; i < x.size(); ++i) m = std::min({m, x[i], 1.0 - x[i]});
  return m;
}

}  // namespace

void geodesic_rk4_step(const WarpedMetric& g, Vec& x, Vec& v, double h) {
  const Vec k1x = v, k1v = geodesic_accel(g, x, v);
  const Vec x2 = x + 0.5 * h * k1x, v2 = v + 0.5 * h * k1v;
  const Vec k2x = v2, k2v = geodesic_accel(g, x2, v2);
  const Vec x3 = x + 0.5 * h * k2x, v3 = v + 0.5 * h * k2v;
  const Vec k3x = v3, k3v = geodesic_accel(g, x3, v3);
  const Vec x4 = x + h * k3x, v4 = v + h * k3v;
  const Vec k4x = v4, k4v = geodesic_accel(g, x4, v4);
  x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

std::optional<BoundaryHit> NullGeodesic::first_hit() const {
  if (hits.empty()) return std::nullopt;
  return hits.front();
}

std::optional<BoundaryHit> NullGeodesic::first_exit() const {
  for (const auto& h : hits)
    if (h.exiting) return h;
  return std::nullopt;
}

double NullGeodesic::max_null_drift(const WarpedMetric& g) const {
  double m = 0.0;
  for (size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(metric_dot(g, x[i], v[i], v[i])));
  return m;
}

NullGeodesic trace_null_geodesic(const WarpedMetric& g, const Vec& p, const Vec& xi, Direction dir,
                                 const GeodesicOptions& opt) {
  const int d = g.dim();
  if (p.size() != d || xi.size() != d) throw DomainError("trace_null_geodesic: dimension mismatch");
  if (!g.in_extended_domain(p)) throw DomainError("trace_null_geodesic: base point outside extended domain");
  const double q = metric_inner(g, p, xi, xi);
  if (std::abs(q) > opt.null_tol * std::max(1.0, xi.squaredNorm()))
    throw DomainError("trace_null_geodesic: covector is not null (g^-1(xi,xi) = " + std::to_string(q) + ")");

  NullGeodesic geo;
  geo.p = p;
  geo.xi = xi;
  geo.direction = dir;
  geo.step = opt.step;
  const double h = dir == Direction::forward ? opt.step : -opt.step;

  Vec x = p, v = sharp(g, p, xi);
  double s = 0.0;
  geo.s.push_back(s);
  geo.x.push_back(x);
  geo.v.push_back(v);

  int steps = 0;
  while (true) {
    if (steps >= opt.max_steps || std::abs(s) >= opt.param_cap) {
      if (geo.hits.empty()) throw NumericalError("trace_null_geodesic: step cap reached before a boundary hit");
      break;
    }
    Vec xn = x, vn = v;
    geodesic_rk4_step(g, xn, vn, h);
    const double f0 = box_indicator(x), f1 = box_indicator(xn);
    if ((f0 >= 0.0) != (f1 >= 0.0)) {
      // bisection on the fraction of the step
      double lo = 0.0, hi = 1.0;
      Vec xc = x, vc = v;
      while ((hi - lo) * opt.step > opt.crossing_tol) {
        const double mid = 0.5 * (lo + hi);
        xc = x;
        vc = v;
        geodesic_rk4_step(g, xc, vc, mid * h);
        if ((box_indicator(xc) >= 0.0) == (f0 >= 0.0))
          lo = mid;
        else
          hi = mid;
      }
      xc = x;
      vc = v;
      geodesic_rk4_step(g, xc, vc, 0.5 * (lo + hi) * h);
      BoundaryHit bh;
      bh.s = s + 0.5 * (lo + hi) * h;
      bh.point = xc;
      bh.velocity = vc;
      bh.exiting = f0 >= 0.0;
      double best = 1e300;
      for (int i = 1; i < d; ++i) {
        const double d0 = std::abs(xc[i]), d1 = std::abs(1.0 - xc[i]);
        if (d0 < best) best = d0, bh.axis = i, bh.side = 0;
        if (d1 < best) best = d1, bh.axis = i, bh.side = 1;
      }
      const double vs = vc.tail(d - 1).norm();
      bh.transversality = vs > 0.0 ? std::abs(vc[bh.axis]) / vs : 0.0;
      geo.hits.push_back(bh);
    }
    x = xn;
    v = vn;
    s += h;
    ++steps;
    geo.s.push_back(s);
    geo.x.push_back(x);
    geo.v.push_back(v);
    if (!g.in_extended_domain(x)) break;
  }
  return geo;
}

}  // namespace beamlab
