#include "beamlab/covector.hpp"

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab {

namespace {

using quad = boost::multiprecision::cpp_bin_float_quad;

template <class R>
std::array<R, 3> alpha_impl(R r0, R vs) {
  using std::sqrt;
  using boost::multiprecision::sqrt;
  const R s = sqrt(R(1) - vs * vs);
  const R w = sqrt(R(1) - r0 * r0);
  const R den = vs * vs / (R(1) + s);  // 1 - sqrt(1 - vs^2) without cancellation
  const R a1 = (-s - w) / den;
  const R common = (R(1) + w) / (R(2) * den);
  const R odd = r0 / (R(2) * vs);
  return {a1, common + odd, common - odd};
}

template <class R>
std::array<std::array<R, 4>, 4> covectors_impl(R r0, R vs) {
  using std::sqrt;
  using boost::multiprecision::sqrt;
  const R s = sqrt(R(1) - vs * vs);
  std::array<std::array<R, 4>, 4> xi;
  xi[0] = {R(-1), -sqrt(R(1) - r0 * r0), r0, R(0)};
  xi[1] = {R(-1), R(1), R(0), R(0)};
  xi[2] = {R(-1), s, vs, R(0)};
  xi[3] = {R(-1), s, -vs, R(0)};
  return xi;
}

template <class R>
R minkowski_sq(const std::array<R, 4>& v) {
  return -v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
}

template <class R>
std::array<R, 3> pairwise_impl(R r0, R vs) {
  const auto xi = covectors_impl<R>(r0, vs);
  const auto al = alpha_impl<R>(r0, vs);
  auto comb = [&](int i, int j) {
    std::array<R, 4> v;
    for (int k = 0; k < 4; ++k) v[k] = al[i - 1] * xi[i][k] + al[j - 1] * xi[j][k];
    return minkowski_sq(v);
  };
  return {comb(1, 2), comb(1, 3), comb(2, 3)};
}

void check_varsigma(double vs) {
  if (!(vs > 0.0 && vs < 1.0)) throw DomainError("varsigma must lie in (0, 1)");
}

// orthogonal reflection mapping unit u to e_0 of its space
Mat householder_to_e0(const Vec& u) {
  const int n = static_cast<int>(u.size());
  Vec e = Vec::Zero(n);
  e[0] = 1.0;
  Vec w = u - e;
  if (w.norm() < 1e-14) return Mat::Identity(n, n);
  return Mat::Identity(n, n) - 2.0 * w * w.transpose() / w.squaredNorm();
}

}  // namespace

Vec CanonicalFrame::to_working_covector(const Vec& xi_can) const { return L.transpose().lu().solve(xi_can); }
Vec CanonicalFrame::to_canonical_covector(const Vec& xi_work) const { return L.transpose() * xi_work; }

double b_of(double r0) { return 1.0 + std::sqrt(1.0 - r0 * r0); }

Vec xi0_canonical(double r0, int dim) {
  if (r0 < -1.0 || r0 > 1.0) throw DomainError("r0 must lie in [-1, 1]");
  Vec v = Vec::Zero(dim);
  v[0] = -1.0;
  v[1] = -std::sqrt(1.0 - r0 * r0);
  v[2] = r0;
  return v;
}

Vec xi1_canonical(int dim) {
  Vec v = Vec::Zero(dim);
  v[0] = -1.0;
  v[1] = 1.0;
  return v;
}

std::array<Vec, 2> perturbed_covectors(double varsigma, int dim) {
  check_varsigma(varsigma);
  Vec a = Vec::Zero(dim), b = Vec::Zero(dim);
  const double s = std::sqrt(1.0 - varsigma * varsigma);
  a[0] = b[0] = -1.0;
  a[1] = b[1] = s;
  a[2] = varsigma;
  b[2] = -varsigma;
  return {a, b};
}

std::array<double, 3> alpha_coefficients(double r0, double varsigma) {
  check_varsigma(varsigma);
  const auto a = alpha_impl<quad>(quad(r0), quad(varsigma));
  return {static_cast<double>(a[0]), static_cast<double>(a[1]), static_cast<double>(a[2])};
}

CanonicalFrame canonical_frame(const WarpedMetric& g, const Vec& q0, const Vec& xi0, const Vec& xi1) {
  const int d = g.dim();
  if (q0.size() != d || xi0.size() != d || xi1.size() != d) throw DomainError("canonical_frame: dimension mismatch");
  for (const Vec* xi : {&xi0, &xi1}) {
    const auto pc = make_pointed_covector(g, q0, *xi);
    if (pc.causal != CausalClass::null_future) throw DomainError("canonical_frame: covectors must be future null");
  }
  const double beta = g.lapse(q0.data()), c = g.conformal(q0.data());
  if (!(beta > 0.0 && c > 0.0)) throw DomainError("canonical_frame: degenerate metric at q0");
  // orthonormal frame vectors as columns
  Mat E = Mat::Zero(d, d);
  E(0, 0) = 1.0 / std::sqrt(beta);
  for (int i = 1; i < d; ++i) E(i, i) = 1.0 / std::sqrt(c);

  // M acts on covector components in the orthonormal frame
  Mat M = Mat::Identity(d, d);
  auto apply = [&](const Mat& T) { M = T * M; };
  auto comps = [&](const Vec& xi) { return Vec(M * E.transpose() * xi); };

  // rotate the spatial direction of xi1 onto +x
  {
    Vec h1 = comps(xi1);
    Vec n1 = h1.tail(d - 1) / h1.tail(d - 1).norm();
    Mat R = Mat::Identity(d, d);
    R.bottomRightCorner(d - 1, d - 1) = householder_to_e0(n1);
    apply(R);
  }
  Vec h0 = comps(xi0);
  Vec m0 = h0.tail(d - 1) / (-h0[0]);
  if (m0[0] > 1.0 - 1e-12) throw DomainError("canonical_frame: covectors are parallel");
  // boost along x so that xi0 points into the x < 0 half
  if (m0[0] > 0.0) {
    const double v = 2.0 * m0[0] / (1.0 + m0[0] * m0[0]);
    const double gam = 1.0 / std::sqrt(1.0 - v * v);
    Mat B = Mat::Identity(d, d);
    B(0, 0) = gam;
    B(0, 1) = gam * v;
    B(1, 0) = gam * v;
    B(1, 1) = gam;
    apply(B);
    h0 = comps(xi0);
    m0 = h0.tail(d - 1) / (-h0[0]);
  }
  // rotate the transverse part of xi0 onto +y
  if (d > 2) {
    Vec perp = m0.tail(d - 2);
    if (perp.norm() > 1e-14) {
      Mat R = Mat::Identity(d, d);
      R.bottomRightCorner(d - 2, d - 2) = householder_to_e0(perp / perp.norm());
      apply(R);
    }
  }
  CanonicalFrame f;
  f.q0 = q0;
  f.L = E * M.transpose();
  const Vec c0 = f.L.transpose() * xi0;
  const Vec c1 = f.L.transpose() * xi1;
  f.scale0 = -c0[0];
  f.scale1 = -c1[0];
  f.r0 = d > 2 ? c0[2] / f.scale0 : 0.0;
  return f;
}

double NullFrame::decomposition_residual() const {
  const auto xq = covectors_impl<quad>(quad(r0), quad(varsigma));
  const auto aq = alpha_impl<quad>(quad(r0), quad(varsigma));
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    quad s = xq[0][k] - aq[0] * xq[1][k] - aq[1] * xq[2][k] - aq[2] * xq[3][k];
    worst = std::max(worst, std::abs(static_cast<double>(s)));
  }
  return worst;
}

std::array<Vec, 4> NullFrame::working_covectors() const {
  std::array<Vec, 4> out;
  for (int j = 0; j < 4; ++j) out[j] = frame.to_working_covector(xi[j]);
  return out;
}

NullFrame make_null_frame(double r0, double varsigma, int dim) {
  check_varsigma(varsigma);
  NullFrame f;
  f.frame.q0 = Vec::Zero(dim);
  f.frame.L = Mat::Identity(dim, dim);
  f.frame.r0 = r0;
  f.r0 = r0;
  f.varsigma = varsigma;
  f.b = b_of(r0);
  f.dim = dim;
  f.xi[0] = xi0_canonical(r0, dim);
  f.xi[1] = xi1_canonical(dim);
  const auto p = perturbed_covectors(varsigma, dim);
  f.xi[2] = p[0];
  f.xi[3] = p[1];
  f.alpha = alpha_coefficients(r0, varsigma);
  return f;
}

NullFrame make_null_frame(const WarpedMetric& g, const Vec& q0, const Vec& xi0, const Vec& xi1, double varsigma) {
  const CanonicalFrame cf = canonical_frame(g, q0, xi0, xi1);
  NullFrame f = make_null_frame(cf.r0, varsigma, g.dim());
  f.frame = cf;
  return f;
}

std::array<double, 3> pairwise_norms(const NullFrame& f) {
  const auto p = pairwise_impl<quad>(quad(f.r0), quad(f.varsigma));
  return {static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])};
}

double interaction_sum(const NullFrame& f) {
  const auto p = pairwise_impl<quad>(quad(f.r0), quad(f.varsigma));
  quad s = 0;
  for (const auto& v : p) {
    if (v == 0) throw NumericalError("interaction_sum: degenerate configuration (null pairwise sum)");
    s += quad(1) / v;
  }
  return static_cast<double>(s);
}

KappaResult four_wave_kappas(const std::array<Vec, 4>& xi) {
  const int d = static_cast<int>(xi[0].size());
  Mat A(d, 4);
  for (int j = 0; j < 4; ++j) A.col(j) = xi[j];
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  const double tol = 1e-9 * sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  KappaResult r;
  r.relation_dim = 4 - rank;
  if (r.relation_dim != 1)
    throw DomainError("four_wave_kappas: relation space has dimension " + std::to_string(r.relation_dim));
  Vec k = svd.matrixV().col(3);
  if (std::abs(k[0]) < 1e-14) throw DomainError("four_wave_kappas: relation does not involve xi_0");
  k /= k[0];
  for (int j = 0; j < 4; ++j) r.kappa[j] = k[j];
  r.residual = (A * k).norm();
  return r;
}

}  // namespace beamlab
