#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "beamlab/beams.hpp"
#include "beamlab/error.hpp"
#include "lagrange.hpp"

namespace beamlab {

namespace {

Mat imag_part(const CMat& H) {
  Mat I = H.imag();
  return 0.5 * (I + I.transpose());
}

double min_eig(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

void check_positive(const CMat& H, double tau) {
  if (!(min_eig(imag_part(H)) > 0.0)) {
    std::ostringstream os;
    os << "solve_riccati: Im H lost definiteness at tau = " << tau;
    throw NumericalError(os.str());
  }
}

}  // namespace

RiccatiTrajectory solve_riccati(const FermiChart& chart, const CMat& H0, const CMat& Y0, const RiccatiOptions& opt) {
  const int m = chart.m();
  if (H0.rows() != m || H0.cols() != m || Y0.rows() != m || Y0.cols() != m)
    throw DomainError("solve_riccati: initial data must be m x m");
  if ((H0 - H0.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("solve_riccati: H0 must be symmetric");
  if (!(min_eig(imag_part(H0)) > 0.0)) throw DomainError("solve_riccati: Im H0 must be positive definite");
  if (std::abs(Y0.determinant()) < 1e-12) throw DomainError("solve_riccati: Y0 must be invertible");
  if (!(opt.step > 0.0)) throw DomainError("solve_riccati: step must be positive");
  const double lo = std::isnan(opt.tau_lo) ? chart.tau_min() : std::max(opt.tau_lo, chart.tau_min());
  const double hi = std::isnan(opt.tau_hi) ? chart.tau_max() : std::min(opt.tau_hi, chart.tau_max());
  if (!(lo <= 0.0 && hi >= 0.0)) throw DomainError("solve_riccati: window must contain tau = 0");
  const double h = opt.step;
  const int i_lo = static_cast<int>(std::ceil(lo / h - 1e-9));
  const int i_hi = static_cast<int>(std::floor(hi / h + 1e-9));
  const int n = i_hi - i_lo + 1;
  if (n < 6) throw DomainError("solve_riccati: window too short");

  RiccatiTrajectory r;
  r.m = m;
  r.step = h;
  r.i_lo = i_lo;
  r.H0 = H0;
  r.Y0 = Y0;
  r.tau.resize(n);
  r.Y.resize(n);
  r.Z.resize(n);
  for (int i = 0; i < n; ++i) r.tau[i] = (i_lo + i) * h;

  // stage times repeat between RK4 steps
  std::map<double, RiccatiData> cache;
  auto rhs = [&](double t, const CMat& Y, const CMat& Z, CMat& dY, CMat& dZ) {
    auto it = cache.find(t);
    if (it == cache.end()) {
      if (cache.size() > 8) cache.clear();
      it = cache.emplace(t, riccati_data(chart, std::clamp(t, chart.tau_min(), chart.tau_max()))).first;
    }
    const RiccatiData& cd = it->second;
    dY = cd.C.cast<cplx>() * Z;
    dZ = -cd.D.cast<cplx>() * Y;
  };
  const int i0 = -i_lo;
  r.Y[i0] = Y0;
  r.Z[i0] = H0 * Y0;
  for (int dir : {1, -1}) {
    const double hs = dir * h;
    for (int i = i0; (dir > 0 ? i < n - 1 : i > 0); i += dir) {
      const double t = r.tau[i];
      const CMat& Y = r.Y[i];
      const CMat& Z = r.Z[i];
      CMat k1y, k1z, k2y, k2z, k3y, k3z, k4y, k4z;
      rhs(t, Y, Z, k1y, k1z);
      rhs(t + 0.5 * hs, Y + 0.5 * hs * k1y, Z + 0.5 * hs * k1z, k2y, k2z);
      rhs(t + 0.5 * hs, Y + 0.5 * hs * k2y, Z + 0.5 * hs * k2z, k3y, k3z);
      rhs(r.tau[i + dir], Y + hs * k3y, Z + hs * k3z, k4y, k4z);
      r.Y[i + dir] = Y + (hs / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      r.Z[i + dir] = Z + (hs / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
    }
  }

  r.H.resize(n);
  r.c0.resize(n);
  r.sqrt_det.resize(n);
  for (int i = 0; i < n; ++i) {
    const cplx det = r.Y[i].determinant();
    if (std::abs(det) < 1e-12) {
      std::ostringstream os;
      os << "solve_riccati: Y is near-singular at tau = " << r.tau[i];
      throw NumericalError(os.str());
    }
    r.H[i] = r.Z[i] * r.Y[i].inverse();
    check_positive(r.H[i], r.tau[i]);
    r.c0[i] = imag_part(r.H[i]).determinant() * std::norm(det);
  }
  // continuous square root of det Y, outward from tau = 0
  r.sqrt_det[i0] = std::sqrt(r.Y[i0].determinant());
  for (int dir : {1, -1})
    for (int i = i0 + dir; i >= 0 && i < n; i += dir) {
      const cplx prev = r.sqrt_det[i - dir];
      cplx s = std::sqrt(r.Y[i].determinant());
      if (std::abs(-s - prev) < std::abs(s - prev)) s = -s;
      if (std::abs(s - prev) > 0.5 * std::abs(s + prev))
        throw NumericalError("solve_riccati: square-root branch tracking is ambiguous (step too coarse)");
      r.sqrt_det[i] = s;
    }
  return r;
}

namespace {

template <class T>
T interp_samples(const RiccatiTrajectory& r, const std::vector<T>& data, double t) {
  if (t < r.tau_min() - 1e-9 || t > r.tau_max() + 1e-9) throw DomainError("RiccatiTrajectory: tau outside window");
  const detail::Lagrange6 L((t - r.tau_min()) / r.step, static_cast<int>(data.size()));
  return L.value(data.data());
}

}  // namespace

CMat RiccatiTrajectory::H_at(double t) const { return interp_samples(*this, H, t); }
CMat RiccatiTrajectory::Y_at(double t) const { return interp_samples(*this, Y, t); }
cplx RiccatiTrajectory::sqrt_det_at(double t) const { return interp_samples(*this, sqrt_det, t); }

double RiccatiTrajectory::c0_drift() const {
  const double ref = c0[-i_lo];
  double d = 0.0;
  for (double v : c0) d = std::max(d, std::abs(v - ref) / std::abs(ref));
  return d;
}

double RiccatiTrajectory::min_imag_eig() const {
  double e = std::numeric_limits<double>::infinity();
  for (const auto& h : H) e = std::min(e, min_eig(imag_part(h)));
  return e;
}

double RiccatiTrajectory::symmetry_defect() const {
  double e = 0.0;
  for (const auto& h : H) e = std::max(e, (h - h.transpose()).cwiseAbs().maxCoeff());
  return e;
}

double RiccatiTrajectory::min_abs_det_Y() const {
  double e = std::numeric_limits<double>::infinity();
  for (const auto& y : Y) e = std::min(e, std::abs(y.determinant()));
  return e;
}

CMat flat_riccati_H(const CMat& H0, double tau) {
  const int m = static_cast<int>(H0.rows());
  CMat C = CMat::Zero(m, m);
  for (int a = 1; a < m; ++a) C(a, a) = 2.0;
  const CMat Y = CMat::Identity(m, m) + tau * C * H0;
  return H0 * Y.inverse();
}

}  // namespace beamlab
