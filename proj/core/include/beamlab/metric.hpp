#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "beamlab/types.hpp"

namespace beamlab {

// Gaussian bump amplitude * exp(-|x - center|^2 / width^2) in spacetime coordinates.
struct Bump {
  std::vector<double> center;
  double width = 0.3;
  double amplitude = 0.0;

  template <class T>
  T value(const T* x) const {
    T r2 = T(0);
    for (size_t i = 0; i < center.size(); ++i) {
      T d = x[i] - center[i];
      r2 += d * d;
    }
    return amplitude * std::exp(-r2 / (width * width));
  }

  // value, gradient (dim) and Hessian (dim*dim, row-major)
  void jet(const double* x, double& v, double* grad, double* hess) const;
};

enum class MetricPreset { minkowski, lapse_bump, conformal_bump };

MetricPreset metric_preset_from_name(const std::string& name);
std::string metric_preset_name(MetricPreset p);

// g = -beta dt^2 + kappa, kappa = c(t,x) * identity.  Coordinates x = (t, x^1, ..., x^{d-1}).
// The presets are globally smooth, so the extension to [-0.25, 1.25]^{d-1} is the same formula.
class WarpedMetric {
 public:
  static constexpr double kExtLo = -0.25;
  static constexpr double kExtHi = 1.25;

  static WarpedMetric minkowski(int dim);
  static WarpedMetric lapse_bump(int dim, const Bump& bump);
  static WarpedMetric conformal_bump(int dim, const Bump& bump);

  int dim() const { return dim_; }
  MetricPreset preset() const { return preset_; }
  bool is_flat() const { return preset_ == MetricPreset::minkowski || bump_.amplitude == 0.0; }
  const Bump& bump() const { return bump_; }

  template <class T>
  T lapse(const T* x) const {
    if (preset_ == MetricPreset::lapse_bump) return T(1) + bump_.value(x);
    return T(1);
  }
  template <class T>
  T conformal(const T* x) const {
    if (preset_ == MetricPreset::conformal_bump) return T(1) + bump_.value(x);
    return T(1);
  }
  // diagonal entries g_00 = -beta, g_ii = c
  template <class T>
  void diagonal(const T* x, T* gdiag) const {
    gdiag[0] = -lapse(x);
    T c = conformal(x);
    for (int i = 1; i < dim_; ++i) gdiag[i] = c;
  }

  void lapse_jet(const double* x, double& v, double* grad, double* hess) const;
  void conformal_jet(const double* x, double& v, double* grad, double* hess) const;

  Mat metric(const Vec& x) const;
  Mat inverse(const Vec& x) const;
  Mat spatial_metric(const Vec& x) const;
  double sqrt_abs_det(const Vec& x) const;

  // Gamma^l_{mn} stored at [l*d*d + m*d + n]; dGamma adds a trailing derivative index s.
  void christoffel(const double* x, double* gamma) const;
  void christoffel_jet(const double* x, double* gamma, double* dgamma) const;

  bool in_extended_domain(const Vec& x, double tol = 1e-12) const;
  bool in_box(const Vec& x, double tol = 1e-12) const;

 private:
  WarpedMetric(int dim, MetricPreset p, Bump b);
  int dim_;
  MetricPreset preset_;
  Bump bump_;
};

// Dual metric pairing g^{-1}(xi, eta) at x.  Throws DomainError outside the extended domain.
double metric_inner(const WarpedMetric& g, const Vec& x, const Vec& xi, const Vec& eta);

}  // namespace beamlab
