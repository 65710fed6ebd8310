#pragma once

#include <array>

#include "beamlab/metric.hpp"

namespace beamlab {

// Linear change of coordinates at q0: x_work = q0 + L x_can, with L^T g(q0) L = diag(-1, 1, ..., 1).
// Covectors map as xi_can = L^T xi_work.
struct CanonicalFrame {
  Vec q0;
  Mat L;
  double r0 = 0.0;
  // positive factors with L^T xi_j = scale_j * (normalized canonical covector), j = 0, 1
  double scale0 = 1.0, scale1 = 1.0;

  Vec to_working_covector(const Vec& xi_can) const;
  Vec to_canonical_covector(const Vec& xi_work) const;
  Vec to_working_point(const Vec& x_can) const { return q0 + L * x_can; }
};

CanonicalFrame canonical_frame(const WarpedMetric& g, const Vec& q0, const Vec& xi0, const Vec& xi1);

double b_of(double r0);

// canonical covectors (components beyond the first three are zero)
Vec xi0_canonical(double r0, int dim);
Vec xi1_canonical(int dim);
std::array<Vec, 2> perturbed_covectors(double varsigma, int dim = 4);

std::array<double, 3> alpha_coefficients(double r0, double varsigma);

struct NullFrame {
  CanonicalFrame frame;
  double r0 = 0.0;
  double varsigma = 0.1;
  double b = 2.0;
  int dim = 4;
  std::array<Vec, 4> xi;  // canonical components
  std::array<double, 3> alpha{};

  // ||xi0 - sum alpha_j xi_j||_inf evaluated in quadruple precision
  double decomposition_residual() const;
  // the four covectors in working coordinates
  std::array<Vec, 4> working_covectors() const;
};

// Frame with the identity map (Minkowski at the origin).
NullFrame make_null_frame(double r0, double varsigma, int dim = 4);
// Frame built from two working covectors at q0.
NullFrame make_null_frame(const WarpedMetric& g, const Vec& q0, const Vec& xi0, const Vec& xi1, double varsigma);

// |alpha_i xi_i + alpha_j xi_j|^2 for the pairs (1,2), (1,3), (2,3)
std::array<double, 3> pairwise_norms(const NullFrame& f);

// sum over the three unordered pairs of |alpha_i xi_i + alpha_j xi_j|^{-2}
double interaction_sum(const NullFrame& f);

struct KappaResult {
  std::array<double, 4> kappa{};
  double residual = 0.0;  // ||sum kappa_j xi_j||
  int relation_dim = 0;
};

// Null-space direction of the d x 4 matrix [xi_0 ... xi_3], normalized to kappa_0 = 1.
KappaResult four_wave_kappas(const std::array<Vec, 4>& xi);

}  // namespace beamlab
