#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "beamlab/metric.hpp"

namespace beamlab {

// Node-centred grid on [0,T] x [0,1]^{d-1}: cells per axis, dx = 1/cells, dt = T/steps.
class SpacetimeGrid {
 public:
  SpacetimeGrid() = default;
  // Throws DomainError on a CFL violation.
  SpacetimeGrid(const WarpedMetric& g, int cells, int steps, double horizon, double courant = 0.9);
  // smallest step count satisfying the CFL bound for the given courant factor
  static SpacetimeGrid with_courant(const WarpedMetric& g, int cells, double horizon, double courant = 0.8);

  int dim() const { return d_; }
  int sdim() const { return d_ - 1; }
  int cells() const { return n_; }
  int steps() const { return nt_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }
  double horizon() const { return T_; }
  double courant() const { return courant_; }
  double time(int k) const { return k * dt_; }

  size_t spatial_nodes() const { return nsp_; }
  size_t field_size() const { return nsp_ * static_cast<size_t>(nt_ + 1); }
  size_t stride(int axis) const { return strides_[axis]; }  // axis 0 .. sdim-1
  int coord(size_t idx, int axis) const { return static_cast<int>((idx / strides_[axis]) % (n_ + 1)); }
  Vec point(size_t idx, int k) const;  // (t, x)
  double node_weight(size_t idx) const;  // trapezoid weight times cell volume

  int faces() const { return 2 * sdim(); }
  size_t face_nodes() const { return fnodes_; }
  size_t boundary_nodes() const { return fnodes_ * faces(); }
  size_t boundary_size() const { return boundary_nodes() * static_cast<size_t>(nt_ + 1); }
  // face f: axis f/2 (0-based spatial axis), side f%2 (0 means x = 0)
  size_t face_to_spatial(int face, size_t j) const;
  Vec boundary_point(int face, size_t j, int k) const;
  // trapezoid weight of face node j within its face (times face-cell area)
  double face_weight(size_t j) const;

  bool same_shape(const SpacetimeGrid& o) const {
    return d_ == o.d_ && n_ == o.n_ && nt_ == o.nt_ && T_ == o.T_;
  }
  std::string describe() const;

 private:
  int d_ = 3, n_ = 0, nt_ = 0;
  double dx_ = 0, dt_ = 0, T_ = 0, courant_ = 0.9;
  size_t nsp_ = 0, fnodes_ = 0;
  std::vector<size_t> strides_;
};

// Maximal dt allowed by the CFL condition: courant * dx * min sqrt(c/beta) / sqrt(d-1).
double cfl_limit(const WarpedMetric& g, int cells, double horizon, double courant);

// Sampled function on [0,T] x boundary, layout [k][face][j].
struct BoundaryTrace {
  std::vector<double> values;
  double max_abs() const;
  double l2() const;
};

struct NeumannSource {
  std::vector<double> values;  // real part, boundary layout
  std::vector<double> imag;    // optional imaginary part (empty when real)
  int compat_order = 2;

  static NeumannSource zero(const SpacetimeGrid& grid);
  bool is_zero() const;
  double max_abs() const;
  NeumannSource scaled(double s) const;
  NeumannSource operator+(const NeumannSource& o) const;
};

// Smooth 0 -> 1 transition on [0, width] (all derivatives vanish at 0).
double smooth_ramp(double t, double width);
// Multiplies by smooth_ramp(t) near t=0 (forward) or smooth_ramp(T-t) near t=T (backward).
void apply_temporal_ramp(const SpacetimeGrid& grid, NeumannSource& f, double width, bool at_start);
// Max one-sided difference estimate of d^l f/dt^l at the start, l < order.
double compatibility_defect(const SpacetimeGrid& grid, const NeumannSource& f, int order);

// Builds a source by sampling fn(face, point) on the boundary grid.
NeumannSource sample_source(const SpacetimeGrid& grid, const std::function<double(int, const Vec&)>& fn);

struct FieldSolution {
  std::vector<double> u;  // [k][spatial]
  BoundaryTrace trace;
  double at(const SpacetimeGrid& grid, int k, size_t idx) const { return u[static_cast<size_t>(k) * grid.spatial_nodes() + idx]; }
  // central difference in time at level k (one-sided at the ends)
  std::vector<double> time_derivative(const SpacetimeGrid& grid, int k) const;
};

enum class TimeMode { forward, backward };

struct InitialData {
  std::vector<double> u0, u1;  // value and time derivative at the starting level
};

// Solves Box_g u = F with d_nu u = f.  Forward: zero data before t=0; backward: zero data at t=T.
FieldSolution solve_linear(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>* F,
                           const NeumannSource& f, TimeMode mode = TimeMode::forward,
                           const InitialData* init = nullptr);

// Compactly supported smooth bump amplitude * exp(1 - 1/(1 - r^2)), r = |x - center| / radius.
struct CompactBump {
  std::vector<double> center;
  double radius = 0.2;
  double amplitude = 1.0;
  double value(const Vec& x) const;
};

// H(x, z) = sum_k h_k(x) z^k, each h_k a sum of compact bumps.
struct NonlinearityProfile {
  std::vector<std::vector<CompactBump>> h;  // h[k] for k = 0.. (entries 0, 1 unused)

  int max_order() const { return static_cast<int>(h.size()) - 1; }
  bool empty() const;
  double value(int k, const Vec& x) const;
  void set(int k, std::vector<CompactBump> bumps);
  NonlinearityProfile without(int k) const;
};

// h_k sampled on the nodes where it is nonzero
struct SampledCoefficient {
  std::vector<size_t> index;  // flat spacetime index
  std::vector<double> value;
};
std::vector<SampledCoefficient> sample_nonlinearity(const SpacetimeGrid& grid, const NonlinearityProfile& H);

struct SemilinearOptions {
  double tol = 1e-10;        // Picard tolerance in the Z-norm (m = 1)
  double rel_floor = 1e-14;  // relative round-off floor, counted as converged
  int max_iterations = 50;
  int min_iterations = 1;
  double eps0 = -1.0;  // smallness threshold on sup |f|; ignored when negative
  bool require_convergence = true;  // false: return the iterates after max_iterations
};

struct SemilinearResult {
  FieldSolution solution;
  std::vector<double> distances;  // Z-norm distances of successive iterates
  std::vector<double> ratios;
  int iterations = 0;
  double max_ratio() const;
};

SemilinearResult solve_semilinear(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                                  const NeumannSource& f, const SemilinearOptions& opt = {});
// same, with pre-sampled coefficients
SemilinearResult solve_semilinear(const WarpedMetric& g, const SpacetimeGrid& grid,
                                  const std::vector<SampledCoefficient>& Hs, const NeumannSource& f,
                                  const SemilinearOptions& opt = {});

BoundaryTrace nd_map(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                     const NeumannSource& f, const SemilinearOptions& opt = {});

// sup_t sum_{k<=m} ||d_t^k w||^2_{H^{m-k}}
double z_norm(const SpacetimeGrid& grid, const std::vector<double>& u, int m = 1);

enum class FaceRule { midpoint, trapezoid };

// Boundary integral of a*b against the induced measure of g; trapezoid in time.
double boundary_pairing(const WarpedMetric& g, const SpacetimeGrid& grid, const BoundaryTrace& a,
                        const BoundaryTrace& b, FaceRule rule = FaceRule::midpoint);
double boundary_pairing(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>& a,
                        const std::vector<double>& b, FaceRule rule = FaceRule::midpoint);

// Volume integral of a*b dV_g with the solver's nodal weights (trapezoid in space and time).
double volume_pairing(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>& a,
                      const std::vector<double>& b);

// Discrete energy between levels k and k+1.
double discrete_energy(const WarpedMetric& g, const SpacetimeGrid& grid, const std::vector<double>& u, int k);

// Largest scale a such that the Picard contraction ratio for a*f_shape stays <= target (bisection, cached).
double smallness_threshold(const WarpedMetric& g, const SpacetimeGrid& grid, const NonlinearityProfile& H,
                           const NeumannSource& f_shape, double target_ratio = 0.5);

}  // namespace beamlab
