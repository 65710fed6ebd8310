#pragma once

#include <optional>
#include <vector>

#include "beamlab/metric.hpp"
#include "beamlab/poly.hpp"

namespace beamlab {

enum class CausalClass { null_future, null_past, timelike_future, timelike_past, spacelike, zero };

const char* causal_class_name(CausalClass c);

struct PointedCovector {
  Vec x;
  Vec xi;
  CausalClass causal = CausalClass::zero;
};

// Classifies xi at x; tol is relative to the Euclidean size of xi squared.
PointedCovector make_pointed_covector(const WarpedMetric& g, const Vec& x, const Vec& xi, double tol = 1e-10);

// index raising / lowering at x
Vec sharp(const WarpedMetric& g, const Vec& x, const Vec& xi);
Vec flat(const WarpedMetric& g, const Vec& x, const Vec& v);
double metric_dot(const WarpedMetric& g, const Vec& x, const Vec& u, const Vec& v);

enum class Direction { forward, backward };

struct GeodesicOptions {
  double step = 1e-3;
  int max_steps = 200000;
  double crossing_tol = 1e-8;
  double null_tol = 1e-10;
  double param_cap = 50.0;
};

struct BoundaryHit {
  double s = 0.0;
  Vec point;
  Vec velocity;
  int axis = 0;         // spatial axis (1..d-1) of the crossed face
  int side = 0;         // 0 for the x^axis = 0 face, 1 for x^axis = 1
  bool exiting = true;  // leaving the box in the traced direction
  double transversality = 0.0;  // sine of the angle between the spatial velocity and the face
};

struct NullGeodesic {
  Vec p;
  Vec xi;
  Direction direction = Direction::forward;
  double step = 1e-3;
  std::vector<double> s;  // negative for backward tracing
  std::vector<Vec> x;
  std::vector<Vec> v;
  std::vector<BoundaryHit> hits;

  // first crossing of the box boundary in the traced direction
  std::optional<BoundaryHit> first_hit() const;
  // first crossing that leaves the box
  std::optional<BoundaryHit> first_exit() const;
  double max_null_drift(const WarpedMetric& g) const;
};

NullGeodesic trace_null_geodesic(const WarpedMetric& g, const Vec& p, const Vec& xi, Direction dir,
                                 const GeodesicOptions& opt = {});

// One RK4 step of the geodesic equation (state = x, v).
void geodesic_rk4_step(const WarpedMetric& g, Vec& x, Vec& v, double h);

struct FermiOptions {
  double step = 1e-3;
  int reorthonormalize_every = 100;
  double tau_cap = 10.0;
  double tube_halfwidth = 0.05;  // delta, used for the self-overlap check
  double taylor_radius = 0.05;   // Cauchy sampling radius for chart-metric Taylor data
  int taylor_points = 12;        // samples per variable
};

// Null Fermi chart X(tau, z) = gamma(tau) + z^a E_a(tau) + 1/2 z^a z^b Q_ab(tau), Q_ab = -Gamma(E_a, E_b).
// E_1 = N is null with g(gamma', N) = 1, E_2.. are orthonormal and orthogonal to both; tau is the affine
// parameter with tau = 0 at the base point.
class FermiChart {
 public:
  FermiChart() = default;

  int dim() const { return d_; }
  int m() const { return d_ - 1; }
  double tau_min() const { return tau0_; }
  double tau_max() const { return tau0_ + h_ * (n_ - 1); }
  double sample_step() const { return h_; }
  int samples() const { return n_; }
  double sample_tau(int i) const { return tau0_ + h_ * i; }
  const WarpedMetric& metric() const { return *g_; }
  bool flat() const { return g_->is_flat(); }
  const Vec& base_point() const { return base_; }

  Vec axis_point(double tau) const;
  Vec axis_velocity(double tau) const;
  // frame vector E_a at tau, a = 0 .. m-1 (a = 0 is the null vector N)
  Vec frame(double tau, int a) const;

  Vec map(double tau, const Vec& z) const;
  // map and Jacobian columns (d/dtau, d/dz^a)
  void map_jacobian(double tau, const Vec& z, Vec& X, Mat& J) const;
  // Newton inverse; false if the point is not representable within the chart range
  bool inverse(const Vec& x, double& tau, Vec& z, double tol = 1e-12) const;

  // chart metric G_{mu nu} and inverse at real points; coordinates ordered (tau, z^1..z^m)
  Mat chart_metric(double tau, const Vec& z) const;
  Mat chart_inverse_metric(double tau, const Vec& z) const;
  // log sqrt|det G|
  double chart_log_sqrt_det(double tau, const Vec& z) const;

  // inverse metric entries (upper triangle, row-major over mu <= nu) and log sqrt|det G| at complex z
  void complex_inverse_metric(double tau, const cplx* z, cplx* ginv_upper, cplx* logsqrt) const;

  // Taylor polynomials in z at fixed tau: d(d+1)/2 inverse-metric entries then log sqrt|det G|.
  std::vector<Poly> taylor(double tau, const BasisPtr& basis) const;

  double taylor_radius() const { return taylor_radius_; }
  int taylor_points() const { return taylor_points_; }

  // max ||X(gamma sample) inverse - (tau, 0)|| over samples
  double axis_fidelity(int stride = 10) const;

 private:
  friend FermiChart build_fermi_chart(const WarpedMetric& g, const NullGeodesic& gamma, const FermiOptions& opt);

  struct Interp {
    int i0;
    double w[6];
    double dw[6];
  };
  Interp weights(double tau) const;
  Vec interp(const std::vector<Vec>& data, const Interp& w) const;

  template <class T>
  void metric_at(double tau, const T* z, Eigen::Matrix<T, -1, -1>& G) const;

  const WarpedMetric* g_ = nullptr;
  std::shared_ptr<WarpedMetric> g_store_;
  int d_ = 0, n_ = 0;
  double tau0_ = 0.0, h_ = 1e-3;
  Vec base_;
  double taylor_radius_ = 0.05;
  int taylor_points_ = 12;
  std::vector<Vec> gam_, vel_;
  std::vector<std::vector<Vec>> E_, Edot_;  // [a][sample]
  std::vector<std::vector<Vec>> Q_, Qdot_;  // [pair index a<=b][sample]
  int pair(int a, int b) const;
};

// Builds the chart along the null geodesic through gamma.p with initial velocity gamma.xi^sharp.  The
// geodesic is re-traced in both directions from the base point until it leaves the extended domain.
FermiChart build_fermi_chart(const WarpedMetric& g, const NullGeodesic& gamma, const FermiOptions& opt = {});

struct RiccatiData {
  Mat C;
  Mat D;
};

// C = diag(0, 2, ..., 2); D_ij = 1/4 d_i d_j G^{11} on the axis.
RiccatiData riccati_data(const FermiChart& chart, double tau);

}  // namespace beamlab
