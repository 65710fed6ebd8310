#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "beamlab/geometry.hpp"
#include "beamlab/poly.hpp"
#include "beamlab/wave_solver.hpp"

namespace beamlab {

struct RiccatiOptions {
  double step = 1e-3;
  // integration window; NaN means the chart range
  double tau_lo = std::numeric_limits<double>::quiet_NaN();
  double tau_hi = std::numeric_limits<double>::quiet_NaN();
};

// Samples tau_i = i * step (i = i_lo .. i_hi) of the linear system Y' = C Z, Z' = -D Y with H = Z Y^{-1}.
struct RiccatiTrajectory {
  int m = 0;
  double step = 1e-3;
  int i_lo = 0;
  std::vector<double> tau;
  std::vector<CMat> Y, Z, H;
  std::vector<double> c0;      // det(Im H) |det Y|^2
  std::vector<cplx> sqrt_det;  // continuous branch of det(Y)^{1/2}
  CMat H0, Y0;

  double tau_min() const { return tau.front(); }
  double tau_max() const { return tau.back(); }
  CMat H_at(double t) const;
  CMat Y_at(double t) const;
  cplx sqrt_det_at(double t) const;
  double c0_drift() const;           // max |c0 - c0(0)| / |c0(0)|
  double min_imag_eig() const;       // over samples
  double symmetry_defect() const;    // max |H - H^T|
  double min_abs_det_Y() const;
};

RiccatiTrajectory solve_riccati(const FermiChart& chart, const CMat& H0, const CMat& Y0, const RiccatiOptions& opt = {});

// Closed-form trajectory for constant C = diag(0, 2, ..., 2) and D = 0.
CMat flat_riccati_H(const CMat& H0, double tau);

struct BeamOptions {
  double table_step = 0.005;  // upper bound on the tau table spacing; RK4 nodes use twice this
  double step_scale = 0.01;   // spacing also kept below step_scale / max ||H||
  double tau_lo = std::numeric_limits<double>::quiet_NaN();
  double tau_hi = std::numeric_limits<double>::quiet_NaN();
};

// Chart-metric Taylor data on the tau table, shared by phase and amplitude.
struct ChartTable {
  std::shared_ptr<const FermiChart> chart;
  BasisPtr basis;
  int order = 4;
  double s = 0.005;
  int j_lo = 0, j_hi = 0;  // table points tau_j = j * s
  std::vector<std::vector<Poly>> G;   // [j][upper-triangle entry, then log sqrt|det G|]
  std::vector<std::vector<Poly>> Gt;  // tau derivatives

  int count() const { return j_hi - j_lo + 1; }
  double tau(int idx) const { return (j_lo + idx) * s; }
  int entry(int mu, int nu) const;
  const Poly& g(int idx, int mu, int nu) const { return G[idx][entry(mu, nu)]; }
  const Poly& gt(int idx, int mu, int nu) const { return Gt[idx][entry(mu, nu)]; }
};

// Polynomial-in-z fields on the table with first and second tau derivatives.
struct TableField {
  std::vector<Poly> v, vt, vtt;
  // interpolated (value, d/dtau, d2/dtau2) at tau
  void at(const ChartTable& T, double tau, Poly& p, Poly& pt, Poly& ptt) const;
};

// phi = z^1 + sum_{k>=2} P_k with P_2 = z^T H z.
class BeamPhase {
 public:
  int order() const { return table_->order; }
  const ChartTable& table() const { return *table_; }
  const FermiChart& chart() const { return *table_->chart; }
  const TableField& field() const { return phi_; }
  double tau_min() const { return table_->tau(0); }
  double tau_max() const { return table_->tau(table_->count() - 1); }
  // degree-k part of phi at tau (k >= 2)
  Poly part(double tau, int k) const;
  cplx value(double tau, const Vec& z) const;
  // S phi = <d phi, d phi> evaluated with the exact chart metric
  cplx eikonal(double tau, const Vec& z) const;
  // Taylor polynomial of S phi on the table (degree <= order)
  Poly eikonal_taylor(int idx) const;
  // Box phi as a polynomial on the table
  Poly box_taylor(int idx) const;

  std::shared_ptr<const ChartTable> table_ptr() const { return table_; }

 private:
  friend BeamPhase build_phase(const FermiChart&, const RiccatiTrajectory&, int, const BeamOptions&);
  std::shared_ptr<const ChartTable> table_;
  TableField phi_;
};

BeamPhase build_phase(const FermiChart& chart, const RiccatiTrajectory& riccati, int order,
                      const BeamOptions& opt = {});

class BeamAmplitude {
 public:
  int terms() const { return static_cast<int>(a_.size()); }
  // degree kept in a_k
  int degree(int k) const { return order_ - 2 - 2 * k; }
  const TableField& field(int k) const { return a_[k]; }
  cplx a00(double tau) const;
  // T a_k + ... on the table: i T a_k + Box a_{k-1} as a polynomial
  Poly transport_taylor(int k, int idx) const;
  double a00_ode_deviation() const { return a00_dev_; }

 private:
  friend BeamAmplitude build_amplitude(const BeamPhase&, const RiccatiTrajectory&);
  std::shared_ptr<const ChartTable> table_;
  BeamPhase phase_;
  int order_ = 4;
  std::vector<TableField> a_;
  double a00_dev_ = 0.0;
};

BeamAmplitude build_amplitude(const BeamPhase& phase, const RiccatiTrajectory& riccati);

// Smooth cutoff: 1 on |t| <= 1/4, 0 on |t| >= 1/2; value and first two derivatives.
void cutoff(double t, double& c, double& dc, double& ddc);

struct BeamSample {
  cplx u;
  CVec grad;  // chart-coordinate gradient (tau, z)
};

class GaussianBeam {
 public:
  GaussianBeam(BeamPhase phase, BeamAmplitude amp, double rho, double kappa, double delta);

  double rho() const { return rho_; }
  double kappa() const { return kappa_; }
  double rho_eff() const { return std::abs(kappa_) * rho_; }
  double delta() const { return delta_; }
  const BeamPhase& phase() const { return phase_; }
  const BeamAmplitude& amplitude() const { return amp_; }
  const FermiChart& chart() const { return phase_.chart(); }

  // u and chart gradient at chart coordinates (conjugated for negative kappa)
  BeamSample chart_sample(double tau, const Vec& z) const;
  cplx evaluate_chart(double tau, const Vec& z) const { return chart_sample(tau, z).u; }
  // spacetime point; throws DomainError outside the chart
  cplx evaluate(const Vec& x) const;
  // value and spacetime gradient; nullopt outside the tube or chart
  std::optional<std::pair<cplx, CVec>> evaluate_with_gradient(const Vec& x) const;
  // Gaussian width estimate 1 / sqrt(rho_eff * min eig Im H) over the window
  double width(double tau_lo, double tau_hi) const;
  nlohmann::json metadata() const;

 private:
  BeamPhase phase_;
  BeamAmplitude amp_;
  double rho_, kappa_, delta_;
  std::vector<double> axis_tau_;
  std::vector<Vec> axis_pts_;
  double reach_ = 0.0;  // Euclidean reach of the tube around the axis
  friend std::optional<std::pair<double, Vec>> locate(const GaussianBeam& b, const Vec& x);
};

GaussianBeam assemble_beam(const BeamPhase& phase, const BeamAmplitude& amp, double rho, double kappa, double delta);

struct ResidualOptions {
  double tau_lo = -0.2, tau_hi = 0.2;
  int tau_points = 17;
  double points_per_width = 2.5;  // quadrature spacing = width / points_per_width
  double extent_widths = 5.0;     // half-extent of the z box in widths (clipped at delta/2)
  int norm_order = 0;             // 0: L2, 1: H1
  bool core_only = false;         // integrate only |z| < delta/4, where the cutoff is identically 1
};

struct ResidualReport {
  double norm = 0.0;
  double core_norm = 0.0;       // restricted to |z| < delta/4, where the cutoff is identically 1
  double shell_fraction = 0.0;  // share of the squared norm from delta/4 <= |z| <= delta/2
  double width = 0.0;
  int points = 0;
};

// ||Box_g u||_{H^k} over the tube portion tau in [tau_lo, tau_hi], using
// Box(a e^{i rho phi}) = e^{i rho phi}(-rho^2 (S phi) a + i rho (2<dphi,da> + (Box phi) a) + Box a).
ResidualReport beam_residual(const GaussianBeam& beam, const ResidualOptions& opt = {});

struct SourceOptions {
  double ramp_width = 0.0;  // 0: half the distance from t = 0 to the footprint
  double margin = 0.02;     // required clearance of the footprint from t = 0 and t = T
  bool backward = false;    // ramp at t = T instead of t = 0
};

// relative magnitude below which boundary samples do not count towards the footprint
inline constexpr double kFootprintFloor = 1e-10;

struct BeamSourceReport {
  NeumannSource source;
  double t_first = 0.0, t_last = 0.0;
  int footprint_nodes = 0;
  Vec footprint_center;
};

// Samples the outward normal derivative of the beam on the boundary grid (real and imaginary parts).
BeamSourceReport beam_neumann_source(const GaussianBeam& beam, const WarpedMetric& g, const SpacetimeGrid& grid,
                                     const SourceOptions& opt = {});

// Beam values (complex) sampled at every spacetime node (zero off the tube).
std::vector<cplx> sample_beam(const GaussianBeam& beam, const SpacetimeGrid& grid);

}  // namespace beamlab
