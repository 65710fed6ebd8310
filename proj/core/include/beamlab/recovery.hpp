#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beamlab/beams.hpp"
#include "beamlab/covector.hpp"
#include "beamlab/io.hpp"
#include "beamlab/linearization.hpp"

namespace beamlab {

enum class PairingMethod { cascade, finite_difference };

const char* pairing_method_name(PairingMethod m);
PairingMethod pairing_method_from_name(const std::string& s);

struct RecoveryTask {
  Vec q0;
  int k = 3;
  // frame: canonical xi0(r0), xi1 pushed through the canonical frame at q0, then perturbed by varsigma
  double r0 = 0.0;
  double varsigma = 0.99;
  // beams: H0 = i diag(focus, 1, ..., 1), Y0 = I at q0
  int beam_order = 2;
  double delta = 4.0;
  double focus = 4.0;
  std::vector<double> rhos = {12, 16, 24, 32, 48};
  NonlinearityProfile known;  // h_2 .. h_{k-1}
  // grid: cells = 0 picks the points-per-wavelength rule for the largest rho
  int cells = 0;
  double points_per_wavelength = 10.0;
  double horizon = 1.8;
  double courant = 0.8;
  double ramp_width = 0.1;
  // multiplies the matched kappas; anything but ones breaks phase matching
  std::array<double, 4> kappa_scale = {1.0, 1.0, 1.0, 1.0};
  PairingMethod pairing = PairingMethod::cascade;
  double fd_step = 1e-3;
  double fit_tolerance = 0.1;  // fit residual relative to the fitted limit
  double correction_guard = 10.0;  // |correction| above this multiple of the main term is an error; 0 disables
  int workers = 0;

  void validate(const WarpedMetric& g) const;
  // omega_j: largest angular frequency of beam j per unit rho
  int grid_cells(const std::array<double, 4>& omega) const;
  nlohmann::json to_json() const;
  static RecoveryTask from_json(const nlohmann::json& j);
};

struct AimedBeam {
  BeamPhase phase;
  BeamAmplitude amplitude;
  double kappa = 1.0;  // signed frequency multiplier
  int multiplicity = 1;
  bool backward = false;
  double exit_time = 0.0;  // where the source side of the axis crosses the boundary
  cplx a0 = 1.0;           // leading amplitude at q0
};

// Beam 0 is the backward-time beam; beams 1, 2 and 3 carry the sources, beam 3 with
// multiplicity k - 2 at kappa_3 / (k - 2).
struct BeamSet {
  NullFrame frame;
  KappaResult kappas;
  std::vector<AimedBeam> beams;
  Vec q0;

  MultiIndex beta() const;
  cplx a0_product() const;
  // S = sum_j multiplicity_j kappa_j psi_j with psi_j the phase each beam carries
  // (conjugated for negative kappa); nullopt off some chart
  std::optional<cplx> phase_sum(const Vec& x) const;
  // dS at q0 by central differences
  CVec phase_sum_gradient(double h = 1e-5) const;
};

BeamSet aim_beams(const WarpedMetric& g, const RecoveryTask& task);

// Sources and the backward solution for one rho; independent of the medium.
struct SweepLevel {
  double rho = 0.0;
  std::vector<NeumannSource> sources;  // real parts, beams 1..3
  NeumannSource f0;
  std::vector<double> v0;
  double seconds = 0.0;
};

struct PairingSweep {
  SpacetimeGrid grid;
  BeamSet beams;
  std::vector<SweepLevel> levels;
  std::string fingerprint;  // frame, beams, rho list, grid, metric
};

PairingSweep prepare_sweep(const WarpedMetric& g, const RecoveryTask& task);

struct PairingSample {
  double rho = 0.0;
  double measured = 0.0;    // <d^beta Lambda, f0>
  double correction = 0.0;  // the part carried by the known coefficients
  double value = 0.0;       // rho^{(n+1)/2} (measured - correction)
  double seconds = 0.0;
};

// `medium` is the coefficient profile that produces the boundary data.
PairingSample linearized_pairing(const WarpedMetric& g, const RecoveryTask& task, const PairingSweep& sweep,
                                 size_t level, const NonlinearityProfile& medium);
std::vector<PairingSample> pairing_samples(const WarpedMetric& g, const RecoveryTask& task,
                                           const PairingSweep& sweep, const NonlinearityProfile& medium);

struct RhoFit {
  double A = 0.0, B = 0.0;
  double residual = 0.0;  // RMS deviation from A + B / rho
  double condition = 0.0;
};

RhoFit rho_sweep_fit(const std::vector<double>& rho, const std::vector<double>& I);
RhoFit rho_sweep_fit(const std::vector<PairingSample>& samples);

CsvTable samples_csv(const std::vector<PairingSample>& samples);

struct CalibrationProfile {
  int k = 3;
  double constant = 0.0;  // A_ref / (h_ref(q0) prod a0)
  double A_ref = 0.0;
  double h_ref = 0.0;
  double a0_product = 1.0;
  RhoFit fit;
  std::vector<PairingSample> samples;
  std::vector<CompactBump> reference;
  nlohmann::json config;
  std::string fingerprint;

  nlohmann::json to_json() const;
  static CalibrationProfile from_json(const nlohmann::json& j);
};

CalibrationProfile calibrate(const WarpedMetric& g, const RecoveryTask& task, const PairingSweep& sweep,
                             const std::vector<CompactBump>& reference);
CalibrationProfile calibrate(const WarpedMetric& g, const RecoveryTask& task, const std::vector<CompactBump>& reference);

struct RecoveryReport {
  Vec q0;
  int k = 3;
  double value = 0.0;
  std::vector<PairingSample> samples;
  RhoFit fit;
  double max_correction = 0.0;  // largest scaled correction magnitude over the sweep
  std::optional<double> truth;
  std::optional<double> relative_error;
  std::string calibration_fingerprint;
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

RecoveryReport recover_coefficient(const WarpedMetric& g, const RecoveryTask& task, const PairingSweep& sweep,
                                   const CalibrationProfile& cal, const NonlinearityProfile& medium,
                                   std::optional<double> truth = std::nullopt);
RecoveryReport recover_coefficient(const WarpedMetric& g, const RecoveryTask& task, const CalibrationProfile& cal,
                                   const NonlinearityProfile& medium, std::optional<double> truth = std::nullopt);

// Compact bumps of the given radius centred at the points, with amplitudes interpolating the values.
std::vector<CompactBump> rbf_field(const std::vector<Vec>& points, const std::vector<double>& values, double radius);

struct LadderOptions {
  int k_max = 4;
  std::vector<Vec> support;    // recovery points for the field model; empty means {q0}
  double field_radius = 0.35;  // radius of the field model bumps
  double reference_radius = 0.2;
};

// h_3 .. h_{k_max} at task.q0; each level feeds its fitted field into the next level's corrections.
std::vector<RecoveryReport> recovery_ladder(const WarpedMetric& g, const RecoveryTask& base,
                                            const NonlinearityProfile& known_h2, const NonlinearityProfile& medium,
                                            const LadderOptions& opt = {});

}  // namespace beamlab
