#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beamlab/harness.hpp"
#include "beamlab/linearization.hpp"
#include "beamlab/recovery.hpp"

namespace beamlab::detail {

struct ForwardParams {
  std::vector<PulseSpec> sources;
  double target_ratio = 0.5;
  double tol = 1e-10;
  int max_iterations = 50;
};

struct BeamVerifyParams {
  Vec point, direction;
  std::vector<int> orders;
  std::vector<double> rhos;
  double focus = 1.0;  // H0 = i * focus * I
  double step = 1e-3, coarse_step = 0.02;
  double delta = 0.6, window = 0.1;
  int tau_points = 9;
  double points_per_width = 4.0;
  bool core_only = true;
  double drift_tolerance = 1e-6, min_halving_order = 3.8, slope_tolerance = 0.5;
};

struct CovectorParams {
  std::vector<double> r0s, varsigmas;
  int random_samples = 0;
  double tolerance = 0.01, decomposition_tolerance = 1e-12;
};

struct LinearizeParams {
  std::vector<PulseSpec> sources;
  MultiIndex beta;
  double eps = 1e-3, tolerance = 0.05;
};

struct RecoveryParams {
  RecoveryTask task;
  std::vector<CompactBump> reference;
  std::string calibration;  // path of a stored profile; empty: calibrate in the run
  std::optional<double> truth;
  double truth_tolerance = 0.15;
  LadderOptions ladder;
  NonlinearityProfile known_h2;
  std::map<int, double> truths;
};

ForwardParams forward_params(const ExperimentConfig& c);
BeamVerifyParams beam_params(const ExperimentConfig& c);
CovectorParams covector_params(const ExperimentConfig& c);
LinearizeParams linearize_params(const ExperimentConfig& c);
RecoveryParams recovery_params(const ExperimentConfig& c);

}  // namespace beamlab::detail
