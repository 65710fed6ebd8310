#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beamlab/io.hpp"
#include "beamlab/metric.hpp"
#include "beamlab/wave_solver.hpp"

namespace beamlab {

enum class TaskType { forward, beam_verify, covector_verify, linearize_verify, calibrate, recover, ladder };

const char* task_name(TaskType t);
TaskType task_from_name(const std::string& s);  // ConfigError listing the valid names
std::vector<TaskType> all_tasks();

struct GridSpec {
  int cells = 32;
  int steps = 0;  // 0: smallest CFL-stable count for the courant factor
  double horizon = 1.0;
  double courant = 0.8;

  SpacetimeGrid build(const WarpedMetric& g) const;
};

// Gaussian boundary pulse on each listed face; s0 is the first tangential spatial coordinate of the face.
struct PulseSpec {
  std::vector<int> faces{0};
  double t0 = 0.3;
  double s0 = 0.5;
  double width2 = 0.01;
  double amplitude = 1.0;
};

NeumannSource pulse(const SpacetimeGrid& grid, const PulseSpec& p);

struct ExperimentConfig {
  TaskType task = TaskType::forward;
  WarpedMetric metric = WarpedMetric::minkowski(3);
  GridSpec grid;
  NonlinearityProfile nonlinearity;
  nlohmann::json params = nlohmann::json::object();  // task-specific, defaults filled in
  std::string output = "out";
  std::uint64_t seed = 0;
  int workers = 0;  // 0: BEAMLAB_WORKERS or the hardware count

  // Validates everything that can be checked before any compute; ConfigError names the key.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  // content hash of everything that affects results (output and workers excluded)
  std::string fingerprint() const;
};

nlohmann::json default_params(TaskType t, int dim = 3);
// complete config with every default spelled out
nlohmann::json reference_config(TaskType t);

// "a.b.c=value"; the value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct ResultRecord {
  std::string fingerprint;
  std::string task;
  std::map<std::string, double> timings;  // seconds
  std::vector<std::string> files;          // relative to the output directory
  std::vector<CheckResult> checks;
  nlohmann::json summary = nlohmann::json::object();

  bool passed() const;
  nlohmann::json to_json() const;
};

// Runs the task and writes its CSV / JSON files plus record.json into config.output.
ResultRecord run_experiment(const ExperimentConfig& config, bool write_files = true);

// Reruns with one parameter scaled by each factor; the table carries the observed order between rows.
//   grid:    manufactured-solution error at cells * factor (any task)
//   step:    Riccati c0 drift at step * factor (beam-verify)
//   rho:     beam residual at rho * factor, per order (beam-verify)
//   epsilon: FD vs cascade difference at eps * factor (linearize-verify)
CsvTable convergence_sweep(const ExperimentConfig& config, const std::string& axis, const std::vector<double>& factors);

}  // namespace beamlab
