#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "beamlab/error.hpp"
#include "harness_internal.hpp"

namespace beamlab {

using nlohmann::json;

namespace {

struct TaskName {
  TaskType t;
  const char* name;
};
constexpr TaskName kTasks[] = {{TaskType::forward, "forward"},
                               {TaskType::beam_verify, "beam-verify"},
                               {TaskType::covector_verify, "covector-verify"},
                               {TaskType::linearize_verify, "linearize-verify"},
                               {TaskType::calibrate, "calibrate"},
                               {TaskType::recover, "recover"},
                               {TaskType::ladder, "ladder"}};

bool is_recovery(TaskType t) { return t == TaskType::calibrate || t == TaskType::recover || t == TaskType::ladder; }

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

void check_keys(const json& j, const std::string& path, const std::vector<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(path + "." + it.key(), "unknown key (expected one of: " + list + ")");
    }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + "." + key, std::string("wrong type (") + e.what() + ")");
  }
}

Vec vec_of(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> point_default(int dim, double t) {
  std::vector<double> p(dim, 0.5);
  p[0] = t;
  return p;
}

void require(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) fail(path, msg);
}

void check_point(const Vec& p, int dim, double horizon, const std::string& path) {
  require(p.size() == dim, path, "needs " + std::to_string(dim) + " coordinates (t, x...)");
  require(p[0] >= 0.0 && p[0] <= horizon, path, "time outside [0, horizon]");
  for (int i = 1; i < dim; ++i) require(p[i] > 0.0 && p[i] < 1.0, path, "spatial coordinates must lie in (0, 1)");
}

std::vector<PulseSpec> pulses_from(const json& arr, const ExperimentConfig& c, const std::string& path) {
  if (!arr.is_array() || arr.empty()) fail(path, "expected a non-empty list of pulses");
  std::vector<PulseSpec> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    check_keys(arr[i], p, {"faces", "t0", "s0", "width2", "amplitude"});
    PulseSpec s;
    s.faces = arr[i].contains("faces") ? get<std::vector<int>>(arr[i], "faces", p) : s.faces;
    s.t0 = arr[i].contains("t0") ? get<double>(arr[i], "t0", p) : s.t0;
    s.s0 = arr[i].contains("s0") ? get<double>(arr[i], "s0", p) : s.s0;
    s.width2 = arr[i].contains("width2") ? get<double>(arr[i], "width2", p) : s.width2;
    s.amplitude = arr[i].contains("amplitude") ? get<double>(arr[i], "amplitude", p) : s.amplitude;
    require(!s.faces.empty(), p + ".faces", "needs at least one face");
    for (int f : s.faces)
      require(f >= 0 && f < 2 * (c.metric.dim() - 1), p + ".faces",
              "face indices must lie in [0, " + std::to_string(2 * (c.metric.dim() - 1)) + ")");
    require(s.t0 >= 0.0 && s.t0 <= c.grid.horizon, p + ".t0", "outside [0, horizon]");
    require(s.width2 > 0.0, p + ".width2", "must be positive");
    out.push_back(s);
  }
  return out;
}

std::vector<double> positive_list(const json& j, const std::string& key, const std::string& path, size_t min_size) {
  const auto v = get<std::vector<double>>(j, key, path);
  require(v.size() >= min_size, path + "." + key, "needs at least " + std::to_string(min_size) + " entries");
  for (double x : v) require(x > 0.0 && std::isfinite(x), path + "." + key, "entries must be positive");
  return v;
}

json merged(const json& defaults, const json& user, const std::string& path) {
  std::vector<std::string> allowed;
  for (auto it = defaults.begin(); it != defaults.end(); ++it) allowed.push_back(it.key());
  check_keys(user, path, allowed);
  json out = defaults;
  for (auto it = user.begin(); it != user.end(); ++it) out[it.key()] = it.value();
  return out;
}

GridSpec default_grid(TaskType t) {
  GridSpec g;
  if (is_recovery(t)) {
    g.cells = 0;
    g.horizon = 1.8;
  }
  return g;
}

json recovery_defaults(int dim) {
  RecoveryTask t;
  t.q0 = vec_of(point_default(dim, 0.9));
  json j = t.to_json();
  // grid values come from the top-level grid section
  j.erase("cells");
  j.erase("horizon");
  j.erase("courant");
  return j;
}

}  // namespace

const char* task_name(TaskType t) {
  for (const auto& e : kTasks)
    if (e.t == t) return e.name;
  return "?";
}

TaskType task_from_name(const std::string& s) {
  std::string list;
  for (const auto& e : kTasks) {
    if (s == e.name) return e.t;
    list += (list.empty() ? "" : ", ") + std::string(e.name);
  }
  throw ConfigError("task: unknown task '" + s + "' (expected one of: " + list + ")");
}

std::vector<TaskType> all_tasks() {
  std::vector<TaskType> v;
  for (const auto& e : kTasks) v.push_back(e.t);
  return v;
}

SpacetimeGrid GridSpec::build(const WarpedMetric& g) const {
  if (steps > 0) return SpacetimeGrid(g, cells, steps, horizon, courant);
  return SpacetimeGrid::with_courant(g, cells, horizon, courant);
}

NeumannSource pulse(const SpacetimeGrid& grid, const PulseSpec& p) {
  for (int f : p.faces)
    if (f < 0 || f >= grid.faces()) throw DomainError("pulse: no such face");
  return sample_source(grid, [&](int f, const Vec& x) {
    if (std::find(p.faces.begin(), p.faces.end(), f) == p.faces.end()) return 0.0;
    const int axis = f / 2 + 1;
    const int other = axis == 1 ? 2 : 1;
    double r2 = (x[0] - p.t0) * (x[0] - p.t0) + (x[other] - p.s0) * (x[other] - p.s0);
    for (int j = 1; j < grid.dim(); ++j)
      if (j != axis && j != other) r2 += (x[j] - 0.5) * (x[j] - 0.5);
    return p.amplitude * std::exp(-r2 / p.width2);
  });
}

json default_params(TaskType t, int dim) {
  switch (t) {
    case TaskType::forward:
      return {{"sources", json::array({{{"faces", {0}}, {"t0", 0.3}, {"s0", 0.5}, {"width2", 0.01}, {"amplitude", 0.1}}})},
              {"target_ratio", 0.5},
              {"tol", 1e-10},
              {"max_iterations", 50}};
    case TaskType::beam_verify: {
      std::vector<double> dir(dim - 1, 0.0);
      dir[0] = 1.0;
      return {{"point", point_default(dim, 0.3)},
              {"direction", dir},
              {"orders", {2, 4}},
              {"rhos", {16, 32, 64, 128, 256}},
              {"focus", 1.0},
              {"step", 1e-3},
              {"coarse_step", 0.02},
              {"delta", 0.6},
              {"window", 0.1},
              {"tau_points", 9},
              {"points_per_width", 4.0},
              {"core_only", true},
              {"drift_tolerance", 1e-6},
              {"min_halving_order", 3.8},
              {"slope_tolerance", 0.5}};
    }
    case TaskType::covector_verify:
      return {{"r0s", {0.0, 0.3, 0.6, 0.9}},
              {"varsigmas", {1e-1, 1e-2, 1e-3}},
              {"random_samples", 0},
              {"tolerance", 0.01},
              {"decomposition_tolerance", 1e-12}};
    case TaskType::linearize_verify:
      return {{"sources", json::array({{{"faces", {0, 2}}, {"t0", 0.15}, {"s0", 0.3}, {"width2", 0.006}},
                                       {{"faces", {0, 2}}, {"t0", 0.2}, {"s0", 0.5}, {"width2", 0.006}},
                                       {{"faces", {0, 2}}, {"t0", 0.25}, {"s0", 0.7}, {"width2", 0.006}}})},
              {"beta", {1, 1, 1}},
              {"eps", 1e-3},
              {"tolerance", 0.05}};
    case TaskType::calibrate:
    case TaskType::recover:
    case TaskType::ladder: {
      const auto q0 = point_default(dim, 0.9);
      json p{{"recovery", recovery_defaults(dim)},
             {"reference", json::array({{{"center", q0}, {"radius", 0.2}, {"amplitude", 1.0}}})}};
      if (t == TaskType::recover) {
        p["calibration"] = "";
        p["truth"] = nullptr;
        p["truth_tolerance"] = 0.15;
      }
      if (t == TaskType::ladder) {
        LadderOptions lo;
        p["k_max"] = lo.k_max;
        p["support"] = json::array();
        p["field_radius"] = lo.field_radius;
        p["known_h2"] = json::object();
        p["truths"] = json::object();
        p["truth_tolerance"] = 0.2;
      }
      return p;
    }
  }
  return json::object();
}

json reference_config(TaskType t) {
  ExperimentConfig c;
  c.task = t;
  c.grid = default_grid(t);
  c.params = default_params(t, c.metric.dim());
  if (t == TaskType::forward) c.nonlinearity.set(2, {CompactBump{{0.55, 0.5, 0.5}, 0.35, 1.0}});
  if (t == TaskType::linearize_verify) {
    c.nonlinearity.set(2, {CompactBump{{0.55, 0.3, 0.3}, 0.35, 1.0}});
    c.nonlinearity.set(3, {CompactBump{{0.55, 0.3, 0.3}, 0.35, 0.5}});
  }
  if (t == TaskType::recover || t == TaskType::ladder)
    c.nonlinearity.set(3, {CompactBump{{0.9, 0.55, 0.5}, 0.35, 1.0}});
  return c.to_json();
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key.path=value");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty path component");
    parts.push_back(part);
  }
  for (size_t i = 0; i < parts.size(); ++i) {
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      size_t idx;
      try {
        idx = std::stoul(parts[i]);
      } catch (const std::exception&) {
        throw ConfigError("override '" + assignment + "': '" + parts[i] + "' is not a list index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + assignment + "': index " + parts[i] + " out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override '" + assignment + "': '" + parts[i - 1] + "' is not a table");
      node = &(*node)[parts[i]];
    }
    if (last) *node = value;
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, "config", {"task", "metric", "grid", "nonlinearity", "params", "output", "seed", "workers"});
  ExperimentConfig c;
  c.task = task_from_name(get<std::string>(j, "task", "config"));
  if (j.contains("metric")) {
    const auto& m = j.at("metric");
    check_keys(m, "metric", {"preset", "dim", "bump"});
    const int dim = get<int>(m, "dim", "metric");
    require(dim == 3 || dim == 4, "metric.dim", "spacetime dimension must be 3 or 4");
    if (m.contains("bump")) {
      check_keys(m.at("bump"), "metric.bump", {"center", "width", "amplitude"});
      const auto ctr = get<std::vector<double>>(m.at("bump"), "center", "metric.bump");
      require(static_cast<int>(ctr.size()) == dim, "metric.bump.center", "needs dim coordinates");
      require(get<double>(m.at("bump"), "width", "metric.bump") > 0.0, "metric.bump.width", "must be positive");
      const double amp = get<double>(m.at("bump"), "amplitude", "metric.bump");
      require(amp > -0.9 && amp <= 1.0, "metric.bump.amplitude",
              "must lie in (-0.9, 1] so the factor 1 + bump stays safely positive");
    }
    try {
      c.metric = metric_from_json(m);
    } catch (const json::exception& e) {
      fail("metric", std::string("malformed (") + e.what() + ")");
    } catch (const DomainError& e) {
      fail("metric", e.what());
    }
  }
  const int dim = c.metric.dim();

  c.grid = default_grid(c.task);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, "grid", {"cells", "steps", "horizon", "courant"});
    if (g.contains("cells")) c.grid.cells = get<int>(g, "cells", "grid");
    if (g.contains("steps")) c.grid.steps = get<int>(g, "steps", "grid");
    if (g.contains("horizon")) c.grid.horizon = get<double>(g, "horizon", "grid");
    if (g.contains("courant")) c.grid.courant = get<double>(g, "courant", "grid");
  }
  require(c.grid.horizon > 0.0, "grid.horizon", "must be positive");
  require(c.grid.courant > 0.0 && c.grid.courant <= 1.0, "grid.courant", "must lie in (0, 1]");
  require(c.grid.steps >= 0, "grid.steps", "must be >= 0 (0 picks the CFL-stable count)");
  if (is_recovery(c.task))
    require(c.grid.cells == 0 || c.grid.cells >= 8, "grid.cells", "must be 0 (points-per-wavelength rule) or >= 8");
  else {
    require(c.grid.cells >= 4, "grid.cells", "must be >= 4");
    try {
      c.grid.build(c.metric);
    } catch (const DomainError& e) {
      fail("grid", std::string(e.what()) + " (raise grid.steps, set it to 0, or lower grid.courant)");
    }
  }

  if (j.contains("nonlinearity")) {
    try {
      c.nonlinearity = profile_from_json(j.at("nonlinearity"));
    } catch (const json::exception& e) {
      fail("nonlinearity", std::string("malformed bump (") + e.what() + ")");
    } catch (const ConfigError& e) {
      fail("nonlinearity", e.what());
    }
    for (int k = 2; k <= c.nonlinearity.max_order(); ++k)
      for (const auto& b : c.nonlinearity.h[k])
        require(static_cast<int>(b.center.size()) == dim, "nonlinearity.h" + std::to_string(k),
                "bump centres need " + std::to_string(dim) + " coordinates");
  }

  if (j.contains("output")) c.output = get<std::string>(j, "output", "config");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "config");
  if (j.contains("workers")) c.workers = get<int>(j, "workers", "config");
  require(c.workers >= 0, "workers", "must be >= 0 (0: BEAMLAB_WORKERS or hardware count)");

  const json defaults = default_params(c.task, dim);
  c.params = merged(defaults, j.value("params", json::object()), "params");
  if (c.params.contains("recovery") && j.contains("params") && j.at("params").contains("recovery")) {
    const auto& user = j.at("params").at("recovery");
    for (const char* k : {"cells", "horizon", "courant"})
      if (user.is_object() && user.contains(k))
        fail(std::string("params.recovery.") + k, std::string("set grid.") + k + " instead");
    c.params["recovery"] = merged(defaults.at("recovery"), user, "params.recovery");
  }

  // typed parse of the task parameters so errors surface before any compute
  switch (c.task) {
    case TaskType::forward: detail::forward_params(c); break;
    case TaskType::beam_verify: detail::beam_params(c); break;
    case TaskType::covector_verify: detail::covector_params(c); break;
    case TaskType::linearize_verify: detail::linearize_params(c); break;
    default: detail::recovery_params(c); break;
  }
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"task", task_name(task)},
          {"metric", metric_to_json(metric)},
          {"grid", {{"cells", grid.cells}, {"steps", grid.steps}, {"horizon", grid.horizon}, {"courant", grid.courant}}},
          {"nonlinearity", profile_to_json(nonlinearity)},
          {"params", params},
          {"output", output},
          {"seed", seed},
          {"workers", workers}};
}

std::string ExperimentConfig::fingerprint() const {
  json j = to_json();
  j.erase("output");
  j.erase("workers");
  return content_fingerprint(j);
}

namespace detail {

ForwardParams forward_params(const ExperimentConfig& c) {
  const auto& p = c.params;
  ForwardParams f;
  f.sources = pulses_from(p.at("sources"), c, "params.sources");
  f.target_ratio = get<double>(p, "target_ratio", "params");
  f.tol = get<double>(p, "tol", "params");
  f.max_iterations = get<int>(p, "max_iterations", "params");
  require(f.target_ratio > 0.0 && f.target_ratio < 1.0, "params.target_ratio", "must lie in (0, 1)");
  require(f.tol >= 0.0, "params.tol", "must be >= 0");
  require(f.max_iterations >= 1, "params.max_iterations", "must be >= 1");
  return f;
}

BeamVerifyParams beam_params(const ExperimentConfig& c) {
  const auto& p = c.params;
  const int dim = c.metric.dim();
  BeamVerifyParams b;
  b.point = vec_of(get<std::vector<double>>(p, "point", "params"));
  check_point(b.point, dim, 1.0, "params.point");
  b.direction = vec_of(get<std::vector<double>>(p, "direction", "params"));
  require(b.direction.size() == dim - 1 && b.direction.norm() > 0.0, "params.direction",
          "needs " + std::to_string(dim - 1) + " spatial components, not all zero");
  b.orders = get<std::vector<int>>(p, "orders", "params");
  require(!b.orders.empty(), "params.orders", "needs at least one beam order");
  for (int n : b.orders) require(n >= 1 && n <= 6, "params.orders", "orders must lie in 1 .. 6");
  b.rhos = positive_list(p, "rhos", "params", 2);
  b.focus = get<double>(p, "focus", "params");
  b.step = get<double>(p, "step", "params");
  b.coarse_step = get<double>(p, "coarse_step", "params");
  b.delta = get<double>(p, "delta", "params");
  b.window = get<double>(p, "window", "params");
  b.tau_points = get<int>(p, "tau_points", "params");
  b.points_per_width = get<double>(p, "points_per_width", "params");
  b.core_only = get<bool>(p, "core_only", "params");
  b.drift_tolerance = get<double>(p, "drift_tolerance", "params");
  b.min_halving_order = get<double>(p, "min_halving_order", "params");
  b.slope_tolerance = get<double>(p, "slope_tolerance", "params");
  require(b.focus > 0.0, "params.focus", "must be positive");
  require(b.step > 0.0 && b.step <= 0.1, "params.step", "must lie in (0, 0.1]");
  require(b.coarse_step > b.step && b.coarse_step <= 0.2, "params.coarse_step", "must lie in (step, 0.2]");
  require(b.delta > 0.0, "params.delta", "must be positive");
  require(b.window > 0.0, "params.window", "must be positive");
  require(b.tau_points >= 2, "params.tau_points", "must be >= 2");
  require(b.points_per_width > 0.0, "params.points_per_width", "must be positive");
  return b;
}

CovectorParams covector_params(const ExperimentConfig& c) {
  const auto& p = c.params;
  CovectorParams v;
  v.r0s = get<std::vector<double>>(p, "r0s", "params");
  require(!v.r0s.empty(), "params.r0s", "needs at least one r0");
  for (double r : v.r0s) require(r >= 0.0 && r < 1.0, "params.r0s", "r0 must lie in [0, 1)");
  v.varsigmas = positive_list(p, "varsigmas", "params", 1);
  for (double s : v.varsigmas) require(s < 1.0, "params.varsigmas", "varsigma must lie in (0, 1)");
  v.random_samples = get<int>(p, "random_samples", "params");
  require(v.random_samples >= 0, "params.random_samples", "must be >= 0");
  v.tolerance = get<double>(p, "tolerance", "params");
  v.decomposition_tolerance = get<double>(p, "decomposition_tolerance", "params");
  return v;
}

LinearizeParams linearize_params(const ExperimentConfig& c) {
  const auto& p = c.params;
  LinearizeParams l;
  l.sources = pulses_from(p.at("sources"), c, "params.sources");
  l.beta = get<MultiIndex>(p, "beta", "params");
  require(l.beta.size() == l.sources.size(), "params.beta", "needs one order per source");
  int total = 0;
  for (int b : l.beta) {
    require(b >= 0, "params.beta", "orders must be >= 0");
    total += b;
  }
  require(total >= 1 && total <= 6, "params.beta", "total order must lie in 1 .. 6");
  l.eps = get<double>(p, "eps", "params");
  l.tolerance = get<double>(p, "tolerance", "params");
  require(l.eps > 0.0 && l.eps < 1.0, "params.eps", "must lie in (0, 1)");
  return l;
}

RecoveryParams recovery_params(const ExperimentConfig& c) {
  const auto& p = c.params;
  const int dim = c.metric.dim();
  RecoveryParams r;
  try {
    r.task = RecoveryTask::from_json(p.at("recovery"));
  } catch (const json::exception& e) {
    fail("params.recovery", std::string("wrong type (") + e.what() + ")");
  } catch (const ConfigError& e) {
    fail("params.recovery", e.what());
  }
  r.task.cells = c.grid.cells;
  r.task.horizon = c.grid.horizon;
  r.task.courant = c.grid.courant;
  r.task.workers = c.workers;
  check_point(r.task.q0, dim, c.grid.horizon, "params.recovery.q0");
  try {
    r.task.validate(c.metric);
  } catch (const DomainError& e) {
    fail("params.recovery", e.what());
  }
  const auto& ref = p.at("reference");
  if (!ref.is_array() || ref.empty()) fail("params.reference", "expected a non-empty list of bumps");
  for (size_t i = 0; i < ref.size(); ++i) {
    const std::string path = "params.reference[" + std::to_string(i) + "]";
    check_keys(ref[i], path, {"center", "radius", "amplitude"});
    try {
      r.reference.push_back(bump_from_json(ref[i]));
    } catch (const json::exception& e) {
      fail(path, std::string("malformed bump (") + e.what() + ")");
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
    require(static_cast<int>(r.reference.back().center.size()) == dim, path + ".center",
            "needs " + std::to_string(dim) + " coordinates");
  }
  if (c.task == TaskType::recover) {
    r.calibration = get<std::string>(p, "calibration", "params");
    if (!p.at("truth").is_null()) r.truth = get<double>(p, "truth", "params");
    r.truth_tolerance = get<double>(p, "truth_tolerance", "params");
  }
  if (c.task == TaskType::ladder) {
    r.ladder.k_max = get<int>(p, "k_max", "params");
    require(r.ladder.k_max >= 3 && r.ladder.k_max <= 6, "params.k_max", "must lie in 3 .. 6");
    r.ladder.field_radius = get<double>(p, "field_radius", "params");
    require(r.ladder.field_radius > 0.0, "params.field_radius", "must be positive");
    r.ladder.reference_radius = r.reference.front().radius;
    const auto& sup = p.at("support");
    if (!sup.is_array()) fail("params.support", "expected a list of points");
    for (size_t i = 0; i < sup.size(); ++i) {
      std::vector<double> qv;
      try {
        qv = sup[i].get<std::vector<double>>();
      } catch (const json::exception& e) {
        fail("params.support[" + std::to_string(i) + "]", std::string("expected a point (") + e.what() + ")");
      }
      const auto q = vec_of(qv);
      check_point(q, dim, c.grid.horizon, "params.support[" + std::to_string(i) + "]");
      r.ladder.support.push_back(q);
    }
    try {
      r.known_h2 = profile_from_json(p.at("known_h2"));
    } catch (const std::exception& e) {
      fail("params.known_h2", e.what());
    }
    for (int k = 3; k <= r.known_h2.max_order(); ++k)
      require(r.known_h2.h[k].empty(), "params.known_h2", "may only hold h2");
    const auto& tr = p.at("truths");
    if (!tr.is_object()) fail("params.truths", "expected a table like {\"3\": 1.0}");
    for (auto it = tr.begin(); it != tr.end(); ++it) {
      int k = 0;
      try {
        k = std::stoi(it.key());
      } catch (const std::exception&) {
      }
      require(k >= 3 && k <= r.ladder.k_max, "params.truths." + it.key(), "key must be an order in 3 .. k_max");
      r.truths[k] = get<double>(tr, it.key(), "params.truths");
    }
    r.truth_tolerance = get<double>(p, "truth_tolerance", "params");
  }
  return r;
}

}  // namespace detail

}  // namespace beamlab
