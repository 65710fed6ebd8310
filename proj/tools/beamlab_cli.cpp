#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "beamlab/error.hpp"
#include "beamlab/harness.hpp"

using namespace beamlab;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kChecksFailed = 1, kBadConfig = 2, kRuntime = 3 };

struct Common {
  std::string config, out;
  int workers = -1;
  std::vector<std::string> overrides;
  bool check_only = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment config (JSON); defaults to the reference config")
      ->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory");
  app->add_option("--workers", c.workers, "worker threads (default: BEAMLAB_WORKERS or hardware count)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--override", c.overrides, "key.path=value, applied after the config file")->take_all();
  app->add_flag("--check-only", c.check_only, "validate the config and exit");
}

ExperimentConfig load(TaskType task, const Common& c) {
  json j;
  if (c.config.empty()) {
    j = reference_config(task);
  } else {
    j = read_json(c.config);
    if (!j.is_object()) throw ConfigError(c.config + ": top level must be an object");
    if (!j.contains("task")) j["task"] = task_name(task);
    if (j.at("task") != task_name(task))
      throw ConfigError(c.config + ": config is for task '" + j.at("task").dump() + "', not '" + task_name(task) + "'");
  }
  for (const auto& o : c.overrides) apply_override(j, o);
  if (!c.out.empty()) j["output"] = c.out;
  if (c.workers >= 0) j["workers"] = c.workers;
  return ExperimentConfig::from_json(j);
}

int report(const ResultRecord& r, const std::string& out) {
  for (const auto& c : r.checks)
    std::printf("%s  %-28s value %.4g  threshold %.4g\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                c.threshold);
  std::printf("fingerprint %s  %.2f s  -> %s\n", r.fingerprint.c_str(), r.timings.at("total"), out.c_str());
  return r.passed() ? kOk : kChecksFailed;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kBadConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamlab: Gaussian-beam probing of semilinear wave equations"};
  app.require_subcommand(1);

  std::vector<std::pair<TaskType, CLI::App*>> tasks;
  std::vector<Common> commons(all_tasks().size());
  size_t i = 0;
  for (TaskType t : all_tasks()) {
    auto* sub = app.add_subcommand(task_name(t), std::string("run a ") + task_name(t) + " experiment");
    add_common(sub, commons[i++]);
    tasks.emplace_back(t, sub);
  }

  Common sweep_opts;
  std::string sweep_task = "beam-verify", axis;
  std::vector<double> factors;
  auto* sweep = app.add_subcommand("sweep", "convergence sweep along one axis; writes a CSV table");
  add_common(sweep, sweep_opts);
  sweep->add_option("--task", sweep_task, "task whose config is swept")->capture_default_str();
  sweep->add_option("--axis", axis, "grid | rho | epsilon | step")->required()
      ->check(CLI::IsMember({"grid", "rho", "epsilon", "step"}));
  sweep->add_option("--factors", factors, "scale factors, e.g. --factors 1 2 4")->required()->expected(2, -1);

  std::string ref_task;
  auto* ref = app.add_subcommand("reference", "print the reference config with every default");
  ref->add_option("task", ref_task, "task name")->required();

  CLI11_PARSE(app, argc, argv);

  if (ref->parsed())
    return guarded([&] {
      std::cout << reference_config(task_from_name(ref_task)).dump(2) << "\n";
      return int(kOk);
    });

  if (sweep->parsed())
    return guarded([&] {
      const auto cfg = load(task_from_name(sweep_task), sweep_opts);
      if (sweep_opts.check_only) {
        std::printf("config ok  fingerprint %s\n", cfg.fingerprint().c_str());
        return int(kOk);
      }
      const auto t = convergence_sweep(cfg, axis, factors);
      const std::string path = cfg.output + "/convergence_" + axis + ".csv";
      std::filesystem::create_directories(cfg.output);
      t.write(path);
      std::cout << t.str();
      std::printf("-> %s\n", path.c_str());
      return int(kOk);
    });

  for (size_t k = 0; k < tasks.size(); ++k) {
    if (!tasks[k].second->parsed()) continue;
    return guarded([&] {
      const auto cfg = load(tasks[k].first, commons[k]);
      if (commons[k].check_only) {
        std::printf("config ok  task %s  fingerprint %s\n", task_name(cfg.task), cfg.fingerprint().c_str());
        return int(kOk);
      }
      return report(run_experiment(cfg), cfg.output);
    });
  }
  return kOk;
}
