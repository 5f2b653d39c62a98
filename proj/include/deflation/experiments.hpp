#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deflation/config_file.hpp"
#include "deflation/driver.hpp"
#include "deflation/truss.hpp"

namespace deflation {

struct PropertyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
  bool warn_only = false;  // reported, not asserted
};

struct ExperimentOutcome {
  std::string name;
  RunConfig config;
  SolutionSet set;
  std::map<std::string, std::string> descriptor;  // problem parameters for the result file
  std::vector<PropertyCheck> properties;
  double wall_time = 0.0;

  bool all_passed() const;
};

// Applies recognised run keys (p, sigma, radius, mode, solver, tolerances, ...) on top of cfg.
void apply_run_config(const ConfigFile& file, RunConfig& cfg);

struct HimmelblauSpec {
  RunConfig config;  // mode and solver are overridden per variant
  double big_m = 1e6;
};
HimmelblauSpec himmelblau_spec(const ConfigFile& file = {});
// One variant, run with the given config's mode and solver.
ExperimentOutcome run_himmelblau(const RunConfig& config);
// Slack and big-M modes, each with the AL and barrier backends.
std::vector<ExperimentOutcome> run_himmelblau_experiment(const HimmelblauSpec& spec);

struct ViSpec {
  int components = 10;
  double lo = -20.0;
  double hi = 20.0;
  double component_sigma = 1.0;
  int samples = 100;
  std::uint64_t target_seed = 0;
  RunConfig config;
};
ViSpec vi_spec(const ConfigFile& file = {});
ExperimentOutcome run_vi_experiment(const ViSpec& spec);

struct TrussSpec {
  int nx = 10;
  int ny = 4;
  double volume_fraction = 0.3;
  double reference_radius = 20.0;
  int reference_dim = 3608;
  RunConfig config;
};
TrussSpec truss_spec(const ConfigFile& file = {});
// r * sqrt(n / reference_dim)
double rescaled_truss_radius(const TrussSpec& spec, int n);

struct TrussOutcome {
  ExperimentOutcome outcome;
  TrussModel model;
  double undeflated_wall_time = 0.0;
  double mean_deflated_wall_time = 0.0;
};
TrussOutcome run_truss_experiment(const TrussSpec& spec);

// Loads <dir>/<name>.cfg when it exists, else an empty config (built-in defaults).
ConfigFile load_experiment_config(const std::string& name, const std::string& dir = default_config_dir());

}  // namespace deflation
