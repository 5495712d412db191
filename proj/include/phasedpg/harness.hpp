#pragma once

#include "phasedpg/optimizer.hpp"
#include "phasedpg/serialization.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phasedpg {

/// Environment variable consulted when neither the config nor the command
/// line names an output directory.
inline constexpr const char* kOutputDirEnv = "PHASEDPG_OUTPUT_DIR";

struct EnvironmentSpec {
  std::string builtin;  // empty when `file` is used
  std::map<std::string, std::string> params;
  std::filesystem::path file;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  std::string algorithm = "phased";  // phased | single
  long long episodes = 0;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  std::vector<long long> checkpoints;

  long long T0 = 1;
  int batch_size = 1;
  std::optional<double> step_coefficient;
  std::optional<double> epsilon_pp;
  bool recenter = false;
  double lambda = 0.0;  // single-trajectory algorithm only
  EstimatorConfig estimator;
  std::optional<PolicyParams> theta0;

  bool dump_trajectories = false;
  bool log_exact_gradient = false;
  bool parallel_batch = false;
};

/// Parses and validates a JSON experiment config; relative paths resolve
/// against `base_dir`.
ExperimentConfig parse_experiment_config(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

Mdp build_environment(const EnvironmentSpec& spec);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<long long> episodes;
  std::optional<std::filesystem::path> output_dir;
};

/// Writes episodes.jsonl, regret.csv, summary.json, final_theta.json,
/// plot_average_regret.csv and plot_log_regret.csv (plus trajectories.jsonl
/// on request). Returns the process exit status.
int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
            std::ostream& out, std::ostream& err);
int cmd_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

struct CheckLine {
  std::string instance;
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
  std::string note;
};

struct CheckSettings {
  double lambda = 0.1;
  std::vector<int> horizons{2, 3};
  double beta = 0.5;
  double baseline_constant = 0.7;
  long long norm_samples = 20000;
  std::uint64_t seed = 1;
  double fd_step = 1e-5;
  /// Negative control: zero out M1, C1 and the bias bound.
  bool corrupt_constants = false;
};

/// Runs the oracle suite (gradient check, bias bound, baseline zero-mean,
/// second moment, norm bound, gradient-domination check) on each instance.
std::vector<CheckLine> run_checks(const std::vector<std::pair<std::string, Mdp>>& instances,
                                  const CheckSettings& settings);

/// Tiny enumerable corpus used when a check config names no environment.
std::vector<std::pair<std::string, Mdp>> default_check_corpus();

int cmd_check(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

int cmd_gen_env(const std::string& name, const std::map<std::string, std::string>& params,
                const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);

}  // namespace phasedpg
