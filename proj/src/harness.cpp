#include "phasedpg/harness.hpp"

#include "phasedpg/environments.hpp"
#include "phasedpg/oracle.hpp"
#include "phasedpg/regret.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace phasedpg {

namespace fs = std::filesystem;

namespace {

std::string scalar_to_string(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::setprecision(17) << v.get<double>();
    return os.str();
  }
  throw InvalidArgument("environment parameters must be numbers or strings");
}

EnvironmentSpec parse_environment(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw InvalidArgument("'environment' must be an object");
  EnvironmentSpec spec;
  if (j.contains("file")) {
    if (j.contains("name")) throw InvalidArgument("environment: give either 'name' or 'file', not both");
    spec.file = j.at("file").get<std::string>();
    if (spec.file.is_relative() && !base_dir.empty()) spec.file = base_dir / spec.file;
    if (!fs::exists(spec.file)) throw InvalidArgument("environment file '" + spec.file.string() + "' does not exist");
    return spec;
  }
  if (!j.contains("name")) throw InvalidArgument("environment needs 'name' or 'file'");
  spec.builtin = j.at("name").get<std::string>();
  if (j.contains("params")) {
    for (const auto& [key, value] : j.at("params").items()) spec.params[key] = scalar_to_string(value);
  }
  return spec;
}

EstimatorConfig parse_estimator(const Json& j) {
  EstimatorConfig cfg;
  cfg.beta = j.value("beta", cfg.beta);
  cfg.baseline = baseline_kind_from_string(j.value("baseline", std::string("zero")));
  cfg.baseline_constant = j.value("baseline_value", 0.0);
  if (j.contains("baseline_table")) cfg.baseline_table = j.at("baseline_table").get<std::vector<double>>();
  cfg.baseline_bound = j.value("baseline_bound", 0.0);
  return cfg;
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

ExperimentConfig parse_experiment_config(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  static const std::set<std::string> known = {
      "environment", "algorithm", "episodes", "seed", "output_dir", "checkpoints", "T0",
      "batch_size", "step_coefficient", "epsilon_pp", "recenter", "lambda", "estimator",
      "theta0", "dump_trajectories", "log_exact_gradient", "parallel_batch", "check"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw InvalidArgument("unknown config field '" + key + "'");

  ExperimentConfig cfg;
  try {
    if (!j.contains("environment")) throw InvalidArgument("config needs an 'environment'");
    cfg.environment = parse_environment(j.at("environment"), base_dir);
    cfg.algorithm = j.value("algorithm", cfg.algorithm);
    if (cfg.algorithm != "phased" && cfg.algorithm != "single")
      throw InvalidArgument("algorithm must be 'phased' or 'single'");
    cfg.episodes = j.value("episodes", 0LL);
    if (cfg.episodes < 0) throw InvalidArgument("episodes must be >= 0");
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("output_dir")) {
      cfg.output_dir = j.at("output_dir").get<std::string>();
      if (cfg.output_dir.is_relative() && !base_dir.empty()) cfg.output_dir = base_dir / cfg.output_dir;
    }
    if (j.contains("checkpoints")) cfg.checkpoints = j.at("checkpoints").get<std::vector<long long>>();
    cfg.T0 = j.value("T0", cfg.T0);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.step_coefficient = optional_field<double>(j, "step_coefficient");
    cfg.epsilon_pp = optional_field<double>(j, "epsilon_pp");
    cfg.recenter = j.value("recenter", false);
    cfg.lambda = j.value("lambda", 0.0);
    if (j.contains("estimator")) cfg.estimator = parse_estimator(j.at("estimator"));
    if (j.contains("theta0")) cfg.theta0 = params_from_json(j.at("theta0"));
    cfg.dump_trajectories = j.value("dump_trajectories", false);
    cfg.log_exact_gradient = j.value("log_exact_gradient", false);
    cfg.parallel_batch = j.value("parallel_batch", false);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (cfg.T0 < 1) throw InvalidArgument("T0 must be >= 1");
  if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (cfg.algorithm == "single" && cfg.batch_size != 1)
    throw InvalidArgument("the single-trajectory algorithm has no batch size");
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  if (path.extension() == ".toml" || path.extension() == ".ini")
    throw InvalidArgument("config '" + path.string() + "': only JSON configs are supported (see README)");
  return parse_experiment_config(read_json_file(path), path.parent_path());
}

Mdp build_environment(const EnvironmentSpec& spec) {
  if (!spec.file.empty()) return load_mdp(spec.file);
  return make_environment(spec.builtin, spec.params);
}

int cmd_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const Mdp m = build_environment(config.environment);
    fs::path dir = config.output_dir;
    if (dir.empty()) {
      const char* env = std::getenv(kOutputDirEnv);
      dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("phasedpg_out");
    }
    fs::create_directories(dir);

    const PolicyParams theta0 = config.theta0.value_or(PolicyParams::zeros(m.num_states, m.num_actions));
    if (theta0.num_states() != m.num_states || theta0.num_actions() != m.num_actions)
      throw InvalidArgument("theta0 shape does not match the environment");

    std::ofstream trajectories;
    RunOptions opts;
    opts.log_exact_gradient = config.log_exact_gradient;
    opts.parallel_batch = config.parallel_batch;
    if (config.dump_trajectories) {
      trajectories.open(dir / "trajectories.jsonl");
      opts.on_trajectory = [&](const SeedSpec& seed, const Trajectory& traj) {
        trajectories << trajectory_to_json(seed, traj).dump() << '\n';
      };
    }

    RunRecord record;
    PhasePlan plan = PhasePlan::defaults_for(m);
    if (config.algorithm == "single") {
      SingleRunConfig single;
      single.lambda = config.lambda;
      single.step_coefficient = config.step_coefficient;
      single.estimator = config.estimator;
      single.recenter = config.recenter;
      record = run_single(m, theta0, single, config.episodes, config.seed, opts);
    } else {
      plan.T0 = config.T0;
      plan.batch_size = config.batch_size;
      plan.step_coefficient = config.step_coefficient;
      plan.epsilon_pp = config.epsilon_pp;
      plan.estimator = config.estimator;
      plan.recenter = config.recenter;
      record = plan.batch_size == 1 ? run_phased(m, theta0, plan, config.episodes, config.seed, opts)
                                    : run_minibatch(m, theta0, plan, config.episodes, config.seed, opts);
    }

    const OptimalSolution optimal = solve_optimal(m);
    const RegretLedger ledger = build_ledger(record, optimal.value);

    {
      std::ofstream episodes(dir / "episodes.jsonl");
      for (const EpisodeLog& log : record.episodes) episodes << episode_to_json(log).dump() << '\n';
    }
    {
      std::ofstream csv(dir / "regret.csv");
      write_regret_csv(csv, ledger);
    }
    {
      std::ostringstream avg, loglog;
      avg << "N,average_regret\n" << std::setprecision(17);
      loglog << "log_N,log_regret\n" << std::setprecision(17);
      double cumulative = 0.0;
      for (const LedgerEntry& e : ledger.entries) {
        cumulative += e.gap;
        avg << e.n << ',' << cumulative / static_cast<double>(e.n + 1) << '\n';
        if (e.n >= 1 && cumulative > 0.0)
          loglog << std::log(static_cast<double>(e.n)) << ',' << std::log(cumulative) << '\n';
      }
      write_text(dir / "plot_average_regret.csv", avg.str());
      write_text(dir / "plot_log_regret.csv", loglog.str());
    }
    write_json_file(params_to_json(record.final_theta), dir / "final_theta.json");

    Json summary;
    summary["algorithm"] = config.algorithm;
    summary["environment"] = config.environment.file.empty() ? config.environment.builtin
                                                             : config.environment.file.string();
    summary["num_states"] = m.num_states;
    summary["num_actions"] = m.num_actions;
    summary["gamma"] = m.discount;
    summary["episodes"] = config.episodes;
    summary["steps"] = ledger.size();
    summary["seed"] = config.seed;
    summary["T0"] = record.T0;
    summary["batch_size"] = record.batch_size;
    summary["theta0"] = params_to_json(record.initial_theta);
    summary["optimal_value"] = optimal.value;
    summary["mismatch_coefficient"] = mismatch_coefficient(m, optimal.policy);
    const double total = ledger.size() > 0 ? cumulative_regret(ledger, ledger.size() - 1) : 0.0;
    summary["cumulative_regret"] = total;
    summary["average_regret"] = ledger.size() > 0 ? total / static_cast<double>(ledger.size()) : 0.0;
    if (record.batch_size > 1) {
      summary["minibatch_regret"] =
          config.episodes > 0 ? minibatch_regret(ledger, config.episodes - 1, record.batch_size) : 0.0;
    }
    summary["final_value"] = policy_value(m, softmax_policy(record.final_theta)).value;
    summary["final_theta_path"] = "final_theta.json";
    std::vector<long long> usable;
    for (long long N : config.checkpoints)
      if (N >= 1 && N < ledger.size()) usable.push_back(N);
    if (usable.size() >= 2) {
      try {
        summary["regret_slope"] = average_regret_slope(ledger, usable);
      } catch (const InvalidArgument&) {
        summary["regret_slope"] = nullptr;
      }
    }
    write_json_file(summary, dir / "summary.json");

    out << "wrote " << ledger.size() << " steps to " << dir.string() << "; cumulative regret " << total
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return 1;
  }
}

int cmd_run(const fs::path& config_path, const RunOverrides& overrides, std::ostream& out,
            std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_experiment_config(config_path);
  } catch (const std::exception& e) {
    err << "invalid config: " << e.what() << '\n';
    return 2;
  }
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.episodes) config.episodes = *overrides.episodes;
  if (overrides.output_dir) config.output_dir = *overrides.output_dir;
  return cmd_run(config, out, err);
}

std::vector<std::pair<std::string, Mdp>> default_check_corpus() {
  std::vector<std::pair<std::string, Mdp>> corpus;
  {
    Mdp m;
    m.num_states = 1;
    m.num_actions = 2;
    m.discount = 0.5;
    m.initial_dist = Vector::Ones(1);
    m.rewards = Matrix(1, 2);
    m.rewards << 1.0, 0.0;
    m.transitions = Matrix::Ones(2, 1);
    corpus.emplace_back("bandit-1x2", m);
  }
  corpus.emplace_back("chain-2", make_chain(2, 0.5, 0.1));
  corpus.emplace_back("random-2x2-s1", make_random(2, 2, 0.5, 1));
  corpus.emplace_back("random-2x2-s2", make_random(2, 2, 0.9, 2));
  corpus.emplace_back("single-action-2x1", make_random(2, 1, 0.5, 3));
  return corpus;
}

std::vector<CheckLine> run_checks(const std::vector<std::pair<std::string, Mdp>>& instances,
                                  const CheckSettings& settings) {
  std::vector<CheckLine> lines;
  const auto add = [&](const std::string& inst, const std::string& name, double lhs, double rhs,
                       std::string note = {}) {
    lines.push_back({inst, name, lhs, rhs, lhs <= rhs, std::move(note)});
  };

  for (const auto& [name, m] : instances) {
    validate_mdp(m);
    const int S = m.num_states;
    const int A = m.num_actions;
    StreamRng rng(SeedSpec{settings.seed, 0, 0, 0});
    PolicyParams theta(Matrix(S, A));
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) theta.theta(s, a) = 2.0 * rng.uniform() - 1.0;

    const double lambda = settings.lambda;
    const Matrix exact = exact_regularized_gradient(m, theta, lambda);

    // Exact gradient vs central differences.
    const FiniteDifferenceCheck fd = finite_difference_check(m, theta, lambda, settings.fd_step);
    add(name, "gradient_fd_rel_error", gradient_relative_error(exact, fd.coarse), 1e-4,
        "two-scale consistency " + format_double(fd.consistency));

    BoundConstants constants = lemma_constants(m.discount, std::max(lambda, (1.0 - m.discount) / 2.0),
                                               settings.baseline_constant, 1);
    double bias_factor = 1.0;
    if (settings.corrupt_constants) {
      constants.M1 = 0.0;
      constants.C1 = 0.0;
      bias_factor = 0.0;
    }

    EstimatorConfig plain;
    plain.beta = settings.beta;
    EstimatorConfig shifted = plain;
    shifted.baseline = BaselineKind::constant;
    shifted.baseline_constant = settings.baseline_constant;
    shifted.baseline_bound = std::abs(settings.baseline_constant);

    for (int H : settings.horizons) {
      const std::string tag = "H=" + std::to_string(H);
      const EnumerationReport zero = enumerate_estimator(m, theta, lambda, plain, H);
      const EnumerationReport with_b = enumerate_estimator(m, theta, lambda, shifted, H);
      add(name, "bias_bound " + tag, (zero.mean_gradient - exact).norm(),
          bias_factor * bias_bound(m.discount, settings.beta, H) + 1e-9);
      add(name, "baseline_zero_mean " + tag,
          (with_b.mean_gradient - zero.mean_gradient).cwiseAbs().maxCoeff(), 1e-10);
      add(name, "second_moment " + tag, with_b.second_moment,
          constants.M1 + constants.M2 * exact.squaredNorm());
    }

    // Sampled norm bound with the baseline at its bound B.
    double worst = 0.0;
    const int H = horizon_schedule(0, m.discount, settings.beta);
    const Baseline baseline(shifted, S);
    const StatePolicy pi = softmax_policy(theta);
    for (long long i = 0; i < settings.norm_samples; ++i) {
      const Trajectory traj = sample_trajectory(m, pi, H, SeedSpec{settings.seed, 1, static_cast<std::uint64_t>(i), 0});
      worst = std::max(worst, reinforce_gradient(traj, pi, lambda, m.discount, settings.beta, baseline.values()).norm());
    }
    add(name, "norm_bound_C1", worst, constants.C1);

    // Gradient domination at a near-stationary point of L_lambda.
    if (lambda > 0.0) {
      const double tol = lambda / (2.0 * S * A);
      const AscentResult ascent = ascend_regularized(m, theta, lambda, tol);
      if (ascent.converged) {
        const OptimalSolution opt = solve_optimal(m);
        const double gap = opt.value - policy_value(m, softmax_policy(ascent.params)).value;
        add(name, "gradient_domination", gap,
            bias_factor * 2.0 * lambda / (1.0 - m.discount) * mismatch_coefficient(m, opt.policy) + 1e-12);
      } else {
        lines.push_back({name, "gradient_domination", ascent.grad_norm, tol, false,
                         "ascent did not reach the stationarity threshold"});
      }
    }
  }
  return lines;
}

int cmd_check(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::string, Mdp>> instances;
  CheckSettings settings;
  try {
    const Json j = read_json_file(config_path);
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    if (j.contains("environment")) {
      const EnvironmentSpec spec = parse_environment(j.at("environment"), config_path.parent_path());
      instances.emplace_back(spec.file.empty() ? spec.builtin : spec.file.string(), build_environment(spec));
    } else {
      instances = default_check_corpus();
    }
    if (j.contains("check")) {
      const Json& c = j.at("check");
      settings.lambda = c.value("lambda", settings.lambda);
      if (c.contains("horizons")) settings.horizons = c.at("horizons").get<std::vector<int>>();
      settings.beta = c.value("beta", settings.beta);
      settings.baseline_constant = c.value("baseline_constant", settings.baseline_constant);
      settings.norm_samples = c.value("norm_samples", settings.norm_samples);
      settings.seed = c.value("seed", settings.seed);
      settings.fd_step = c.value("fd_step", settings.fd_step);
      settings.corrupt_constants = c.value("corrupt_constants", false);
    }
  } catch (const std::exception& e) {
    err << "invalid config: " << e.what() << '\n';
    return 2;
  }

  std::vector<CheckLine> lines;
  try {
    lines = run_checks(instances, settings);
  } catch (const std::exception& e) {
    err << "check failed to run: " << e.what() << '\n';
    return 2;
  }
  int failures = 0;
  out << std::setprecision(6);
  for (const CheckLine& line : lines) {
    out << (line.passed ? "PASS " : "FAIL ") << line.instance << "  " << line.name << "  lhs=" << line.lhs
        << "  rhs=" << line.rhs;
    if (!line.note.empty()) out << "  (" << line.note << ")";
    out << '\n';
    if (!line.passed) ++failures;
  }
  if (failures > 0) {
    err << failures << " bound(s) failed:";
    for (const CheckLine& line : lines)
      if (!line.passed) err << ' ' << line.instance << '/' << line.name;
    err << '\n';
    return 1;
  }
  out << "all " << lines.size() << " bounds hold\n";
  return 0;
}

int cmd_gen_env(const std::string& name, const std::map<std::string, std::string>& params,
                const fs::path& out_path, std::ostream& out, std::ostream& err) {
  try {
    const Mdp m = make_environment(name, params);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    save_mdp(m, out_path);
    out << "wrote " << name << " (S=" << m.num_states << ", A=" << m.num_actions << ") to "
        << out_path.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "gen-env failed: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace phasedpg
