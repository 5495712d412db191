#include "phasedpg/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Phased REINFORCE on tabular MDPs"};
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::uint64_t> seed;
  std::optional<long long> episodes;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", run_config, "Experiment config")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--episodes", episodes, "Override the episode budget")->check(CLI::NonNegativeNumber);
  run->add_option("--out-dir", out_dir, "Override the output directory");

  std::string check_config;
  auto* check = app.add_subcommand("check", "Verify the analytic bounds against exact oracles");
  check->add_option("config", check_config, "Check config")->required();

  std::string env_name;
  std::vector<std::string> env_params;
  std::string env_out;
  auto* gen = app.add_subcommand("gen-env", "Write a built-in environment as JSON");
  gen->add_option("name", env_name, "chain | gridworld | random")->required();
  gen->add_option("--param", env_params, "key=value parameter (repeatable)");
  gen->add_option("--out", env_out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) {
    phasedpg::RunOverrides overrides;
    overrides.seed = seed;
    overrides.episodes = episodes;
    if (out_dir) overrides.output_dir = *out_dir;
    return phasedpg::cmd_run(run_config, overrides, std::cout, std::cerr);
  }
  if (*check) return phasedpg::cmd_check(check_config, std::cout, std::cerr);

  std::map<std::string, std::string> params;
  for (const std::string& kv : env_params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "gen-env: --param expects key=value, got '" << kv << "'\n";
      return 2;
    }
    params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return phasedpg::cmd_gen_env(env_name, params, env_out, std::cout, std::cerr);
}
