#include "phasedpg/environments.hpp"
#include "phasedpg/harness.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace phasedpg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* root = std::getenv("PHASEDPG_TEST_TMP");
  fs::path dir = (root != nullptr ? fs::path(root) : fs::temp_directory_path() / "phasedpg_harness") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

int run_config(const fs::path& cfg, std::string* output = nullptr, RunOverrides overrides = {}) {
  std::ostringstream out, err;
  const int code = cmd_run(cfg, overrides, out, err);
  if (output != nullptr) *output = out.str() + err.str();
  return code;
}

}  // namespace

TEST_CASE("MDP files round-trip bit for bit") {
  const fs::path dir = scratch("roundtrip");
  for (const Mdp& m : {make_random(4, 3, 0.9, 1), make_chain(5, 0.95, 0.1), make_gridworld(3, 2, 0.8, 0.1)}) {
    save_mdp(m, dir / "a.json");
    const Mdp back = load_mdp(dir / "a.json");
    CHECK(back.transitions == m.transitions);
    CHECK(back.rewards == m.rewards);
    CHECK(back.initial_dist == m.initial_dist);
    CHECK(back.discount == m.discount);
    save_mdp(back, dir / "b.json");
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  }
  write(dir / "bad.json", R"({"num_states": 1, "num_actions": 1, "gamma": 0.9, "rho": [1.0],
                              "rewards": [[2.0]], "transitions": [[[1.0]]]})");
  CHECK_THROWS_WITH_AS(load_mdp(dir / "bad.json"), doctest::Contains("reward out of [0,1]"), InvalidArgument);
  write(dir / "short.json", R"({"num_states": 1, "num_actions": 1, "gamma": 0.9, "rho": [1.0]})");
  CHECK_THROWS_WITH_AS(load_mdp(dir / "short.json"), doctest::Contains("rewards"), InvalidArgument);
}

TEST_CASE("policy parameters round-trip through JSON") {
  const PolicyParams p = testing::MdpGenerator(3).params(2, 3);
  CHECK(params_from_json(params_to_json(p)).theta == p.theta);
  Json bad = params_to_json(p);
  bad["shape"] = {3, 3};
  CHECK_THROWS_AS(params_from_json(bad), InvalidArgument);
}

TEST_CASE("gen-env writes deterministic validated files") {
  const fs::path dir = scratch("genenv");
  std::ostringstream out, err;
  REQUIRE(cmd_gen_env("random", {{"S", "4"}, {"A", "3"}, {"seed", "1"}}, dir / "r1.json", out, err) == 0);
  REQUIRE(cmd_gen_env("random", {{"S", "4"}, {"A", "3"}, {"seed", "1"}}, dir / "r2.json", out, err) == 0);
  CHECK(slurp(dir / "r1.json") == slurp(dir / "r2.json"));
  REQUIRE(cmd_gen_env("random", {{"S", "4"}, {"A", "3"}, {"seed", "2"}}, dir / "r3.json", out, err) == 0);
  CHECK(slurp(dir / "r1.json") != slurp(dir / "r3.json"));

  REQUIRE(cmd_gen_env("chain", {{"S", "3"}}, dir / "chain.json", out, err) == 0);
  REQUIRE(cmd_gen_env("gridworld", {{"width", "2"}, {"height", "2"}}, dir / "grid.json", out, err) == 0);
  for (const char* name : {"r1.json", "chain.json", "grid.json"}) {
    const Mdp m = load_mdp(dir / name);
    for (int s = 0; s < m.num_states; ++s) CHECK(m.initial_dist(s) == doctest::Approx(1.0 / m.num_states));
  }
  CHECK(cmd_gen_env("maze", {}, dir / "x.json", out, err) != 0);
  CHECK(cmd_gen_env("chain", {{"S", "0"}}, dir / "x.json", out, err) != 0);
  CHECK(cmd_gen_env("chain", {{"length", "3"}}, dir / "x.json", out, err) != 0);
  CHECK(cmd_gen_env("chain", {{"S", "three"}}, dir / "x.json", out, err) != 0);
  CHECK(err.str().find("unknown environment") != std::string::npos);
}

TEST_CASE("random environment rows come from a symmetric Dirichlet(1)") {
  // Under Dirichlet(1) each coordinate of a row with S entries is Beta(1, S-1):
  // mean 1/S, variance (S-1)/(S^2 (S+1)).
  const int S = 4;
  double sum = 0.0, sq = 0.0;
  long long count = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const Mdp m = make_random(S, 2, 0.9, seed);
    for (Eigen::Index r = 0; r < m.transitions.rows(); ++r) {
      const double x = m.transitions(r, 0);
      sum += x;
      sq += x * x;
      ++count;
    }
    CHECK(m.rewards.minCoeff() >= 0.0);
    CHECK(m.rewards.maxCoeff() < 1.0);
  }
  const double mean = sum / count;
  const double var = sq / count - mean * mean;
  const double expected_var = (S - 1.0) / (S * S * (S + 1.0));
  CHECK(std::abs(mean - 0.25) < 4.0 * std::sqrt(expected_var / count));
  CHECK(var == doctest::Approx(expected_var).epsilon(0.1));
}

TEST_CASE("run writes every output with stable schemas and is deterministic") {
  const fs::path dir = scratch("run");
  write(dir / "cfg.json", R"({"environment": {"name": "chain", "params": {"S": 3, "gamma": 0.9}},
    "episodes": 64, "seed": 7, "output_dir": "out1", "checkpoints": [8, 16, 32, 63]})");
  REQUIRE(run_config(dir / "cfg.json") == 0);
  RunOverrides again;
  again.output_dir = dir / "out2";
  REQUIRE(run_config(dir / "cfg.json", nullptr, again) == 0);

  for (const char* f : {"episodes.jsonl", "regret.csv", "summary.json", "final_theta.json",
                        "plot_average_regret.csv", "plot_log_regret.csv"})
    CHECK(fs::exists(dir / "out1" / f));
  CHECK_FALSE(fs::exists(dir / "out1" / "trajectories.jsonl"));

  // Determinism: summary is byte-identical; logs agree apart from wall time.
  CHECK(slurp(dir / "out1" / "summary.json") == slurp(dir / "out2" / "summary.json"));
  CHECK(slurp(dir / "out1" / "regret.csv") == slurp(dir / "out2" / "regret.csv"));
  const auto e1 = lines_of(dir / "out1" / "episodes.jsonl");
  const auto e2 = lines_of(dir / "out2" / "episodes.jsonl");
  REQUIRE(e1.size() == 64);
  REQUIRE(e2.size() == 64);
  for (std::size_t i = 0; i < e1.size(); ++i) {
    Json a = Json::parse(e1[i]), b = Json::parse(e2[i]);
    a.erase("wall_time");
    b.erase("wall_time");
    CHECK(a == b);
  }

  // Golden schemas.
  const Json first = Json::parse(e1.front());
  std::vector<std::string> keys;
  for (const auto& [k, v] : first.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"l", "k", "n", "H", "episodes", "lambda", "alpha", "grad_norm",
                                         "truncated_value", "value", "updated", "wall_time"});
  const auto csv = lines_of(dir / "out1" / "regret.csv");
  CHECK(csv.front() == "n,l,k,H,gap,cumulative_regret,average_regret");
  CHECK(csv.size() == 65);
  CHECK(lines_of(dir / "out1" / "plot_average_regret.csv").front() == "N,average_regret");
  CHECK(lines_of(dir / "out1" / "plot_log_regret.csv").front() == "log_N,log_regret");

  const Json summary = read_json_file(dir / "out1" / "summary.json");
  keys.clear();
  for (const auto& [k, v] : summary.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"algorithm", "environment", "num_states", "num_actions", "gamma",
                                         "episodes", "steps", "seed", "T0", "batch_size", "theta0",
                                         "optimal_value", "mismatch_coefficient", "cumulative_regret",
                                         "average_regret", "final_value", "final_theta_path",
                                         "regret_slope"});
  CHECK(summary["steps"] == 64);
  CHECK(summary["seed"] == 7);
  CHECK(summary["optimal_value"].get<double>() == doctest::Approx(solve_optimal(make_chain(3, 0.9)).value));
  const PolicyParams final_theta = params_from_json(read_json_file(dir / "out1" / "final_theta.json"));
  CHECK(final_theta.num_states() == 3);

  // Cumulative regret column matches the summary.
  const std::string last = csv.back();
  const double total = summary["cumulative_regret"].get<double>();
  std::vector<std::string> fields;
  std::stringstream ss(last);
  for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
  CHECK(std::stod(fields[5]) == doctest::Approx(total).epsilon(1e-14));
}

TEST_CASE("run with zero episodes gives an empty ledger and a valid summary") {
  const fs::path dir = scratch("empty");
  write(dir / "cfg.json", R"({"environment": {"name": "chain", "params": {"S": 3}}, "episodes": 0,
    "output_dir": "out"})");
  REQUIRE(run_config(dir / "cfg.json") == 0);
  CHECK(lines_of(dir / "out" / "regret.csv").size() == 1);
  CHECK(lines_of(dir / "out" / "episodes.jsonl").empty());
  const Json summary = read_json_file(dir / "out" / "summary.json");
  CHECK(summary["steps"] == 0);
  CHECK(summary["cumulative_regret"] == 0.0);
}

TEST_CASE("mini-batch runs add mini-batch regret columns") {
  const fs::path dir = scratch("batch");
  write(dir / "cfg.json", R"({"environment": {"name": "random", "params": {"S": 3, "A": 2, "gamma": 0.8, "seed": 4}},
    "episodes": 21, "batch_size": 2, "seed": 1, "output_dir": "out", "dump_trajectories": true,
    "parallel_batch": true})");
  REQUIRE(run_config(dir / "cfg.json") == 0);
  const auto csv = lines_of(dir / "out" / "regret.csv");
  CHECK(csv.front() == "n,l,k,H,gap,cumulative_regret,average_regret,episodes,minibatch_regret");
  CHECK(csv.size() == 12);  // 10 full steps and one partial
  CHECK(csv.back().find(",1,") != std::string::npos);
  const Json summary = read_json_file(dir / "out" / "summary.json");
  REQUIRE(summary.contains("minibatch_regret"));
  std::vector<std::string> fields;
  std::stringstream ss(csv.back());
  for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
  CHECK(std::stod(fields.back()) == doctest::Approx(summary["minibatch_regret"].get<double>()).epsilon(1e-14));
  CHECK(lines_of(dir / "out" / "trajectories.jsonl").size() == 21);
  const Json traj = Json::parse(lines_of(dir / "out" / "trajectories.jsonl").front());
  for (const char* key : {"seed", "l", "k", "i", "states", "actions", "rewards"}) CHECK(traj.contains(key));
}

TEST_CASE("run accepts MDP files, overrides and the output-directory variable") {
  const fs::path dir = scratch("overrides");
  save_mdp(make_random(2, 2, 0.9, 5), dir / "env.json");
  write(dir / "cfg.json", R"({"environment": {"file": "env.json"}, "episodes": 10, "algorithm": "single",
    "lambda": 0.1, "estimator": {"baseline": "reinforcement_average", "baseline_bound": 10.0}})");
  RunOverrides o;
  o.seed = 11;
  o.episodes = 5;
  o.output_dir = dir / "explicit";
  REQUIRE(run_config(dir / "cfg.json", nullptr, o) == 0);
  const Json summary = read_json_file(dir / "explicit" / "summary.json");
  CHECK(summary["seed"] == 11);
  CHECK(summary["steps"] == 5);
  CHECK(summary["algorithm"] == "single");

  ::setenv(kOutputDirEnv, (dir / "from_env").c_str(), 1);
  REQUIRE(run_config(dir / "cfg.json") == 0);
  ::unsetenv(kOutputDirEnv);
  CHECK(fs::exists(dir / "from_env" / "summary.json"));
}

TEST_CASE("run rejects bad configs with a diagnostic") {
  const fs::path dir = scratch("bad");
  std::string output;
  write(dir / "cfg.toml", "episodes = 3\n");
  CHECK(run_config(dir / "cfg.toml", &output) == 2);
  CHECK(output.find("only JSON") != std::string::npos);

  write(dir / "unknown.json", R"({"environment": {"name": "chain"}, "epsiodes": 3})");
  CHECK(run_config(dir / "unknown.json", &output) == 2);
  CHECK(output.find("epsiodes") != std::string::npos);

  write(dir / "missing.json", R"({"environment": {"file": "nope.json"}})");
  CHECK(run_config(dir / "missing.json", &output) == 2);
  CHECK(output.find("does not exist") != std::string::npos);

  write(dir / "negative.json", R"({"environment": {"name": "chain"}, "episodes": -1})");
  CHECK(run_config(dir / "negative.json") == 2);

  write(dir / "badpp.json", R"({"environment": {"name": "chain"}, "episodes": 4, "epsilon_pp": 0.9,
    "output_dir": "o"})");
  CHECK(run_config(dir / "badpp.json", &output) == 1);
  CHECK(output.find("epsilon_pp") != std::string::npos);

  write(dir / "syntax.json", "{not json");
  CHECK(run_config(dir / "syntax.json") == 2);
  CHECK(run_config(dir / "absent.json") == 2);
}

TEST_CASE("check passes on the default corpus and fails under corrupted constants") {
  const fs::path dir = scratch("check");
  std::ostringstream out, err;
  write(dir / "default.json", R"({"check": {"norm_samples": 2000}})");
  CHECK(cmd_check(dir / "default.json", out, err) == 0);
  CHECK(out.str().find("FAIL") == std::string::npos);
  CHECK(out.str().find("gradient_domination") != std::string::npos);

  std::ostringstream out2, err2;
  write(dir / "corrupt.json", R"({"check": {"norm_samples": 2000, "corrupt_constants": true}})");
  CHECK(cmd_check(dir / "corrupt.json", out2, err2) == 1);
  CHECK(err2.str().find("bound(s) failed") != std::string::npos);

  std::ostringstream out3, err3;
  write(dir / "single.json", R"({"environment": {"name": "random", "params": {"S": 2, "A": 1, "gamma": 0.5,
    "seed": 1}}, "check": {"norm_samples": 500}})");
  CHECK(cmd_check(dir / "single.json", out3, err3) == 0);
  CHECK(out3.str().find("norm_bound_C1  lhs=0 ") != std::string::npos);
}
