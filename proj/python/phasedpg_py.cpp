#include "phasedpg/environments.hpp"
#include "phasedpg/harness.hpp"
#include "phasedpg/oracle.hpp"
#include "phasedpg/regret.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace phasedpg;

namespace {

PolicyParams as_params(const Matrix& theta) { return PolicyParams(theta); }

Mdp make_mdp(const Matrix& transitions, const Matrix& rewards, double gamma, const Vector& rho) {
  Mdp m;
  m.num_states = static_cast<int>(rewards.rows());
  m.num_actions = static_cast<int>(rewards.cols());
  m.transitions = transitions;
  m.rewards = rewards;
  m.discount = gamma;
  m.initial_dist = rho;
  validate_mdp(m);
  return m;
}

py::dict episode_dict(const EpisodeLog& e) {
  py::dict d;
  d["l"] = e.phase;
  d["k"] = e.k;
  d["n"] = e.n;
  d["H"] = e.horizon;
  d["episodes"] = e.episodes;
  d["lambda"] = e.lambda;
  d["alpha"] = e.alpha;
  d["grad_norm"] = e.grad_norm;
  d["truncated_value"] = e.truncated_value;
  d["value"] = e.value;
  d["exact_grad_norm"] = e.exact_grad_norm;
  d["updated"] = e.updated;
  return d;
}

PhasePlan plan_for(const Mdp& m, long long T0, int batch_size, std::optional<double> step_coefficient,
                   std::optional<double> epsilon_pp, const EstimatorConfig& estimator) {
  PhasePlan plan = PhasePlan::defaults_for(m);
  plan.T0 = T0;
  plan.batch_size = batch_size;
  plan.step_coefficient = step_coefficient;
  plan.epsilon_pp = epsilon_pp;
  plan.estimator = estimator;
  return plan;
}

template <typename F>
std::pair<int, std::string> captured(F&& f) {
  std::ostringstream out, err;
  const int code = f(out, err);
  return {code, out.str() + err.str()};
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Phased REINFORCE policy gradient on tabular MDPs";
  mod.attr("__version__") = "0.1.0";
  py::register_exception<InvalidArgument>(mod, "InvalidArgument", PyExc_ValueError);

  py::class_<Mdp>(mod, "Mdp")
      .def(py::init(&make_mdp), py::arg("transitions"), py::arg("rewards"), py::arg("gamma"),
           py::arg("rho"))
      .def_readonly("num_states", &Mdp::num_states)
      .def_readonly("num_actions", &Mdp::num_actions)
      .def_readonly("gamma", &Mdp::discount)
      .def_readonly("transitions", &Mdp::transitions)
      .def_readonly("rewards", &Mdp::rewards)
      .def_readonly("rho", &Mdp::initial_dist)
      .def("to_json", [](const Mdp& m) { return mdp_to_json(m).dump(2); })
      .def_static("from_json", [](const std::string& text) { return mdp_from_json(Json::parse(text)); });

  mod.def("make_chain", &make_chain, py::arg("S"), py::arg("gamma") = 0.9, py::arg("reset_reward") = 0.1);
  mod.def("make_gridworld", &make_gridworld, py::arg("width"), py::arg("height"), py::arg("gamma") = 0.9,
          py::arg("slip") = 0.1);
  mod.def("make_random", &make_random, py::arg("S"), py::arg("A"), py::arg("gamma"), py::arg("seed"));
  mod.def("make_environment", &make_environment, py::arg("name"), py::arg("params"));
  mod.def("load_mdp", &load_mdp);
  mod.def("save_mdp", &save_mdp);

  mod.def("softmax_policy", [](const Matrix& theta) { return softmax_policy(as_params(theta)).probs; });
  mod.def("regularizer", [](const Matrix& theta) { return regularizer(as_params(theta)); });
  mod.def("post_process", [](const Matrix& theta, double eps) {
    return post_process(as_params(theta), PostProcessConfig{eps}).theta;
  });
  mod.def(
      "policy_value",
      [](const Mdp& m, const Matrix& probs) {
        const ValueReport r = policy_value(m, StatePolicy{probs});
        py::dict d;
        d["value"] = r.value;
        d["state_values"] = r.state_values;
        d["q_values"] = r.q_values;
        d["visitation"] = r.visitation;
        return d;
      },
      py::arg("mdp"), py::arg("policy"));
  mod.def("truncated_value", [](const Mdp& m, const Matrix& probs, int H) {
    return truncated_value(m, StatePolicy{probs}, H);
  });
  mod.def("solve_optimal", [](const Mdp& m) {
    const OptimalSolution sol = solve_optimal(m);
    return py::make_tuple(sol.value, sol.policy.probs, sol.state_values);
  });
  mod.def("mismatch_coefficient", py::overload_cast<const Mdp&>(&mismatch_coefficient));
  mod.def("regularized_objective", [](const Mdp& m, const Matrix& theta, double lambda) {
    return regularized_objective(m, as_params(theta), lambda);
  });
  mod.def("exact_gradient", [](const Mdp& m, const Matrix& theta, double lambda) {
    return exact_regularized_gradient(m, as_params(theta), lambda);
  }, py::arg("mdp"), py::arg("theta"), py::arg("lam") = 0.0);
  mod.def("finite_difference_gradient", [](const Mdp& m, const Matrix& theta, double lambda, double h) {
    return finite_difference_gradient(m, as_params(theta), lambda, h);
  }, py::arg("mdp"), py::arg("theta"), py::arg("lam") = 0.0, py::arg("h") = 1e-5);

  mod.def("horizon_schedule", &horizon_schedule, py::arg("k"), py::arg("gamma"), py::arg("beta") = 0.5);
  mod.def("bias_bound", &bias_bound);

  py::class_<EstimatorConfig>(mod, "EstimatorConfig")
      .def(py::init([](double beta, const std::string& baseline, double constant,
                       std::vector<double> table, double bound) {
             EstimatorConfig cfg;
             cfg.beta = beta;
             cfg.baseline = baseline_kind_from_string(baseline);
             cfg.baseline_constant = constant;
             cfg.baseline_table = std::move(table);
             cfg.baseline_bound = bound;
             return cfg;
           }),
           py::arg("beta") = 0.5, py::arg("baseline") = "zero", py::arg("constant") = 0.0,
           py::arg("table") = std::vector<double>{}, py::arg("bound") = 0.0)
      .def_readwrite("beta", &EstimatorConfig::beta)
      .def_property_readonly("baseline", [](const EstimatorConfig& c) { return to_string(c.baseline); });

  mod.def(
      "enumerate_estimator",
      [](const Mdp& m, const Matrix& theta, double lambda, const EstimatorConfig& cfg, int H) {
        const EnumerationReport r = enumerate_estimator(m, as_params(theta), lambda, cfg, H);
        py::dict d;
        d["mean_gradient"] = r.mean_gradient;
        d["second_moment"] = r.second_moment;
        d["trace_covariance"] = r.trace_covariance;
        d["total_probability"] = r.total_probability;
        d["atoms"] = r.atoms;
        return d;
      },
      py::arg("mdp"), py::arg("theta"), py::arg("lam"), py::arg("cfg"), py::arg("H"));

  mod.def(
      "sample_trajectory",
      [](const Mdp& m, const Matrix& theta, int H, std::uint64_t seed, std::uint64_t phase,
         std::uint64_t episode, std::uint64_t index) {
        const Trajectory t = sample_trajectory(m, as_params(theta), H, SeedSpec{seed, phase, episode, index});
        return py::make_tuple(t.states, t.actions, t.rewards);
      },
      py::arg("mdp"), py::arg("theta"), py::arg("H"), py::arg("seed"), py::arg("phase") = 0,
      py::arg("episode") = 0, py::arg("index") = 0);

  mod.def(
      "run",
      [](const Mdp& m, long long episodes, std::uint64_t seed, long long T0, int batch_size,
         std::optional<double> step_coefficient, std::optional<double> epsilon_pp,
         std::optional<EstimatorConfig> estimator, std::optional<Matrix> theta0) {
        const PhasePlan plan =
            plan_for(m, T0, batch_size, step_coefficient, epsilon_pp, estimator.value_or(EstimatorConfig{}));
        const PolicyParams start = theta0 ? as_params(*theta0) : PolicyParams::zeros(m.num_states, m.num_actions);
        RunRecord record;
        {
          py::gil_scoped_release release;
          record = batch_size == 1 ? run_phased(m, start, plan, episodes, seed)
                                   : run_minibatch(m, start, plan, episodes, seed);
        }
        const RegretLedger ledger = build_ledger(record, solve_optimal(m).value);
        py::list logs;
        for (const EpisodeLog& e : record.episodes) logs.append(episode_dict(e));
        std::vector<double> gaps;
        std::vector<double> cumulative;
        double total = 0.0;
        for (const LedgerEntry& e : ledger.entries) {
          gaps.push_back(e.gap);
          total += e.gap;
          cumulative.push_back(total);
        }
        py::dict out;
        out["final_theta"] = record.final_theta.theta;
        out["episodes"] = logs;
        out["gaps"] = gaps;
        out["cumulative_regret"] = cumulative;
        out["optimal_value"] = ledger.optimal_value;
        if (batch_size > 1 && episodes > 0)
          out["minibatch_regret"] = minibatch_regret(ledger, episodes - 1, batch_size);
        return out;
      },
      py::arg("mdp"), py::arg("episodes"), py::arg("seed") = 0, py::arg("T0") = 1, py::arg("batch_size") = 1,
      py::arg("step_coefficient") = py::none(), py::arg("epsilon_pp") = py::none(),
      py::arg("estimator") = py::none(), py::arg("theta0") = py::none(),
      "Phased REINFORCE (mini-batch when batch_size > 1). Returns logs and the exact regret ledger.");

  mod.def(
      "schedule",
      [](const Mdp& m, int l, long long T0) {
        PhasePlan plan = PhasePlan::defaults_for(m);
        plan.T0 = T0;
        const auto [lo, hi] = plan.coefficient_window(l);
        py::dict d;
        d["T"] = plan.phase_length(l);
        d["epsilon"] = plan.epsilon(l);
        d["lambda"] = plan.lambda(l);
        d["epsilon_pp"] = plan.pp_tolerance();
        d["coefficient_window"] = py::make_tuple(lo, hi);
        return d;
      },
      py::arg("mdp"), py::arg("phase"), py::arg("T0") = 1);

  mod.def("log_log_slope", [](std::vector<double> xs, std::vector<double> ys) {
    return log_log_slope(xs, ys);
  });

  mod.def("cli_run", [](const std::filesystem::path& config) {
    return captured([&](std::ostream& o, std::ostream& e) { return cmd_run(config, RunOverrides{}, o, e); });
  });
  mod.def("cli_check", [](const std::filesystem::path& config) {
    return captured([&](std::ostream& o, std::ostream& e) { return cmd_check(config, o, e); });
  });
  mod.def("cli_gen_env", [](const std::string& name, const std::map<std::string, std::string>& params,
                            const std::filesystem::path& out) {
    return captured([&](std::ostream& o, std::ostream& e) { return cmd_gen_env(name, params, out, o, e); });
  });
}
