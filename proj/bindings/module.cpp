#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "spiti/experiment.hpp"
#include "spiti/metrics.hpp"
#include "spiti/problems.hpp"

namespace py = pybind11;
using namespace spiti;

namespace {

ContingencyTable table_from_rows(const std::vector<std::vector<long long>>& rows) {
  return ContingencyTable{rows};
}

ExperimentConfig build_config(const std::string& agent, double tau, double epsilon, double gamma,
                              double gamma_report, int steps, int runs, std::uint64_t seed,
                              const std::vector<std::string>& metrics, int metric_every,
                              int jobs) {
  ExperimentConfig cfg;
  cfg.agent = agent_kind_from_string(agent);
  cfg.tau = tau;
  cfg.epsilon = epsilon;
  cfg.gamma = gamma;
  cfg.gamma_report = gamma_report;
  cfg.steps = steps;
  cfg.runs = runs;
  cfg.seed = seed;
  cfg.metric_every = metric_every;
  cfg.jobs = jobs;
  for (const auto& metric : metrics) {
    if (metric == "xi")
      cfg.metric_xi = true;
    else if (metric == "qchi2")
      cfg.metric_qchi2 = true;
    else
      throw ParseError("unknown metric '" + metric + "'");
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Factored-MDP structure learning, tree-based planning and benchmarks";

  // Base first: translators registered later take precedence, so the derived
  // kinds must come after the catch-all.
  py::register_exception<Error>(m, "SpitiError");
  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<ConvergenceError>(m, "ConvergenceError");
  py::register_exception<EnumerationError>(m, "EnumerationError");

  m.def("chi2_statistic",
        [](const std::vector<std::vector<long long>>& rows) {
          return chi2_statistic(table_from_rows(rows));
        },
        py::arg("table"), "Pearson chi-square statistic of a contingency table");
  m.def("chi2_tail_q", &chi2_tail_q, py::arg("chi2"), py::arg("dof") = 1,
        "Upper tail probability of the chi-square distribution");
  m.def("two_distribution_chi2",
        [](const Distribution& p_ref, const Distribution& p_est) {
          return two_distribution_chi2(p_ref, p_est);
        },
        py::arg("p_ref"), py::arg("p_est"));

  py::class_<ProblemSpec>(m, "Problem")
      .def_readonly("name", &ProblemSpec::name)
      .def_property_readonly("variable_names",
                             [](const ProblemSpec& p) { return p.domain.names; })
      .def_property_readonly("action_names", [](const ProblemSpec& p) { return p.actions; })
      .def_property_readonly("num_variables", &ProblemSpec::num_vars)
      .def_property_readonly("num_actions", &ProblemSpec::num_actions)
      .def_readonly("discount", &ProblemSpec::discount)
      .def("is_terminal", [](const ProblemSpec& p, const State& s) { return is_terminal(p, s); },
           py::arg("state"))
      .def("reward",
           [](const ProblemSpec& p, const State& s, ActionId a) { return true_reward(p, s, a); },
           py::arg("state"), py::arg("action"))
      .def("transition_probabilities",
           [](const ProblemSpec& p, const State& s, ActionId a, VarId i) {
             return p.cpds[a][i].evaluate(s);
           },
           py::arg("state"), py::arg("action"), py::arg("variable"))
      .def("parents",
           [](const ProblemSpec& p) {
             DbnGraph g = extract_parents(p);
             py::dict out;
             for (ActionId a = 0; a < p.num_actions(); ++a) {
               py::dict per_var;
               for (VarId i = 0; i < p.num_vars(); ++i) {
                 py::list names;
                 for (VarId v : g.of(a, i)) names.append(p.domain.names[v]);
                 per_var[py::str(p.domain.names[i])] = names;
               }
               out[py::str(p.actions[a])] = per_var;
             }
             return out;
           },
           "Parents of each next-step variable per action")
      .def("save", &save_problem, py::arg("path"))
      .def("to_text", &problem_to_text)
      .def("__repr__", [](const ProblemSpec& p) {
        std::ostringstream os;
        os << "Problem(" << p.name << ", " << p.num_vars() << " vars, " << p.num_actions()
           << " actions)";
        return os.str();
      });

  m.def("linear", &make_linear, py::arg("n"));
  m.def("expon", &make_expon, py::arg("n"));
  m.def("noisy", &make_noisy, py::arg("n"), py::arg("theta"));
  m.def("coffee_robot", &make_coffee_robot);
  m.def("process_planning", &make_process_planning);
  m.def("load_problem", &load_problem, py::arg("path"));
  m.def("resolve_problem", &resolve_problem, py::arg("spec"),
        "Path or builtin:<linear:N|expon:N|noisy:N:T|coffee|process>");

  py::class_<ValueTree>(m, "ValueTree")
      .def("evaluate", [](const ValueTree& t, const State& s) { return t.evaluate(s); },
           py::arg("state"))
      .def_property_readonly("node_count", &ValueTree::node_count);
  py::class_<PolicyTree>(m, "PolicyTree")
      .def("evaluate", [](const PolicyTree& t, const State& s) { return t.evaluate(s); },
           py::arg("state"))
      .def_property_readonly("node_count", &PolicyTree::node_count);

  m.def("solve",
        [](const ProblemSpec& problem, double gamma, double span_tol, double sup_tol,
           int max_iter) {
          PlannerConfig cfg{gamma > 0 ? gamma : problem.discount, span_tol, sup_tol, max_iter};
          SviSolution sol = svi_solve(problem, cfg);
          return py::make_tuple(sol.value, sol.policy, sol.iterations);
        },
        py::arg("problem"), py::arg("gamma") = -1.0, py::arg("span_tol") = 1e-9,
        py::arg("sup_tol") = 1e-9, py::arg("max_iter") = 100000,
        "Structured value iteration; returns (value, policy, iterations)");

  m.def("evaluate_policy",
        [](const PolicyTree& policy, const ProblemSpec& problem, double gamma, double sup_tol,
           int max_iter) {
          PlannerConfig cfg{gamma > 0 ? gamma : problem.discount, 1e-9, sup_tol, max_iter};
          return ssa_evaluate(policy, problem, cfg);
        },
        py::arg("policy"), py::arg("problem"), py::arg("gamma") = -1.0,
        py::arg("sup_tol") = 1e-9, py::arg("max_iter") = 100000);

  m.def("relative_error",
        [](const ValueTree& v_star, const ValueTree& v_pi, const ProblemSpec& problem) {
          return relative_error(v_star, v_pi, problem.domain).xi;
        },
        py::arg("v_star"), py::arg("v_pi"), py::arg("problem"));

  m.def("model_accuracy",
        [](const ProblemSpec& truth, const ProblemSpec& learned) {
          AccuracyReport report = model_accuracy(truth, learned);
          return py::make_tuple(report.q_overall, report.sigma);
        },
        py::arg("problem"), py::arg("learned"),
        "Returns (q_overall, per action-variable sigma matrix)");

  m.def("learn_model",
        [](const ProblemSpec& problem, int steps, double tau, std::uint64_t seed,
           double margin) {
          LearnedModel model(problem, InductionConfig{tau, margin});
          Rng rng(seed);
          for (const Observation& obs : random_trajectory(problem, steps, rng))
            feed_model(model, obs);
          return py::make_tuple(model.to_spec(), model.transition_nodes());
        },
        py::arg("problem"), py::arg("steps") = 4000, py::arg("tau") = 7.88, py::arg("seed") = 1,
        py::arg("margin") = 0.0,
        "Learn a model from a random trajectory; returns (model, transition_nodes)");

  m.def("run_experiment",
        [](const ProblemSpec& problem, const std::string& agent, double tau, double epsilon,
           double gamma, double gamma_report, int steps, int runs, std::uint64_t seed,
           const std::vector<std::string>& metrics, int metric_every, int jobs) {
          ExperimentConfig cfg = build_config(agent, tau, epsilon, gamma, gamma_report, steps,
                                              runs, seed, metrics, metric_every, jobs);
          return experiment_csv(problem, cfg);
        },
        py::arg("problem"), py::arg("agent") = "spiti", py::arg("tau") = 7.88,
        py::arg("epsilon") = 0.1, py::arg("gamma") = 0.9, py::arg("gamma_report") = 0.99,
        py::arg("steps") = 4000, py::arg("runs") = 20, py::arg("seed") = 1,
        py::arg("metrics") = std::vector<std::string>{}, py::arg("metric_every") = 100,
        py::arg("jobs") = 1, "Run the online protocol and return the step CSV as a string");

  m.def("sweep_tau",
        [](const ProblemSpec& problem, const std::vector<double>& taus, int steps, int runs,
           std::uint64_t seed, int jobs) {
          SweepConfig cfg;
          if (!taus.empty()) cfg.taus = taus;
          cfg.steps = steps;
          cfg.runs = runs;
          cfg.seed = seed;
          cfg.jobs = jobs;
          cfg.gamma = problem.discount;
          py::list out;
          for (const SweepRow& row : sweep_tau(problem, cfg)) {
            py::dict d;
            d["run"] = row.run;
            d["tau"] = row.tau;
            d["model_nodes"] = row.model_nodes;
            d["xi"] = row.xi;
            d["trajectory_hash"] = row.trajectory_hash;
            d["seed"] = row.seed;
            out.append(d);
          }
          return out;
        },
        py::arg("problem"), py::arg("taus") = std::vector<double>{}, py::arg("steps") = 4000,
        py::arg("runs") = 20, py::arg("seed") = 1, py::arg("jobs") = 1);

#ifdef SPITI_VERSION
  m.attr("__version__") = SPITI_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
