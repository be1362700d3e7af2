#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spiti/experiment.hpp"
#include "spiti/metrics.hpp"
#include "spiti/problems.hpp"

namespace {

using namespace spiti;

std::vector<double> parse_taus(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
}

int run_command(const std::string& problem_arg, const std::string& agent, double tau,
                double epsilon, double gamma, double gamma_report, int steps, int runs,
                std::uint64_t seed, const std::string& metrics, int metric_every,
                const std::string& out_path, int jobs, int backups, bool dynaq_sampled,
                const std::string& dump_model) {
  ProblemSpec problem = resolve_problem(problem_arg);
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
  cfg.backups_per_step = backups;
  cfg.dynaq_sampled_updates = dynaq_sampled;
  std::stringstream ms(metrics);
  std::string metric;
  while (std::getline(ms, metric, ',')) {
    if (metric == "xi")
      cfg.metric_xi = true;
    else if (metric == "qchi2")
      cfg.metric_qchi2 = true;
    else if (!metric.empty())
      throw ParseError("unknown metric '" + metric + "' (expected xi,qchi2)");
  }
  auto results = run_experiment(problem, cfg);
  std::ostringstream csv;
  write_csv(csv, problem, results);
  write_file(out_path, csv.str());
  if (!dump_model.empty()) {
    for (const auto& rep : results)
      if (rep.final_model) {
        save_problem(*rep.final_model, dump_model);
        break;
      }
  }
  int errors = 0;
  for (const auto& rep : results) errors += rep.error.has_value();
  std::cout << "wrote " << out_path << " (" << runs << " runs, " << steps << " steps";
  if (errors) std::cout << ", " << errors << " failed replicas";
  std::cout << ")\n";
  return 0;
}

int solve_command(const std::string& problem_arg, const std::string& out_path, double gamma,
                  double span_tol, double sup_tol, int max_iter) {
  ProblemSpec problem = resolve_problem(problem_arg);
  PlannerConfig cfg{gamma > 0 ? gamma : problem.discount, span_tol, sup_tol, max_iter};
  SviSolution sol = solve_offline(problem, cfg);
  Solution dump{problem.name, cfg.gamma, sol.value, sol.policy};
  save_solution(dump, problem, out_path);
  std::cout << "solved " << problem.name << " in " << sol.iterations
            << " sweeps (span " << format_double(sol.final_span) << "), wrote " << out_path
            << "\n";
  return 0;
}

int eval_command(const std::string& problem_arg, const std::string& model_path,
                 const std::string& metric) {
  ProblemSpec problem = resolve_problem(problem_arg);
  PlannerConfig cfg{problem.discount, 1e-9, 1e-9, 100000};
  if (metric == "xi") {
    Solution sol = load_solution(model_path, problem);
    SviSolution optimal = solve_offline(problem, cfg);
    ValueTree v_pi = ssa_evaluate(sol.policy, problem, cfg);
    std::cout << "xi=" << format_double(relative_error(optimal.value, v_pi, problem.domain).xi)
              << "\n";
    return 0;
  }
  if (metric == "qchi2") {
    ProblemSpec learned = load_problem(model_path);
    std::cout << "qchi2=" << format_double(model_accuracy(problem, learned).q_overall) << "\n";
    return 0;
  }
  throw ParseError("unknown metric '" + metric + "' (expected xi or qchi2)");
}

int sweep_command(const std::string& problem_arg, const std::string& taus, int steps, int runs,
                  std::uint64_t seed, const std::string& out_path, int jobs) {
  ProblemSpec problem = resolve_problem(problem_arg);
  SweepConfig cfg;
  if (!taus.empty()) cfg.taus = parse_taus(taus);
  cfg.steps = steps;
  cfg.runs = runs;
  cfg.seed = seed;
  cfg.jobs = jobs;
  cfg.gamma = problem.discount;
  auto rows = sweep_tau(problem, cfg);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_file(out_path, csv.str());
  std::cout << "wrote " << out_path << " (" << rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factored-MDP structure learning and planning benchmarks"};
  app.require_subcommand(1);

  std::string problem, agent = "spiti", metrics, out_path = "results.csv";
  std::string model_path, metric = "xi", taus, dump_model;
  double tau = 7.88, epsilon = 0.1, gamma = 0.9, gamma_report = 0.99;
  double span_tol = 1e-5, sup_tol = 1e-6;
  int steps = 4000, runs = 20, metric_every = 100, jobs = 1, backups = 1, max_iter = 100000;
  std::uint64_t seed = 1;
  bool dynaq_sampled = false;

  auto* run = app.add_subcommand("run", "Run an online learning experiment, write step CSV");
  run->add_option("--problem", problem, "Problem file or builtin:<spec>")->required();
  run->add_option("--agent", agent, "spiti|dynaq|random|optimal");
  run->add_option("--tau", tau, "Chi-square split threshold");
  run->add_option("--epsilon", epsilon, "Exploration rate");
  run->add_option("--gamma", gamma, "Discount factor");
  run->add_option("--gamma-report", gamma_report, "Discount for the reward trace");
  run->add_option("--steps", steps, "Steps per run");
  run->add_option("--runs", runs, "Independent replicas");
  run->add_option("--seed", seed, "Base seed; replica r uses seed + r");
  run->add_option("--metrics", metrics, "Comma list of xi,qchi2");
  run->add_option("--metric-every", metric_every, "Metric cadence in steps");
  run->add_option("--out", out_path, "Output CSV path");
  run->add_option("--jobs", jobs, "Concurrent replicas");
  run->add_option("--backups", backups, "Value-iteration sweeps per step");
  run->add_flag("--dynaq-sampled", dynaq_sampled, "Sampled instead of expected backups");
  run->add_option("--dump-model", dump_model, "Write the first replica's learned model");

  auto* solve = app.add_subcommand("solve", "Solve a problem offline, dump value and policy");
  solve->add_option("--problem", problem, "Problem file or builtin:<spec>")->required();
  solve->add_option("--out", out_path, "Output JSON path")->required();
  double solve_gamma = -1.0;
  solve->add_option("--gamma", solve_gamma, "Override the problem's discount");
  solve->add_option("--span-tol", span_tol, "Span seminorm tolerance");
  solve->add_option("--sup-tol", sup_tol, "Sup norm tolerance");
  solve->add_option("--max-iter", max_iter, "Iteration cap");

  auto* eval = app.add_subcommand("eval", "Score a dumped policy or learned model");
  eval->add_option("--problem", problem, "Problem file or builtin:<spec>")->required();
  eval->add_option("--model", model_path, "Solution (xi) or model file (qchi2)")->required();
  eval->add_option("--metric", metric, "xi|qchi2");

  auto* sweep = app.add_subcommand("sweep-tau", "Threshold sweep over a shared trajectory");
  sweep->add_option("--problem", problem, "Problem file or builtin:<spec>")->required();
  sweep->add_option("--taus", taus, "Comma list of thresholds");
  sweep->add_option("--steps", steps, "Trajectory length");
  sweep->add_option("--runs", runs, "Independent replicas");
  sweep->add_option("--seed", seed, "Base seed");
  sweep->add_option("--out", out_path, "Output CSV path")->required();
  sweep->add_option("--jobs", jobs, "Concurrent replicas");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return run_command(problem, agent, tau, epsilon, gamma, gamma_report, steps, runs, seed,
                         metrics, metric_every, out_path, jobs, backups, dynaq_sampled,
                         dump_model);
    if (solve->parsed())
      return solve_command(problem, out_path, solve_gamma, span_tol, sup_tol, max_iter);
    if (eval->parsed()) return eval_command(problem, model_path, metric);
    if (sweep->parsed())
      return sweep_command(problem, taus, steps, runs, seed, out_path, jobs);
  } catch (const spiti::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const spiti::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const spiti::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const spiti::EnumerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const spiti::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
