#include "spiti/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <functional>
#include <memory>
#include <sstream>
#include <thread>

#include "spiti/metrics.hpp"

namespace spiti {

AgentKind agent_kind_from_string(const std::string& name) {
  if (name == "spiti") return AgentKind::spiti;
  if (name == "dynaq") return AgentKind::dynaq;
  if (name == "random") return AgentKind::random_walk;
  if (name == "optimal") return AgentKind::optimal;
  throw ParseError("unknown agent kind '" + name + "'");
}

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::spiti: return "spiti";
    case AgentKind::dynaq: return "dynaq";
    case AgentKind::random_walk: return "random";
    case AgentKind::optimal: return "optimal";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

void parallel_runs(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

std::unique_ptr<Agent> make_agent(const ProblemSpec& problem, const ExperimentConfig& cfg,
                                  const PolicyTree* optimal_policy) {
  ExplorationConfig exploration{cfg.epsilon, cfg.gamma, cfg.gamma_report};
  switch (cfg.agent) {
    case AgentKind::spiti:
      return std::make_unique<SpitiAgent>(problem,
                                          InductionConfig{cfg.tau, cfg.restructure_margin},
                                          exploration, cfg.backups_per_step);
    case AgentKind::dynaq:
      return std::make_unique<DynaQAgent>(problem, exploration, cfg.dynaq_alpha,
                                          cfg.dynaq_planning_multiplier, cfg.dynaq_q_init,
                                          cfg.dynaq_sampled_updates);
    case AgentKind::random_walk:
      return std::make_unique<RandomAgent>(problem.num_actions());
    case AgentKind::optimal:
      return std::make_unique<OptimalAgent>(*optimal_policy);
  }
  throw Error("unreachable agent kind");
}

struct SharedSolution {
  std::optional<SviSolution> solution;
};

ReplicaResult run_replica(const ProblemSpec& problem, const ExperimentConfig& cfg, int run,
                          const SharedSolution& shared) {
  ReplicaResult result;
  result.run = run;
  result.seed = cfg.seed + static_cast<std::uint64_t>(run);
  Rng rng(result.seed);
  try {
    Environment env(problem);
    auto agent = make_agent(problem, cfg, shared.solution ? &shared.solution->policy : nullptr);
    double r_disc = 0.0;
    env.reset(rng);
    bool episode_start = true;
    for (int t = 1; t <= cfg.steps; ++t) {
      if (env.at_terminal()) {
        env.reset(rng);
        episode_start = true;
      }
      StepRow row;
      row.t = t;
      row.state = env.state();
      row.episode = env.episode();
      row.episode_start = episode_start;
      episode_start = false;

      State s = env.state();
      ActionId a = agent->act(s, rng);
      double r = env.step(a, rng);
      const State& s2 = env.state();
      bool entered_terminal = env.at_terminal();
      agent->observe(s, a, s2, r, entered_terminal, rng);
      if (entered_terminal)
        agent->observe_episode_end(s2, a, true_reward(problem, s2, a), rng);

      r_disc = discounted_reward_update(r_disc, r, cfg.gamma_report);
      row.action = a;
      row.reward = r;
      row.r_disc = r_disc;
      row.model_nodes = agent->model_nodes();

      if ((cfg.metric_xi || cfg.metric_qchi2) && cfg.metric_every > 0 &&
          t % cfg.metric_every == 0) {
        if (cfg.metric_xi && shared.solution) {
          std::optional<PolicyTree> policy;
          if (cfg.agent == AgentKind::spiti)
            policy = greedy_policy(static_cast<SpitiAgent*>(agent.get())->q_trees());
          else if (cfg.agent == AgentKind::dynaq)
            policy = static_cast<DynaQAgent*>(agent.get())->policy_tree();
          else if (cfg.agent == AgentKind::optimal)
            policy = shared.solution->policy;
          if (policy) {
            ValueTree v_pi = ssa_evaluate(*policy, problem, cfg.planner);
            row.xi = relative_error(shared.solution->value, v_pi, problem.domain).xi;
          }
        }
        if (cfg.metric_qchi2 && cfg.agent == AgentKind::spiti) {
          ProblemSpec learned = static_cast<SpitiAgent*>(agent.get())->model().to_spec();
          row.q_chi2 = model_accuracy(problem, learned).q_overall;
        }
      }
      result.rows.push_back(std::move(row));
    }
    if (cfg.agent == AgentKind::spiti)
      result.final_model = static_cast<SpitiAgent*>(agent.get())->model().to_spec();
  } catch (const Error& e) {
    result.error = e.what();
  }
  return result;
}

}  // namespace

std::vector<ReplicaResult> run_experiment(const ProblemSpec& problem,
                                          const ExperimentConfig& config) {
  if (config.runs < 1 || config.steps < 1)
    throw ValidationError("experiment needs runs >= 1 and steps >= 1");
  SharedSolution shared;
  if (config.agent == AgentKind::optimal || config.metric_xi) {
    PlannerConfig planner = config.planner;
    planner.gamma = config.gamma;
    shared.solution = svi_solve(problem, planner);
  }
  std::vector<ReplicaResult> results(config.runs);
  parallel_runs(config.runs, config.jobs, [&](int run) {
    ExperimentConfig cfg = config;
    cfg.planner.gamma = config.gamma;
    results[run] = run_replica(problem, cfg, run, shared);
  });
  return results;
}

const char* const kCsvHeader = "run,t,action,reward,r_disc,model_nodes,xi,q_chi2,seed";

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_csv(std::ostream& out, const ProblemSpec& problem,
               std::span<const ReplicaResult> results) {
  out << kCsvHeader << "\n";
  for (const auto& rep : results) {
    for (const auto& row : rep.rows) {
      out << rep.run << ',' << row.t << ',' << csv_escape(problem.actions[row.action]) << ','
          << format_double(row.reward) << ',' << format_double(row.r_disc) << ','
          << row.model_nodes << ',' << (row.xi ? format_double(*row.xi) : "") << ','
          << (row.q_chi2 ? format_double(*row.q_chi2) : "") << ',' << rep.seed << "\n";
    }
    if (rep.error) {
      int t = static_cast<int>(rep.rows.size()) + 1;
      out << rep.run << ',' << t << ',' << csv_escape("error: " + *rep.error)
          << ",,,,,," << rep.seed << "\n";
    }
  }
}

std::string experiment_csv(const ProblemSpec& problem, const ExperimentConfig& config) {
  auto results = run_experiment(problem, config);
  std::ostringstream out;
  write_csv(out, problem, results);
  return out.str();
}

std::vector<Observation> random_trajectory(const ProblemSpec& problem, int steps, Rng& rng) {
  std::vector<Observation> out;
  out.reserve(steps);
  Environment env(problem);
  env.reset(rng);
  for (int t = 1; t <= steps; ++t) {
    if (env.at_terminal()) env.reset(rng);
    State s = env.state();
    ActionId a = uniform_int(rng, problem.num_actions());
    double r = env.step(a, rng);
    Observation obs{std::move(s), a, env.state(), r, std::nullopt};
    if (env.at_terminal()) obs.terminal_payout = true_reward(problem, env.state(), a);
    out.push_back(std::move(obs));
  }
  return out;
}

void feed_model(LearnedModel& model, const Observation& obs) {
  model.observe(obs.s, obs.a, obs.s_next, obs.reward);
  if (obs.terminal_payout)
    model.observe_terminal(obs.s_next, obs.a, *obs.terminal_payout);
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xff;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<SweepRow> sweep_tau(const ProblemSpec& problem, const SweepConfig& config) {
  if (config.taus.empty()) throw ValidationError("sweep_tau: empty tau grid");
  PlannerConfig planner = config.planner;
  planner.gamma = config.gamma;
  SviSolution optimal = svi_solve(problem, planner);

  std::vector<std::vector<SweepRow>> per_run(config.runs);
  parallel_runs(config.runs, config.jobs, [&](int run) {
    std::uint64_t seed = config.seed + static_cast<std::uint64_t>(run);
    Rng rng(seed);
    std::vector<Observation> trajectory = random_trajectory(problem, config.steps, rng);
    std::uint64_t hash = 1469598103934665603ull;
    for (const auto& obs : trajectory) {
      hash = fnv1a(hash, problem.domain.state_index(obs.s));
      hash = fnv1a(hash, static_cast<std::uint64_t>(obs.a));
    }
    for (double tau : config.taus) {
      LearnedModel model(problem, InductionConfig{tau, config.restructure_margin});
      for (const auto& obs : trajectory) feed_model(model, obs);
      SviSolution learned_solution = svi_solve(model.to_spec(), planner);
      ValueTree v_pi = ssa_evaluate(learned_solution.policy, problem, planner);
      double xi = relative_error(optimal.value, v_pi, problem.domain).xi;
      per_run[run].push_back({run, tau, model.transition_nodes(), xi, hash, seed});
    }
  });

  std::vector<SweepRow> rows;
  for (auto& chunk : per_run)
    for (auto& row : chunk) rows.push_back(row);
  return rows;
}

const char* const kSweepCsvHeader = "run,tau,model_nodes,xi,traj_hash,seed";

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << "\n";
  for (const auto& row : rows)
    out << row.run << ',' << format_double(row.tau) << ',' << row.model_nodes << ','
        << format_double(row.xi) << ',' << row.trajectory_hash << ',' << row.seed << "\n";
}

SviSolution solve_offline(const ProblemSpec& problem, const PlannerConfig& cfg) {
  return svi_solve(problem, cfg);
}

}  // namespace spiti
