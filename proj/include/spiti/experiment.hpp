#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "spiti/agents.hpp"
#include "spiti/fmdp.hpp"
#include "spiti/planner.hpp"

namespace spiti {

enum class AgentKind { spiti, dynaq, random_walk, optimal };

AgentKind agent_kind_from_string(const std::string& name);
std::string to_string(AgentKind kind);

struct ExperimentConfig {
  AgentKind agent = AgentKind::spiti;
  double tau = 7.88;
  double restructure_margin = 0.0;
  double epsilon = 0.1;
  double gamma = 0.9;
  double gamma_report = 0.99;
  int steps = 4000;
  int runs = 20;
  std::uint64_t seed = 1;
  bool metric_xi = false;
  bool metric_qchi2 = false;
  int metric_every = 100;
  int jobs = 1;
  int backups_per_step = 1;
  double dynaq_alpha = 1.0;
  int dynaq_planning_multiplier = 2;
  double dynaq_q_init = -1.0;  // negative -> R_max / (1 - gamma)
  bool dynaq_sampled_updates = false;
  /// Solver settings for the optimal policy and the xi metric. Tight by
  /// default so that SSA values never numerically exceed V*.
  PlannerConfig planner{0.9, 1e-9, 1e-9, 100000};
};

struct StepRow {
  int t = 0;
  State state;
  ActionId action = 0;
  double reward = 0.0;
  double r_disc = 0.0;
  long long model_nodes = 0;
  int episode = 0;
  bool episode_start = false;
  std::optional<double> xi;
  std::optional<double> q_chi2;
};

struct ReplicaResult {
  int run = 0;
  std::uint64_t seed = 0;
  std::vector<StepRow> rows;
  std::optional<std::string> error;
  /// Final learned model (spiti runs only), for dumping.
  std::optional<ProblemSpec> final_model;
};

/// Runs `config.runs` independently seeded replicas of the online protocol.
/// A module error inside one replica is recorded on that replica and the
/// others proceed.
std::vector<ReplicaResult> run_experiment(const ProblemSpec& problem,
                                          const ExperimentConfig& config);

/// Fixed schema: run,t,action,reward,r_disc,model_nodes,xi,q_chi2,seed.
extern const char* const kCsvHeader;
void write_csv(std::ostream& out, const ProblemSpec& problem,
               std::span<const ReplicaResult> results);
std::string experiment_csv(const ProblemSpec& problem, const ExperimentConfig& config);

struct SweepConfig {
  std::vector<double> taus = {0.5, 1.0, 2.0, 3.84, 6.63, 7.88, 10.8};
  double restructure_margin = 0.0;
  int steps = 4000;
  int runs = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
  PlannerConfig planner{0.9, 1e-9, 1e-9, 100000};
  double gamma = 0.9;
};

struct SweepRow {
  int run = 0;
  double tau = 0.0;
  long long model_nodes = 0;
  double xi = 0.0;
  std::uint64_t trajectory_hash = 0;
  std::uint64_t seed = 0;
};

/// Threshold-sweep protocol: per replica one random trajectory is recorded,
/// then for every tau a model is built from that identical trajectory, solved
/// offline, and scored against the optimal value function.
std::vector<SweepRow> sweep_tau(const ProblemSpec& problem, const SweepConfig& config);

extern const char* const kSweepCsvHeader;
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

/// Offline solve, spec'd tolerances taken from `cfg`.
SviSolution solve_offline(const ProblemSpec& problem, const PlannerConfig& cfg);

/// One environment transition as the learners consume it.
struct Observation {
  State s;
  ActionId a;
  State s_next;
  double reward;
  /// Reward of s_next when it ended the episode.
  std::optional<double> terminal_payout;
};

/// Uniform-random trajectory with episodic resets.
std::vector<Observation> random_trajectory(const ProblemSpec& problem, int steps, Rng& rng);

/// Feeds one observation, including the terminal payout when present.
void feed_model(LearnedModel& model, const Observation& obs);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace spiti
