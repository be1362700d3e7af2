#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "spiti/fmdp.hpp"
#include "spiti/planner.hpp"
#include "spiti/types.hpp"

namespace spiti {

struct ExplorationConfig {
  double epsilon = 0.1;
  double gamma = 0.9;
  /// Reporting discount for the R_disc trace.
  double gamma_report = 0.99;
};

/// Epsilon-greedy over a set of Q trees: with probability 1-epsilon the
/// argmax action (ties toward the lowest id), otherwise uniform.
ActionId select_action(const QTreeSet& qs, const State& s, double epsilon, int num_actions,
                       Rng& rng);

/// Common agent surface driven by the experiment runner.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual ActionId act(const State& s, Rng& rng) = 0;
  virtual void observe(const State& s, ActionId a, const State& s_next, double r,
                       bool next_terminal, Rng& rng) {
    (void)s, (void)a, (void)s_next, (void)r, (void)next_terminal, (void)rng;
  }
  /// Called when the step above entered a terminal state; `payout` is the
  /// reward attached to that state, observable because the episode ends in it.
  virtual void observe_episode_end(const State& s_terminal, ActionId entering_action,
                                   double payout, Rng& rng) {
    (void)s_terminal, (void)entering_action, (void)payout, (void)rng;
  }
  virtual long long model_nodes() const { return 0; }
};

/// Act / learn / plan loop over a learned factored model: every observation
/// feeds the tree learners, then one incremental value-iteration sweep
/// refreshes the Q trees used for acting.
class SpitiAgent : public Agent {
 public:
  SpitiAgent(const ProblemSpec& env, InductionConfig induction, ExplorationConfig exploration,
             int backups_per_step = 1);

  ActionId act(const State& s, Rng& rng) override;
  void observe(const State& s, ActionId a, const State& s_next, double r, bool next_terminal,
               Rng& rng) override;
  void observe_episode_end(const State& s_terminal, ActionId entering_action, double payout,
                           Rng& rng) override;
  long long model_nodes() const override { return model_.transition_nodes(); }

  const LearnedModel& model() const { return model_; }
  const QTreeSet& q_trees() const { return q_; }
  const ValueTree& value_tree() const { return value_; }
  long long learn_calls() const { return learn_calls_; }
  long long plan_calls() const { return plan_calls_; }

 private:
  LearnedModel model_;
  ExplorationConfig exploration_;
  int num_actions_;
  int backups_per_step_;
  ValueTree value_;
  QTreeSet q_;
  long long learn_calls_ = 0;
  long long plan_calls_ = 0;
};

/// Tabular model-based baseline: empirical transition/reward model plus
/// expected Q-backups, with extra planning sweeps over stored state-action
/// pairs proportional to the model size.
class DynaQAgent : public Agent {
 public:
  /// q_init < 0 means "use R_max / (1 - gamma)" from the problem.
  DynaQAgent(const ProblemSpec& env, ExplorationConfig exploration, double alpha = 1.0,
             int planning_multiplier = 2, double q_init = -1.0, bool sampled_updates = false);

  ActionId act(const State& s, Rng& rng) override;
  void observe(const State& s, ActionId a, const State& s_next, double r, bool next_terminal,
               Rng& rng) override;
  void observe_episode_end(const State& s_terminal, ActionId entering_action, double payout,
                           Rng& rng) override;
  /// Number of distinct stored state-action pairs (the problem's transitions).
  long long model_nodes() const override { return static_cast<long long>(stored_.size()); }

  double q_value(const State& s, ActionId a) const;
  /// Greedy policy as a tree, built by enumerating the state space.
  PolicyTree policy_tree() const;

 private:
  struct SaModel {
    long long visits = 0;
    double reward_sum = 0.0;
    std::vector<std::pair<long long, long long>> successors;  // (state index, count), sorted
  };

  long long index_of(const State& s) const { return domain_.state_index(s); }
  double best_q(long long s_idx) const;
  void expected_update(long long s_idx, ActionId a, Rng& rng);

  DomainSpec domain_;
  int num_actions_;
  ExplorationConfig exploration_;
  double alpha_;
  int planning_multiplier_;
  double q_init_;
  bool sampled_updates_;
  std::vector<std::pair<long long, ActionId>> stored_;        // insertion order
  std::unordered_map<long long, std::vector<double>> q_;      // [s] -> per action
  std::unordered_map<long long, std::vector<SaModel>> model_; // [s] -> per action
  std::unordered_map<long long, char> terminal_;              // observed terminal flags
  std::unordered_map<long long, double> terminal_value_;      // episode-end payouts

 public:
  const std::vector<std::pair<long long, ActionId>>& stored_pairs() const { return stored_; }
};

class RandomAgent : public Agent {
 public:
  explicit RandomAgent(int num_actions) : num_actions_(num_actions) {}
  ActionId act(const State&, Rng& rng) override { return uniform_int(rng, num_actions_); }

 private:
  int num_actions_;
};

class OptimalAgent : public Agent {
 public:
  explicit OptimalAgent(PolicyTree policy) : policy_(std::move(policy)) {}
  ActionId act(const State& s, Rng&) override { return policy_.evaluate(s); }

 private:
  PolicyTree policy_;
};

}  // namespace spiti
