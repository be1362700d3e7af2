#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spiti/induction.hpp"
#include "spiti/tree.hpp"
#include "spiti/types.hpp"

namespace spiti {

/// Enumeration cap for ground oracles, in state-action pairs.
inline constexpr long long kEnumCap = 1ll << 21;

/// Ground-truth factored MDP: per-action per-variable CPD trees over the
/// current-state variables, a reward tree over (variables, action), a
/// terminal-condition tree and a discount factor.
struct ProblemSpec {
  std::string name;
  DomainSpec domain;
  std::vector<std::string> actions;
  /// cpds[a][i] gives the distribution of variable i at the next step.
  std::vector<std::vector<DecisionTree<Distribution>>> cpds;
  /// Tests state variables and the pseudo-variable `action_var()`.
  DecisionTree<double> reward;
  DecisionTree<bool> terminal;
  /// Optional explicit initial-state rule; overrides reachability.
  std::optional<DecisionTree<bool>> initial_rule;
  double discount = 0.9;
  std::optional<double> r_max;

  int num_vars() const { return domain.num_vars(); }
  int num_actions() const { return static_cast<int>(actions.size()); }
  /// Id of the action attribute in the reward tree's variable table.
  VarId action_var() const { return domain.num_vars(); }
  /// Declared r_max, or the largest reward-leaf magnitude.
  double max_reward() const;
};

/// Throws ValidationError listing the first violated invariant.
void validate_problem(const ProblemSpec& spec);

double true_reward(const ProblemSpec& spec, const State& s, ActionId a);
bool is_terminal(const ProblemSpec& spec, const State& s);

/// Draw each next-state variable independently from its CPD. Throws when `s`
/// is terminal (the caller must reset first).
State sample_transition(const ProblemSpec& spec, const State& s, ActionId a, Rng& rng);

/// All non-terminal states from which some policy reaches a terminal state
/// with positive probability. Uses the explicit initial rule when present,
/// otherwise a backward reachability fixed point on the ground MDP.
std::vector<State> initial_states(const ProblemSpec& spec);

/// Uniform draw over initial_states. When the problem has no terminal states
/// the draw falls back to uniform over all states.
State reset_initial(const ProblemSpec& spec, Rng& rng);

/// Parents_a(X'_i): the set of variables tested in each CPD tree.
struct DbnGraph {
  std::vector<std::vector<std::vector<VarId>>> parents;  // [action][var], sorted

  const std::vector<VarId>& of(ActionId a, VarId i) const { return parents[a][i]; }
};

DbnGraph extract_parents(const ProblemSpec& spec);

/// Brute-force tabular view of a ProblemSpec, for verification.
struct GroundMdp {
  DomainSpec domain;
  std::vector<std::string> actions;
  std::vector<char> terminal;                                          // [s]
  std::vector<std::vector<double>> reward;                             // [s][a]
  std::vector<std::vector<std::vector<std::pair<long long, double>>>> trans;  // [s][a]

  long long num_states() const { return static_cast<long long>(terminal.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
};

/// Enumerates the full MDP; throws EnumerationError past `max_sa_pairs`.
GroundMdp ground_mdp(const ProblemSpec& spec, long long max_sa_pairs = kEnumCap);

/// Tabular value iteration to sup-norm tolerance. Terminal states take the
/// value max_a R(s, a) and have no continuation.
std::vector<double> tabular_value_iteration(const GroundMdp& mdp, double gamma,
                                            double tol = 1e-12, int max_iter = 1000000);

std::vector<double> tabular_policy_evaluation(const GroundMdp& mdp, std::span<const int> policy,
                                              double gamma, double tol = 1e-12,
                                              int max_iter = 1000000);

/// One-step backup Q_a(s) given a state-value vector.
std::vector<double> tabular_q_backup(const GroundMdp& mdp, std::span<const double> v, ActionId a,
                                     double gamma);

/// The model built online: one CPD learner per (action, variable) plus one
/// reward learner over (variables, action). The terminal condition and
/// discount come from the environment the model is being learned in.
class LearnedModel {
 public:
  LearnedModel(const ProblemSpec& env, InductionConfig cfg);

  /// Feeds one observation: one reward example and one example per state
  /// variable into the CPD learners of the taken action.
  void observe(const State& s, ActionId a, const State& s_next, double r);

  /// Feeds the reward collected in a terminal state at episode end. Terminal
  /// states have no transitions, so only the reward learner is updated;
  /// without this the planner's terminal backup Q(s, a) = R(s, a) would rest
  /// on a reward region the learner never sees.
  void observe_terminal(const State& s_terminal, ActionId entering_action, double r);

  /// Freeze every learner into a ProblemSpec the planner can consume.
  ProblemSpec to_spec() const;

  const TreeLearner& cpd(ActionId a, VarId i) const { return cpds_[a][i]; }
  const RewardLearner& reward_learner() const { return reward_; }

  /// Node count of the transition model (CPD learner trees only).
  long long transition_nodes() const;
  long long observation_count() const { return observations_; }
  const InductionConfig& config() const { return cfg_; }
  const DomainSpec& domain() const { return domain_; }
  int num_actions() const { return static_cast<int>(actions_.size()); }

 private:
  DomainSpec domain_;
  std::vector<std::string> actions_;
  DecisionTree<bool> terminal_;
  double discount_;
  std::optional<double> r_max_;
  InductionConfig cfg_;
  std::vector<std::vector<TreeLearner>> cpds_;
  RewardLearner reward_;
  long long observations_ = 0;
};

DbnGraph extract_parents(const LearnedModel& model);

/// Simulation wrapper tracking the current state and episode count.
class Environment {
 public:
  explicit Environment(ProblemSpec spec);

  const ProblemSpec& spec() const { return spec_; }
  const State& state() const { return state_; }
  bool at_terminal() const { return is_terminal(spec_, state_); }
  int episode() const { return episode_; }

  void reset(Rng& rng);

  /// Applies the action from the current non-terminal state; returns the
  /// reward R(s, a) and advances the state.
  double step(ActionId a, Rng& rng);

 private:
  void ensure_initials();

  ProblemSpec spec_;
  State state_;
  int episode_ = 0;
  bool has_terminals_ = true;
  std::optional<std::vector<State>> enumerated_initials_;
};

}  // namespace spiti
