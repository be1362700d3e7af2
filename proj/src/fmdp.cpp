#include "spiti/fmdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

namespace spiti {

double ProblemSpec::max_reward() const {
  if (r_max) return *r_max;
  double m = 0.0;
  for (double v : leaf_labels(reward)) m = std::max(m, std::fabs(v));
  return m;
}

void validate_problem(const ProblemSpec& spec) {
  const int n = spec.num_vars();
  if (n == 0) throw ValidationError(spec.name + ": no variables declared");
  if (spec.actions.empty()) throw ValidationError(spec.name + ": no actions declared");
  if (spec.domain.names.size() != spec.domain.sizes.size())
    throw ValidationError(spec.name + ": variable name/size tables differ in length");
  for (int i = 0; i < n; ++i)
    if (spec.domain.sizes[i] < 2)
      throw ValidationError(spec.name + ": variable " + spec.domain.names[i] +
                            " has domain size < 2");
  if (spec.discount < 0.0 || spec.discount >= 1.0)
    throw ValidationError(spec.name + ": discount must lie in [0, 1)");
  if (static_cast<int>(spec.cpds.size()) != spec.num_actions())
    throw ValidationError(spec.name + ": one CPD table required per action");

  std::vector<int> sizes = spec.domain.sizes;
  for (ActionId a = 0; a < spec.num_actions(); ++a) {
    if (static_cast<int>(spec.cpds[a].size()) != n)
      throw ValidationError(spec.name + ": action " + spec.actions[a] +
                            " must carry one CPD tree per variable");
    for (VarId i = 0; i < n; ++i) {
      const auto& tree = spec.cpds[a][i];
      try {
        validate_tree(tree, sizes);
      } catch (const StructureError& e) {
        throw ValidationError(spec.name + ": CPD(" + spec.actions[a] + ", " +
                              spec.domain.names[i] + "): " + e.what());
      }
      for (const auto& dist : leaf_labels(tree)) {
        if (static_cast<int>(dist.size()) != spec.domain.sizes[i])
          throw ValidationError(spec.name + ": CPD(" + spec.actions[a] + ", " +
                                spec.domain.names[i] + "): leaf arity mismatch");
        double sum = 0.0;
        for (double p : dist) {
          if (p < -1e-12)
            throw ValidationError(spec.name + ": CPD(" + spec.actions[a] + ", " +
                                  spec.domain.names[i] + "): negative probability");
          sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
          throw ValidationError(spec.name + ": CPD(" + spec.actions[a] + ", " +
                                spec.domain.names[i] + "): leaf sums to " +
                                std::to_string(sum));
      }
    }
  }

  std::vector<int> reward_sizes = sizes;
  reward_sizes.push_back(spec.num_actions());
  try {
    validate_tree(spec.reward, reward_sizes);
  } catch (const StructureError& e) {
    throw ValidationError(spec.name + ": reward tree: " + e.what());
  }
  try {
    validate_tree(spec.terminal, sizes);
  } catch (const StructureError& e) {
    throw ValidationError(spec.name + ": terminal tree: " + e.what());
  }
  if (spec.initial_rule) {
    try {
      validate_tree(*spec.initial_rule, sizes);
    } catch (const StructureError& e) {
      throw ValidationError(spec.name + ": initial tree: " + e.what());
    }
  }
}

double true_reward(const ProblemSpec& spec, const State& s, ActionId a) {
  State extended = s;
  extended.push_back(a);
  return spec.reward.evaluate(extended);
}

bool is_terminal(const ProblemSpec& spec, const State& s) { return spec.terminal.evaluate(s); }

State sample_transition(const ProblemSpec& spec, const State& s, ActionId a, Rng& rng) {
  if (is_terminal(spec, s))
    throw Error("sample_transition from a terminal state; reset the episode first");
  State next(spec.num_vars());
  for (VarId i = 0; i < spec.num_vars(); ++i)
    next[i] = sample_index(spec.cpds[a][i].evaluate(s), rng);
  return next;
}

namespace {

State uniform_state(const DomainSpec& domain, Rng& rng) {
  State s(domain.num_vars());
  for (int i = 0; i < domain.num_vars(); ++i) s[i] = uniform_int(rng, domain.sizes[i]);
  return s;
}

}  // namespace

std::vector<State> initial_states(const ProblemSpec& spec) {
  const long long count = spec.domain.state_count();
  if (count > kEnumCap)
    throw EnumerationError(spec.name +
                           ": state space too large for reachability; provide an explicit "
                           "initial-state rule in the problem file");
  std::vector<State> out;
  if (spec.initial_rule) {
    for (long long idx = 0; idx < count; ++idx) {
      State s = spec.domain.index_state(idx);
      if (!is_terminal(spec, s) && spec.initial_rule->evaluate(s)) out.push_back(std::move(s));
    }
    return out;
  }
  // Backward reachability from the terminal set over positive-probability
  // edges: a state is initial if some action can eventually reach a terminal.
  GroundMdp mdp = ground_mdp(spec);
  std::vector<char> reaches(count, 0);
  std::deque<long long> queue;
  for (long long s = 0; s < count; ++s)
    if (mdp.terminal[s]) {
      reaches[s] = 1;
      queue.push_back(s);
    }
  // Reverse adjacency; terminal states have no outgoing edges.
  std::vector<std::vector<long long>> preds(count);
  for (long long s = 0; s < count; ++s) {
    if (mdp.terminal[s]) continue;
    for (int a = 0; a < mdp.num_actions(); ++a)
      for (const auto& [s2, p] : mdp.trans[s][a])
        if (p > 0.0 && s2 != s) preds[s2].push_back(s);
  }
  while (!queue.empty()) {
    long long s = queue.front();
    queue.pop_front();
    for (long long p : preds[s])
      if (!reaches[p]) {
        reaches[p] = 1;
        queue.push_back(p);
      }
  }
  for (long long s = 0; s < count; ++s)
    if (reaches[s] && !mdp.terminal[s]) out.push_back(spec.domain.index_state(s));
  return out;
}

State reset_initial(const ProblemSpec& spec, Rng& rng) {
  Environment env(spec);
  env.reset(rng);
  return env.state();
}

DbnGraph extract_parents(const ProblemSpec& spec) {
  DbnGraph g;
  g.parents.resize(spec.num_actions());
  for (ActionId a = 0; a < spec.num_actions(); ++a) {
    g.parents[a].resize(spec.num_vars());
    for (VarId i = 0; i < spec.num_vars(); ++i) g.parents[a][i] = vars_tested(spec.cpds[a][i]);
  }
  return g;
}

DbnGraph extract_parents(const LearnedModel& model) {
  DbnGraph g;
  g.parents.resize(model.num_actions());
  for (ActionId a = 0; a < model.num_actions(); ++a) {
    g.parents[a].resize(model.domain().num_vars());
    for (VarId i = 0; i < model.domain().num_vars(); ++i)
      g.parents[a][i] = model.cpd(a, i).tested_vars();
  }
  return g;
}

GroundMdp ground_mdp(const ProblemSpec& spec, long long max_sa_pairs) {
  const long long count = spec.domain.state_count();
  if (count * spec.num_actions() > max_sa_pairs)
    throw EnumerationError(spec.name + ": ground enumeration above the cap of " +
                           std::to_string(max_sa_pairs) + " state-action pairs");
  GroundMdp mdp;
  mdp.domain = spec.domain;
  mdp.actions = spec.actions;
  mdp.terminal.resize(count);
  mdp.reward.assign(count, std::vector<double>(spec.num_actions(), 0.0));
  mdp.trans.assign(count, {});
  const int n = spec.num_vars();
  std::vector<Distribution> dists(n);
  for (long long idx = 0; idx < count; ++idx) {
    State s = spec.domain.index_state(idx);
    mdp.terminal[idx] = is_terminal(spec, s) ? 1 : 0;
    for (ActionId a = 0; a < spec.num_actions(); ++a)
      mdp.reward[idx][a] = true_reward(spec, s, a);
    if (mdp.terminal[idx]) continue;  // terminal states have no transitions
    mdp.trans[idx].resize(spec.num_actions());
    for (ActionId a = 0; a < spec.num_actions(); ++a) {
      for (VarId i = 0; i < n; ++i) dists[i] = spec.cpds[a][i].evaluate(s);
      auto& row = mdp.trans[idx][a];
      // Enumerate positive-probability successors, variable 0 innermost.
      std::function<void(int, long long, long long, double)> rec =
          [&](int i, long long acc, long long stride, double p) {
            if (p == 0.0) return;
            if (i == n) {
              row.emplace_back(acc, p);
              return;
            }
            for (int v = 0; v < spec.domain.sizes[i]; ++v)
              rec(i + 1, acc + stride * v, stride * spec.domain.sizes[i], p * dists[i][v]);
          };
      rec(0, 0, 1, 1.0);
    }
  }
  return mdp;
}

namespace {

double state_value(const GroundMdp& mdp, const std::vector<double>& v, long long s, ActionId a,
                   double gamma) {
  double q = mdp.reward[s][a];
  if (mdp.terminal[s]) return q;
  double ev = 0.0;
  for (const auto& [s2, p] : mdp.trans[s][a]) ev += p * v[s2];
  return q + gamma * ev;
}

}  // namespace

std::vector<double> tabular_value_iteration(const GroundMdp& mdp, double gamma, double tol,
                                            int max_iter) {
  const long long count = mdp.num_states();
  std::vector<double> v(count, 0.0), next(count, 0.0);
  double delta = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    delta = 0.0;
    for (long long s = 0; s < count; ++s) {
      double best = state_value(mdp, v, s, 0, gamma);
      for (int a = 1; a < mdp.num_actions(); ++a)
        best = std::max(best, state_value(mdp, v, s, a, gamma));
      next[s] = best;
      delta = std::max(delta, std::fabs(next[s] - v[s]));
    }
    v.swap(next);
    if (delta <= tol) return v;
  }
  throw ConvergenceError("tabular value iteration did not converge", delta);
}

std::vector<double> tabular_policy_evaluation(const GroundMdp& mdp, std::span<const int> policy,
                                              double gamma, double tol, int max_iter) {
  const long long count = mdp.num_states();
  std::vector<double> v(count, 0.0), next(count, 0.0);
  double delta = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    delta = 0.0;
    for (long long s = 0; s < count; ++s) {
      next[s] = state_value(mdp, v, s, policy[s], gamma);
      delta = std::max(delta, std::fabs(next[s] - v[s]));
    }
    v.swap(next);
    if (delta <= tol) return v;
  }
  throw ConvergenceError("tabular policy evaluation did not converge", delta);
}

std::vector<double> tabular_q_backup(const GroundMdp& mdp, std::span<const double> v, ActionId a,
                                     double gamma) {
  const long long count = mdp.num_states();
  std::vector<double> q(count, 0.0);
  std::vector<double> vv(v.begin(), v.end());
  for (long long s = 0; s < count; ++s) q[s] = state_value(mdp, vv, s, a, gamma);
  return q;
}

LearnedModel::LearnedModel(const ProblemSpec& env, InductionConfig cfg)
    : domain_(env.domain),
      actions_(env.actions),
      terminal_(env.terminal),
      discount_(env.discount),
      r_max_(env.r_max),
      cfg_(cfg),
      reward_([&] {
        std::vector<int> sizes = env.domain.sizes;
        sizes.push_back(env.num_actions());
        return sizes;
      }(), cfg) {
  cpds_.reserve(actions_.size());
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    std::vector<TreeLearner> row;
    row.reserve(domain_.num_vars());
    for (int i = 0; i < domain_.num_vars(); ++i)
      row.emplace_back(domain_.sizes, domain_.sizes[i], cfg);
    cpds_.push_back(std::move(row));
  }
}

void LearnedModel::observe(const State& s, ActionId a, const State& s_next, double r) {
  State extended = s;
  extended.push_back(a);
  reward_.add_example(extended, r);
  for (VarId i = 0; i < domain_.num_vars(); ++i) cpds_[a][i].add_example(s, s_next[i]);
  ++observations_;
}

void LearnedModel::observe_terminal(const State& s_terminal, ActionId entering_action,
                                    double r) {
  State extended = s_terminal;
  extended.push_back(entering_action);
  reward_.add_example(extended, r);
}

ProblemSpec LearnedModel::to_spec() const {
  ProblemSpec spec;
  spec.name = "learned";
  spec.domain = domain_;
  spec.actions = actions_;
  spec.terminal = terminal_;
  spec.discount = discount_;
  spec.r_max = r_max_;
  spec.cpds.reserve(cpds_.size());
  for (const auto& row : cpds_) {
    std::vector<DecisionTree<Distribution>> frozen;
    frozen.reserve(row.size());
    for (const auto& learner : row) frozen.push_back(learner.freeze());
    spec.cpds.push_back(std::move(frozen));
  }
  spec.reward = reward_.freeze();
  return spec;
}

long long LearnedModel::transition_nodes() const {
  long long total = 0;
  for (const auto& row : cpds_)
    for (const auto& learner : row) total += static_cast<long long>(learner.node_count());
  return total;
}

Environment::Environment(ProblemSpec spec) : spec_(std::move(spec)) {
  state_.assign(spec_.num_vars(), 0);
  has_terminals_ = false;
  for (bool t : leaf_labels(spec_.terminal))
    if (t) has_terminals_ = true;
}

void Environment::ensure_initials() {
  if (!enumerated_initials_) enumerated_initials_ = initial_states(spec_);
}

void Environment::reset(Rng& rng) {
  ++episode_;
  if (!has_terminals_) {
    // No terminal states: reachability is vacuous, fall back to uniform.
    state_ = uniform_state(spec_.domain, rng);
    return;
  }
  if (spec_.initial_rule) {
    for (int tries = 0; tries < 200000; ++tries) {
      State s = uniform_state(spec_.domain, rng);
      if (!is_terminal(spec_, s) && spec_.initial_rule->evaluate(s)) {
        state_ = std::move(s);
        return;
      }
    }
    // Rule accepts almost nothing; enumerate instead.
  }
  ensure_initials();
  if (enumerated_initials_->empty())
    throw Error(spec_.name + ": no initial states (no state reaches a terminal)");
  state_ = (*enumerated_initials_)[uniform_int(rng, static_cast<int>(enumerated_initials_->size()))];
}

double Environment::step(ActionId a, Rng& rng) {
  if (at_terminal()) throw Error("Environment::step from a terminal state");
  double r = true_reward(spec_, state_, a);
  state_ = sample_transition(spec_, state_, a, rng);
  return r;
}

}  // namespace spiti
