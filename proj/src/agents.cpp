#include "spiti/agents.hpp"

#include <algorithm>
#include <functional>

namespace spiti {

ActionId select_action(const QTreeSet& qs, const State& s, double epsilon, int num_actions,
                       Rng& rng) {
  if (uniform01(rng) < epsilon) return uniform_int(rng, num_actions);
  ActionId best = 0;
  double best_q = qs.empty() ? 0.0 : qs[0].evaluate(s);
  for (ActionId a = 1; a < num_actions; ++a) {
    double q = qs[a].evaluate(s);
    if (q > best_q) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

SpitiAgent::SpitiAgent(const ProblemSpec& env, InductionConfig induction,
                       ExplorationConfig exploration, int backups_per_step)
    : model_(env, induction),
      exploration_(exploration),
      num_actions_(env.num_actions()),
      backups_per_step_(backups_per_step),
      value_(ValueTree::leaf(0.0)) {
  q_.assign(num_actions_, ValueTree::leaf(0.0));
}

ActionId SpitiAgent::act(const State& s, Rng& rng) {
  return select_action(q_, s, exploration_.epsilon, num_actions_, rng);
}

void SpitiAgent::observe_episode_end(const State& s_terminal, ActionId entering_action,
                                     double payout, Rng&) {
  model_.observe_terminal(s_terminal, entering_action, payout);
}

void SpitiAgent::observe(const State& s, ActionId a, const State& s_next, double r, bool,
                         Rng&) {
  model_.observe(s, a, s_next, r);
  ++learn_calls_;
  ProblemSpec frozen = model_.to_spec();
  for (int k = 0; k < backups_per_step_; ++k) {
    PlanStepResult step = plan_step(frozen, value_, exploration_.gamma);
    value_ = std::move(step.value);
    q_ = std::move(step.q);
  }
  ++plan_calls_;
}

DynaQAgent::DynaQAgent(const ProblemSpec& env, ExplorationConfig exploration, double alpha,
                       int planning_multiplier, double q_init, bool sampled_updates)
    : domain_(env.domain),
      num_actions_(env.num_actions()),
      exploration_(exploration),
      alpha_(alpha),
      planning_multiplier_(planning_multiplier),
      q_init_(q_init >= 0.0 ? q_init : env.max_reward() / (1.0 - exploration.gamma)),
      sampled_updates_(sampled_updates) {
  if (env.domain.state_count() <= 0) throw Error("DynaQAgent: empty state space");
}

double DynaQAgent::best_q(long long s_idx) const {
  auto it = q_.find(s_idx);
  if (it == q_.end()) return q_init_;
  return *std::max_element(it->second.begin(), it->second.end());
}

double DynaQAgent::q_value(const State& s, ActionId a) const {
  auto it = q_.find(index_of(s));
  return it == q_.end() ? q_init_ : it->second[a];
}

ActionId DynaQAgent::act(const State& s, Rng& rng) {
  if (uniform01(rng) < exploration_.epsilon) return uniform_int(rng, num_actions_);
  auto it = q_.find(index_of(s));
  if (it == q_.end()) return 0;  // all actions tie at q_init
  ActionId best = 0;
  for (ActionId a = 1; a < num_actions_; ++a)
    if (it->second[a] > it->second[best]) best = a;
  return best;
}

void DynaQAgent::expected_update(long long s_idx, ActionId a, Rng& rng) {
  const SaModel& sa = model_.at(s_idx)[a];
  double r_hat = sa.reward_sum / static_cast<double>(sa.visits);
  double future = 0.0;
  // A terminal successor contributes its episode-end payout and nothing
  // beyond it.
  auto successor_value = [this](long long s2) {
    auto t = terminal_.find(s2);
    if (t != terminal_.end() && t->second) {
      auto payout = terminal_value_.find(s2);
      return payout == terminal_value_.end() ? 0.0 : payout->second;
    }
    return best_q(s2);
  };
  if (sampled_updates_) {
    // Draw one successor from the empirical counts.
    long long pick = static_cast<long long>(uniform01(rng) * static_cast<double>(sa.visits));
    long long acc = 0;
    long long s2 = sa.successors.back().first;
    for (const auto& [succ, count] : sa.successors) {
      acc += count;
      if (pick < acc) {
        s2 = succ;
        break;
      }
    }
    future = successor_value(s2);
  } else {
    for (const auto& [s2, count] : sa.successors)
      future += static_cast<double>(count) / static_cast<double>(sa.visits) *
                successor_value(s2);
  }
  double target = r_hat + exploration_.gamma * future;
  auto [it, inserted] = q_.try_emplace(s_idx, std::vector<double>(num_actions_, q_init_));
  it->second[a] = (1.0 - alpha_) * it->second[a] + alpha_ * target;
}

void DynaQAgent::observe(const State& s, ActionId a, const State& s_next, double r,
                         bool next_terminal, Rng& rng) {
  long long s_idx = index_of(s);
  long long s2_idx = index_of(s_next);
  terminal_[s_idx] = 0;
  terminal_[s2_idx] = next_terminal ? 1 : 0;

  auto [it, inserted] = model_.try_emplace(s_idx, std::vector<SaModel>(num_actions_));
  SaModel& sa = it->second[a];
  if (sa.visits == 0) stored_.emplace_back(s_idx, a);
  ++sa.visits;
  sa.reward_sum += r;
  auto pos = std::lower_bound(sa.successors.begin(), sa.successors.end(),
                              std::make_pair(s2_idx, 0ll));
  if (pos != sa.successors.end() && pos->first == s2_idx)
    ++pos->second;
  else
    sa.successors.insert(pos, {s2_idx, 1});

  expected_update(s_idx, a, rng);
  long long sweeps = static_cast<long long>(planning_multiplier_) *
                     static_cast<long long>(stored_.size());
  for (long long k = 0; k < sweeps; ++k) {
    const auto& [ps, pa] = stored_[uniform_int(rng, static_cast<int>(stored_.size()))];
    expected_update(ps, pa, rng);
  }
}

void DynaQAgent::observe_episode_end(const State& s_terminal, ActionId, double payout,
                                     Rng&) {
  terminal_value_[index_of(s_terminal)] = payout;
}

PolicyTree DynaQAgent::policy_tree() const {
  if (domain_.state_count() * num_actions_ > kEnumCap)
    throw EnumerationError("DynaQAgent::policy_tree: state space above the enumeration cap");
  const int n = domain_.num_vars();
  State s(n, 0);
  std::function<PolicyTree(int)> build = [&](int i) -> PolicyTree {
    if (i == n) {
      auto it = q_.find(domain_.state_index(s));
      if (it == q_.end()) return PolicyTree::leaf(0);
      ActionId best = 0;
      for (ActionId a = 1; a < num_actions_; ++a)
        if (it->second[a] > it->second[best]) best = a;
      return PolicyTree::leaf(best);
    }
    std::vector<PolicyTree> kids;
    kids.reserve(domain_.sizes[i]);
    for (int v = 0; v < domain_.sizes[i]; ++v) {
      s[i] = v;
      kids.push_back(build(i + 1));
    }
    s[i] = 0;
    return PolicyTree::node(i, std::move(kids));
  };
  return simplify(build(0));
}

}  // namespace spiti
