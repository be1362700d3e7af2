#include "spiti/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spiti {

namespace {

// Expected value of `v` when each tested variable j is distributed according
// to dists[slot_of[j]] independently.
double expected_value(const ValueTree& v, const std::vector<Distribution>& dists,
                      const std::vector<int>& slot_of) {
  if (v.is_leaf()) return v.label();
  const Distribution& d = dists[slot_of[v.test_var()]];
  double ev = 0.0;
  for (int k = 0; k < v.child_count(); ++k) {
    if (d[k] == 0.0) continue;
    ev += d[k] * expected_value(v.child(k), dists, slot_of);
  }
  return ev;
}

}  // namespace

ValueTree regress(const ValueTree& v, const ProblemSpec& model, ActionId a, double gamma) {
  ValueTree reward_a = simplify(restrict(model.reward, model.action_var(), a));

  // Expected next-step value as a tree over current-state variables.
  std::vector<VarId> vars = vars_tested(v);
  ValueTree ev_tree;
  if (vars.empty()) {
    ev_tree = ValueTree::leaf(v.label());
  } else {
    std::vector<int> slot_of(model.num_vars(), -1);
    std::vector<DecisionTree<Distribution>> cpd_subset;
    cpd_subset.reserve(vars.size());
    for (std::size_t k = 0; k < vars.size(); ++k) {
      slot_of[vars[k]] = static_cast<int>(k);
      cpd_subset.push_back(model.cpds[a][vars[k]]);
    }
    auto marginals = merge(cpd_subset, [](std::span<const Distribution> ds) {
      return std::vector<Distribution>(ds.begin(), ds.end());
    });
    ev_tree = transform_leaves(marginals, [&](const std::vector<Distribution>& ds) {
      return expected_value(v, ds, slot_of);
    });
  }

  ValueTree terminal01 =
      transform_leaves(model.terminal, [](const bool& t) { return t ? 1.0 : 0.0; });
  std::vector<ValueTree> parts = {reward_a, ev_tree, terminal01};
  ValueTree q = merge(parts, [gamma](std::span<const double> x) {
    return x[2] != 0.0 ? x[0] : x[0] + gamma * x[1];
  });
  return simplify(q);
}

PlanStepResult plan_step(const ProblemSpec& model, const ValueTree& v_prev, double gamma) {
  PlanStepResult out;
  out.q.reserve(model.num_actions());
  for (ActionId a = 0; a < model.num_actions(); ++a)
    out.q.push_back(regress(v_prev, model, a, gamma));
  out.value = simplify(merge(out.q, [](std::span<const double> x) {
    return *std::max_element(x.begin(), x.end());
  }));
  return out;
}

std::pair<double, double> diff_bounds(const ValueTree& a, const ValueTree& b) {
  std::vector<ValueTree> pair = {a, b};
  auto diff = merge(pair, [](std::span<const double> x) { return x[0] - x[1]; });
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double d : leaf_labels(diff)) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return {lo, hi};
}

double span_diff(const ValueTree& a, const ValueTree& b) {
  auto [lo, hi] = diff_bounds(a, b);
  return hi - lo;
}

double sup_diff(const ValueTree& a, const ValueTree& b) {
  std::vector<ValueTree> pair = {a, b};
  auto diff = merge(pair, [](std::span<const double> x) { return std::fabs(x[0] - x[1]); });
  double hi = 0.0;
  for (double d : leaf_labels(diff)) hi = std::max(hi, d);
  return hi;
}

PolicyTree greedy_policy(const QTreeSet& qs) {
  return simplify(merge(qs, [](std::span<const double> x) {
    int best = 0;
    for (std::size_t a = 1; a < x.size(); ++a)
      if (x[a] > x[best]) best = static_cast<int>(a);
    return best;
  }));
}

SviSolution svi_solve(const ProblemSpec& spec, const PlannerConfig& cfg) {
  ValueTree v = ValueTree::leaf(0.0);
  double span = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    PlanStepResult step = plan_step(spec, v, cfg.gamma);
    auto [lo, hi] = diff_bounds(step.value, v);
    span = hi - lo;
    v = step.value;
    if (span <= cfg.span_tolerance) {
      // Span termination leaves the iterate offset by an (almost) constant
      // drift; the midpoint correction recovers the value, and one extra
      // sweep restores Bellman consistency (and exact terminal rewards).
      double offset = cfg.gamma / (1.0 - cfg.gamma) * 0.5 * (hi + lo);
      if (std::fabs(offset) > cfg.span_tolerance) {
        v = transform_leaves(v, [offset](const double& x) { return x + offset; });
        step = plan_step(spec, v, cfg.gamma);
      }
      SviSolution sol;
      sol.value = step.value;
      sol.policy = greedy_policy(step.q);
      sol.q = std::move(step.q);
      sol.iterations = it;
      sol.final_span = span;
      return sol;
    }
  }
  throw ConvergenceError("svi_solve: span " + std::to_string(span) + " above tolerance after " +
                             std::to_string(cfg.max_iterations) + " iterations",
                         span);
}

ValueTree ssa_evaluate(const PolicyTree& policy, const ProblemSpec& spec,
                       const PlannerConfig& cfg) {
  // Per-state selection of the policy's action-value: merge the policy (as a
  // numeric tree) in front of the Q trees and index with it.
  ValueTree policy_num = transform_leaves(policy, [](const int& a) { return double(a); });
  ValueTree v = ValueTree::leaf(0.0);
  double delta = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    std::vector<ValueTree> parts;
    parts.reserve(spec.num_actions() + 1);
    parts.push_back(policy_num);
    for (ActionId a = 0; a < spec.num_actions(); ++a)
      parts.push_back(regress(v, spec, a, cfg.gamma));
    ValueTree next = simplify(merge(parts, [](std::span<const double> x) {
      return x[1 + static_cast<int>(x[0])];
    }));
    delta = sup_diff(next, v);
    v = std::move(next);
    if (delta <= cfg.sup_tolerance) return v;
  }
  throw ConvergenceError("ssa_evaluate: sup " + std::to_string(delta) + " above tolerance after " +
                             std::to_string(cfg.max_iterations) + " iterations",
                         delta);
}

}  // namespace spiti
