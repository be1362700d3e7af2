#pragma once

#include <vector>

#include "spiti/fmdp.hpp"
#include "spiti/tree.hpp"
#include "spiti/types.hpp"

namespace spiti {

using ValueTree = DecisionTree<double>;
using PolicyTree = DecisionTree<int>;
/// One action-value tree per action.
using QTreeSet = std::vector<ValueTree>;

struct PlannerConfig {
  double gamma = 0.9;
  /// Span-seminorm termination for value iteration.
  double span_tolerance = 1e-5;
  /// Sup-norm termination for policy evaluation.
  double sup_tolerance = 1e-6;
  int max_iterations = 100000;
};

/// One-step backup of a value tree through action a's DBN:
/// Q_a(s) = R(s, a) + gamma * E[V(s')], with Q_a(s) = R(s, a) on terminal
/// states. Merges the CPD trees of the variables tested in `v` and takes the
/// expectation of `v` leafwise under the product of their marginals.
ValueTree regress(const ValueTree& v, const ProblemSpec& model, ActionId a, double gamma);

struct PlanStepResult {
  QTreeSet q;
  ValueTree value;
};

/// Exactly one backup sweep: regress `v_prev` through every action and merge
/// the action-value trees with maximization.
PlanStepResult plan_step(const ProblemSpec& model, const ValueTree& v_prev, double gamma);

/// max over leaves minus min over leaves of (a - b).
double span_diff(const ValueTree& a, const ValueTree& b);
/// sup over leaves of |a - b|.
double sup_diff(const ValueTree& a, const ValueTree& b);

/// Greedy action per state; ties break toward the lowest action id.
PolicyTree greedy_policy(const QTreeSet& qs);

struct SviSolution {
  ValueTree value;
  PolicyTree policy;
  QTreeSet q;
  int iterations = 0;
  double final_span = 0.0;
};

/// Structured value iteration until span(V_t - V_{t-1}) <= span_tolerance.
/// Throws ConvergenceError (carrying the last span) past max_iterations.
SviSolution svi_solve(const ProblemSpec& spec, const PlannerConfig& cfg);

/// Structured successive approximation: policy evaluation to a fixed point
/// under the sup norm.
ValueTree ssa_evaluate(const PolicyTree& policy, const ProblemSpec& spec,
                       const PlannerConfig& cfg);

}  // namespace spiti
