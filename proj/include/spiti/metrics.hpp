#pragma once

#include <vector>

#include "spiti/fmdp.hpp"
#include "spiti/planner.hpp"
#include "spiti/types.hpp"

namespace spiti {

struct RelativeErrorReport {
  double xi = 0.0;
  /// Per-leaf breakdown of the merged difference tree.
  struct Leaf {
    double delta_v;
    long long region_size;
  };
  std::vector<Leaf> leaves;
};

/// State-space-weighted average of the relative value error
/// (V* - V_pi) / V*, with 0/0 defined as 0. Throws when any leaf has
/// V_pi > V* beyond tolerance.
RelativeErrorReport relative_error(const ValueTree& v_star, const ValueTree& v_pi,
                                   const DomainSpec& domain);

/// Accuracy contribution of one (action, variable): merge the true and
/// learned CPD trees and accumulate Q(chi2) * S_l over the merged leaves,
/// where chi2 compares the two leaf distributions.
double sigma_accuracy(const ProblemSpec& truth, const ProblemSpec& learned, ActionId a, VarId i,
                      int dof = 1);

struct AccuracyReport {
  double q_overall = 0.0;
  std::vector<std::vector<double>> sigma;  // [action][variable]
};

/// Normalized model accuracy in [0, 1]; equals 1 exactly when every merged
/// leaf's distributions coincide.
AccuracyReport model_accuracy(const ProblemSpec& truth, const ProblemSpec& learned, int dof = 1);

/// R_t = r + gamma_report * R_{t-1}.
inline double discounted_reward_update(double prev, double r, double gamma_report) {
  return r + gamma_report * prev;
}

}  // namespace spiti
