#include "spiti/metrics.hpp"

#include <cmath>

#include "spiti/stats.hpp"

namespace spiti {

RelativeErrorReport relative_error(const ValueTree& v_star, const ValueTree& v_pi,
                                   const DomainSpec& domain) {
  std::vector<ValueTree> pair = {v_star, v_pi};
  ValueTree delta = merge(pair, [](std::span<const double> x) {
    double vs = x[0], vp = x[1];
    if (vp > vs + 1e-9)
      throw Error("relative_error: V_pi exceeds V* (" + std::to_string(vp) + " > " +
                  std::to_string(vs) + ")");
    if (std::fabs(vs) <= 1e-12) return 0.0;  // V* = V_pi = 0
    return (vs - vp) / vs;
  });
  RelativeErrorReport report;
  double weighted = 0.0;
  for (const auto& region : leaf_regions(delta, domain)) {
    report.leaves.push_back({region.label, region.size});
    weighted += region.label * static_cast<double>(region.size);
  }
  report.xi = weighted / static_cast<double>(domain.state_count());
  return report;
}

double sigma_accuracy(const ProblemSpec& truth, const ProblemSpec& learned, ActionId a, VarId i,
                      int dof) {
  std::vector<DecisionTree<Distribution>> pair = {truth.cpds[a][i], learned.cpds[a][i]};
  auto q_tree = merge(pair, [dof](std::span<const Distribution> ds) {
    return chi2_tail_q(two_distribution_chi2(ds[0], ds[1]), dof);
  });
  double sigma = 0.0;
  for (const auto& region : leaf_regions(q_tree, truth.domain))
    sigma += region.label * static_cast<double>(region.size);
  return sigma;
}

AccuracyReport model_accuracy(const ProblemSpec& truth, const ProblemSpec& learned, int dof) {
  if (truth.num_actions() != learned.num_actions() ||
      truth.num_vars() != learned.num_vars())
    throw Error("model_accuracy: mismatched variable or action tables");
  AccuracyReport report;
  report.sigma.assign(truth.num_actions(), std::vector<double>(truth.num_vars(), 0.0));
  double total = 0.0;
  for (ActionId a = 0; a < truth.num_actions(); ++a)
    for (VarId i = 0; i < truth.num_vars(); ++i) {
      report.sigma[a][i] = sigma_accuracy(truth, learned, a, i, dof);
      total += report.sigma[a][i];
    }
  // Average of per-(action, variable) sigmas, each of which tops out at the
  // state count, so the result lies in [0, 1].
  double normalizer = static_cast<double>(truth.num_actions()) *
                      static_cast<double>(truth.num_vars()) *
                      static_cast<double>(truth.domain.state_count());
  report.q_overall = total / normalizer;
  return report;
}

}  // namespace spiti
