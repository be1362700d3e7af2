#pragma once

#include <span>
#include <vector>

#include "spiti/types.hpp"

namespace spiti {

/// Counts of class values per attribute value: rows are attribute values
/// (branch outcomes), columns are class values.
struct ContingencyTable {
  std::vector<std::vector<long long>> counts;

  int rows() const { return static_cast<int>(counts.size()); }
  int cols() const { return counts.empty() ? 0 : static_cast<int>(counts[0].size()); }
  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (long long c : row) t += c;
    return t;
  }
};

/// Pearson statistic sum((observed - expected)^2 / expected) with
/// expected = row_total * col_total / grand_total. Cells with expected
/// count 0 contribute 0. Throws on an empty table.
double chi2_statistic(const ContingencyTable& table);

/// Degrees of freedom (rows - 1) * (cols - 1).
int chi2_dof(const ContingencyTable& table);

/// Tail probability that a chi-square variate with `dof` degrees of freedom
/// exceeds `chi2`: the regularized upper incomplete gamma Q(dof/2, chi2/2),
/// evaluated by series or continued fraction. Throws NumericError if the
/// evaluation does not converge within its iteration bound.
double chi2_tail_q(double chi2, int dof);

/// Statistic cap used when a reference component is zero but the estimate
/// puts mass there; keeps the tail probability pinned at ~0 instead of NaN.
inline constexpr double kChi2Cap = 1e6;

/// sum((p_est[j] - p_ref[j])^2 / p_ref[j]) over components with p_ref[j] > 0.
/// If p_ref[j] = 0 while p_est[j] > 0 the statistic is capped at kChi2Cap.
double two_distribution_chi2(std::span<const double> p_ref, std::span<const double> p_est);

}  // namespace spiti
