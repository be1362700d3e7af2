#include "spiti/stats.hpp"

#include <cmath>

namespace spiti {

double chi2_statistic(const ContingencyTable& table) {
  if (table.rows() == 0 || table.cols() == 0) throw Error("chi2_statistic: empty table");
  const int r = table.rows();
  const int c = table.cols();
  std::vector<double> row_total(r, 0.0), col_total(c, 0.0);
  double grand = 0.0;
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(table.counts[i].size()) != c)
      throw Error("chi2_statistic: ragged table");
    for (int j = 0; j < c; ++j) {
      double v = static_cast<double>(table.counts[i][j]);
      row_total[i] += v;
      col_total[j] += v;
      grand += v;
    }
  }
  if (grand <= 0.0) throw Error("chi2_statistic: table total is zero");
  double stat = 0.0;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      double expected = row_total[i] * col_total[j] / grand;
      if (expected <= 0.0) continue;
      double d = static_cast<double>(table.counts[i][j]) - expected;
      stat += d * d / expected;
    }
  }
  return stat;
}

int chi2_dof(const ContingencyTable& table) {
  return (table.rows() - 1) * (table.cols() - 1);
}

namespace {

constexpr int kItMax = 500;
constexpr double kEps = 1e-14;
constexpr double kFpMin = 1e-300;

// Lower regularized incomplete gamma P(a, x) by series expansion.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kItMax; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericError("incomplete gamma series did not converge");
}

// Upper regularized incomplete gamma Q(a, x) by modified Lentz continued
// fraction.
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kItMax; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericError("incomplete gamma continued fraction did not converge");
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw NumericError("gamma_q: invalid arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

}  // namespace

double chi2_tail_q(double chi2, int dof) {
  if (chi2 < 0.0) throw Error("chi2_tail_q: negative statistic");
  if (dof < 1) throw Error("chi2_tail_q: degrees of freedom must be positive");
  double q = gamma_q(0.5 * dof, 0.5 * chi2);
  if (q < 0.0) q = 0.0;
  if (q > 1.0) q = 1.0;
  return q;
}

double two_distribution_chi2(std::span<const double> p_ref, std::span<const double> p_est) {
  if (p_ref.size() != p_est.size())
    throw Error("two_distribution_chi2: length mismatch");
  if (p_ref.size() < 2) throw Error("two_distribution_chi2: need at least two components");
  constexpr double kZero = 1e-12;
  double stat = 0.0;
  for (std::size_t j = 0; j < p_ref.size(); ++j) {
    if (p_ref[j] <= kZero) {
      if (p_est[j] > kZero) return kChi2Cap;
      continue;
    }
    double d = p_est[j] - p_ref[j];
    stat += d * d / p_ref[j];
  }
  return stat;
}

}  // namespace spiti
