#include <cmath>

#include "doctest.h"
#include "spiti/stats.hpp"
#include "spiti/types.hpp"

using namespace spiti;

namespace {

// Quadrature oracle for the chi-square(1) upper tail. Substituting x = u^2
// turns the integrable singularity at 0 into a smooth Gaussian integrand:
// P(X <= c) = sqrt(2/pi) * integral_0^sqrt(c) exp(-u^2/2) du.
double chi2_tail_quadrature_dof1(double c) {
  const int n = 200000;
  const double hi = std::sqrt(c);
  const double h = hi / n;
  double sum = 0.0;
  auto f = [](double u) { return std::exp(-0.5 * u * u); };
  for (int i = 0; i < n; ++i) {
    double a = i * h, b = a + h;
    sum += (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * (b - a) / 6.0;
  }
  return 1.0 - std::sqrt(2.0 / M_PI) * sum;
}

ContingencyTable table2x2(long long a, long long b, long long c, long long d) {
  return ContingencyTable{{{a, b}, {c, d}}};
}

// Four-term closed form for 2x2 tables.
double chi2_2x2_formula(double a, double b, double c, double d) {
  double n = a + b + c + d;
  double det = a * d - b * c;
  return n * det * det / ((a + b) * (c + d) * (a + c) * (b + d));
}

}  // namespace

TEST_CASE("chi2_statistic on worked examples") {
  CHECK(chi2_statistic(table2x2(10, 10, 10, 10)) == doctest::Approx(0.0));
  CHECK(chi2_statistic(table2x2(10, 20, 20, 10)) == doctest::Approx(6.6667).epsilon(1e-4));
  CHECK_THROWS_AS(chi2_statistic(ContingencyTable{}), Error);
  CHECK_THROWS_AS(chi2_statistic(table2x2(0, 0, 0, 0)), Error);
}

TEST_CASE("chi2_statistic matches the 2x2 closed form") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    long long a = uniform_int(rng, 50) + 1, b = uniform_int(rng, 50) + 1;
    long long c = uniform_int(rng, 50) + 1, d = uniform_int(rng, 50) + 1;
    CHECK(chi2_statistic(table2x2(a, b, c, d)) ==
          doctest::Approx(chi2_2x2_formula(a, b, c, d)).epsilon(1e-9));
  }
}

TEST_CASE("chi2_statistic is invariant under row and column permutation") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    long long a = uniform_int(rng, 30), b = uniform_int(rng, 30) + 1;
    long long c = uniform_int(rng, 30) + 1, d = uniform_int(rng, 30);
    double base = chi2_statistic(table2x2(a, b, c, d));
    CHECK(chi2_statistic(table2x2(c, d, a, b)) == doctest::Approx(base).epsilon(1e-12));
    CHECK(chi2_statistic(table2x2(b, a, d, c)) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("chi2_statistic vanishes exactly on factorizing tables") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    // Rank-1 counts: counts[i][j] = r_i * c_j.
    long long r0 = uniform_int(rng, 6) + 1, r1 = uniform_int(rng, 6) + 1;
    long long c0 = uniform_int(rng, 6) + 1, c1 = uniform_int(rng, 6) + 1;
    CHECK(chi2_statistic(table2x2(r0 * c0, r0 * c1, r1 * c0, r1 * c1)) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(chi2_statistic(table2x2(9, 3, 3, 2)) > 1e-3);  // perturbed rank-1
}

TEST_CASE("chi2_dof is (rows-1)(cols-1)") {
  CHECK(chi2_dof(table2x2(1, 2, 3, 4)) == 1);
  ContingencyTable t;
  t.counts = {{1, 2, 3}, {4, 5, 6}};
  CHECK(chi2_dof(t) == 2);
}

TEST_CASE("chi2_tail_q anchors and oracles") {
  CHECK(chi2_tail_q(0.0, 1) == 1.0);
  CHECK(chi2_tail_q(7.88, 1) == doctest::Approx(0.005).epsilon(0.1));
  CHECK(std::fabs(chi2_tail_q(7.88, 1) - 0.005) < 5e-4);
  CHECK(std::fabs(chi2_tail_q(3.84, 1) - 0.05) < 1e-3);
  CHECK(std::fabs(chi2_tail_q(3.84, 1) - chi2_tail_quadrature_dof1(3.84)) < 1e-9);

  // The 0.995 independence anchor.
  double q = chi2_tail_q(7.879, 1);
  CHECK(q >= 0.0045);
  CHECK(q <= 0.0055);
}

TEST_CASE("chi2_tail_q matches closed forms across a grid") {
  for (double x : {0.01, 0.1, 0.5, 1.0, 2.0, 3.84, 6.63, 7.88, 10.8, 20.0, 50.0}) {
    // dof 1: Q = erfc(sqrt(x/2)); dof 2: Q = exp(-x/2).
    CHECK(chi2_tail_q(x, 1) == doctest::Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-10));
    CHECK(chi2_tail_q(x, 2) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("chi2_tail_q is monotone and tends to zero") {
  double prev = 1.0;
  for (double x = 0.0; x <= 60.0; x += 0.5) {
    double q = chi2_tail_q(x, 1);
    CHECK(q <= prev + 1e-15);
    prev = q;
  }
  CHECK(chi2_tail_q(200.0, 1) < 1e-20);
  CHECK_THROWS_AS(chi2_tail_q(-1.0, 1), Error);
  CHECK_THROWS_AS(chi2_tail_q(1.0, 0), Error);
}

TEST_CASE("two_distribution_chi2 compares probability vectors") {
  Distribution p = {0.3, 0.7};
  CHECK(two_distribution_chi2(p, p) == doctest::Approx(0.0));
  CHECK(two_distribution_chi2(Distribution{0.5, 0.5}, Distribution{0.6, 0.4}) ==
        doctest::Approx(0.04).epsilon(1e-9));
  CHECK(two_distribution_chi2(Distribution{1.0, 0.0}, Distribution{1.0, 0.0}) == 0.0);
  // Mass on a zero-reference component caps the statistic.
  CHECK(two_distribution_chi2(Distribution{1.0, 0.0}, Distribution{0.9, 0.1}) == kChi2Cap);
  CHECK_THROWS_AS(two_distribution_chi2(Distribution{0.5, 0.5}, Distribution{1.0}), Error);
}
