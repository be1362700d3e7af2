#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "spiti/tree.hpp"

using namespace spiti;
using testing::for_each_state;
using testing::random_value_tree;

namespace {

DecisionTree<double> leaf(double v) { return DecisionTree<double>::leaf(v); }

}  // namespace

TEST_CASE("evaluate reaches the leaf selected by the path tests") {
  State s = {1, 0, 1};
  CHECK(leaf(0.3).evaluate(s) == 0.3);

  auto t = DecisionTree<double>::node(0, {leaf(1.0), leaf(2.0)});
  CHECK(t.evaluate(State{0}) == 1.0);
  CHECK(t.evaluate(State{1}) == 2.0);

  // The two-variable tree giving P(true) = 0.3 when both parents are false.
  using DT = DecisionTree<Distribution>;
  auto cpd = DT::node(0, {DT::node(1, {DT::leaf({0.7, 0.3}), DT::leaf({0.2, 0.8})}),
                          DT::leaf({0.1, 0.9})});
  CHECK(cpd.evaluate(State{0, 0})[1] == doctest::Approx(0.3));
}

TEST_CASE("evaluate rejects malformed input") {
  auto t = DecisionTree<double>::node(0, {leaf(1.0), leaf(2.0)});
  CHECK_THROWS_AS(t.evaluate(State{5}), StructureError);
  CHECK_THROWS_AS(t.evaluate(State{}), StructureError);
}

TEST_CASE("merge of constant trees applies the combiner") {
  std::vector<DecisionTree<double>> ts = {leaf(1.0), leaf(2.0)};
  auto m = merge(ts, [](std::span<const double> x) { return std::max(x[0], x[1]); });
  REQUIRE(m.is_leaf());
  CHECK(m.label() == 2.0);
}

TEST_CASE("merge grafts structure and combines pointwise") {
  std::vector<DecisionTree<double>> ts = {leaf(1.0),
                                          DecisionTree<double>::node(0, {leaf(2.0), leaf(0.0)})};
  auto m = merge(ts, [](std::span<const double> x) { return std::max(x[0], x[1]); });
  CHECK(m.evaluate(State{0}) == 2.0);
  CHECK(m.evaluate(State{1}) == 1.0);
  CHECK(m.node_count() == 3);
}

TEST_CASE("merge equals pointwise combination on random trees") {
  Rng rng(7);
  DomainSpec domain = DomainSpec::binary(6);
  for (int trial = 0; trial < 40; ++trial) {
    int k = 2 + trial % 3;
    std::vector<DecisionTree<double>> ts;
    for (int i = 0; i < k; ++i) ts.push_back(random_value_tree(rng, 6));
    auto sum = [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v;
      return s;
    };
    auto m = merge(ts, sum);
    validate_tree(m, domain.sizes);
    // Result never tests a variable twice and is bounded by the product of
    // the input sizes.
    std::size_t bound = 1;
    for (const auto& t : ts) bound *= t.node_count();
    CHECK(m.node_count() <= bound);
    for_each_state(domain, [&](const State& s) {
      double expect = 0.0;
      for (const auto& t : ts) expect += t.evaluate(s);
      CHECK(m.evaluate(s) == doctest::Approx(expect).epsilon(1e-12));
    });
  }
}

TEST_CASE("restrict specializes one variable") {
  CHECK(restrict(leaf(5.0), 0, 0).label() == 5.0);
  auto t = DecisionTree<double>::node(0, {leaf(1.0), leaf(2.0)});
  auto r = restrict(t, 0, 1);
  REQUIRE(r.is_leaf());
  CHECK(r.label() == 2.0);
}

TEST_CASE("restrict matches substitute-then-evaluate on random trees") {
  Rng rng(11);
  DomainSpec domain = DomainSpec::binary(5);
  for (int trial = 0; trial < 40; ++trial) {
    auto t = random_value_tree(rng, 5);
    int var = uniform_int(rng, 5);
    int value = uniform_int(rng, 2);
    auto r = restrict(t, var, value);
    for_each_state(domain, [&](const State& s) {
      State sub = s;
      sub[var] = value;
      CHECK(r.evaluate(s) == t.evaluate(sub));
    });
  }
}

TEST_CASE("leaf_regions partition the state space") {
  DomainSpec d3 = DomainSpec::binary(3);
  auto regions = leaf_regions(leaf(1.5), d3);
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].size == 8);

  DomainSpec d2 = DomainSpec::binary(2);
  auto t = DecisionTree<double>::node(0, {leaf(1.0), leaf(2.0)});
  auto two = leaf_regions(t, d2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].size == 2);
  CHECK(two[1].size == 2);

  Rng rng(3);
  DomainSpec d4 = DomainSpec::binary(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto rt = random_value_tree(rng, 4);
    long long total = 0;
    for (const auto& region : leaf_regions(rt, d4)) total += region.size;
    CHECK(total == 16);
  }
}

TEST_CASE("simplify collapses equal children and preserves evaluation") {
  auto t = DecisionTree<double>::node(0, {leaf(1.0), leaf(1.0)});
  auto s = simplify(t);
  REQUIRE(s.is_leaf());
  CHECK(s.label() == 1.0);

  auto minimal = DecisionTree<double>::node(0, {leaf(1.0), leaf(2.0)});
  CHECK(simplify(minimal).same_node(minimal));

  Rng rng(19);
  DomainSpec d4 = DomainSpec::binary(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto rt = random_value_tree(rng, 4);
    auto st = simplify(rt);
    for_each_state(d4, [&](const State& s2) { CHECK(st.evaluate(s2) == rt.evaluate(s2)); });
  }
}

TEST_CASE("transform_leaves maps labels in place") {
  auto t = DecisionTree<double>::node(1, {leaf(1.0), leaf(2.0)});
  auto doubled = transform_leaves(t, [](const double& v) { return 2.0 * v; });
  CHECK(doubled.evaluate(State{0, 0}) == 2.0);
  CHECK(doubled.evaluate(State{0, 1}) == 4.0);
}

TEST_CASE("vars_tested lists the tested variables") {
  auto t = DecisionTree<double>::node(
      2, {DecisionTree<double>::node(0, {leaf(1.0), leaf(2.0)}), leaf(3.0)});
  CHECK(vars_tested(t) == std::vector<VarId>{0, 2});
  CHECK(vars_tested(leaf(1.0)).empty());
}
