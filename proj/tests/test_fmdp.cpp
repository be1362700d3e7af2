#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "spiti/fmdp.hpp"
#include "spiti/problems.hpp"

using namespace spiti;
using testing::for_each_state;

namespace {

using DT = DecisionTree<Distribution>;

// One-variable problem with a single self-loop action; P(true) configurable.
ProblemSpec one_var(double p_true) {
  ProblemSpec spec;
  spec.name = "one_var";
  spec.domain = DomainSpec::binary(1);
  spec.actions = {"act"};
  spec.cpds = {{DT::leaf({1.0 - p_true, p_true})}};
  spec.reward = DecisionTree<double>::leaf(0.0);
  spec.terminal = DecisionTree<bool>::leaf(false);
  spec.discount = 0.9;
  return spec;
}

// The two-parent CPD from the DBN-extraction figure: P(true) = 0.3 at (F, F).
DT fig_cpd() {
  return DT::node(0, {DT::node(1, {DT::leaf({0.7, 0.3}), DT::leaf({0.2, 0.8})}),
                      DT::leaf({0.1, 0.9})});
}

}  // namespace

TEST_CASE("sample_transition follows the per-variable CPDs") {
  ProblemSpec det = one_var(1.0);
  det.domain = DomainSpec::binary(2);
  det.cpds = {{DT::leaf({0.0, 1.0}), DT::leaf({0.0, 1.0})}};
  Rng rng(1);
  CHECK(sample_transition(det, State{0, 0}, 0, rng) == State{1, 1});

  ProblemSpec coin = one_var(0.5);
  Rng rng2(2);
  int trues = 0;
  for (int i = 0; i < 10000; ++i) trues += sample_transition(coin, State{0}, 0, rng2)[0];
  CHECK(std::fabs(trues / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("sampling matches a structured CPD leaf") {
  ProblemSpec spec;
  spec.domain = DomainSpec::binary(2);
  spec.name = "fig";
  spec.actions = {"act"};
  spec.cpds = {{DT::node(0, {DT::leaf({1, 0}), DT::leaf({0, 1})}), fig_cpd()}};
  spec.reward = DecisionTree<double>::leaf(0.0);
  spec.terminal = DecisionTree<bool>::leaf(false);
  Rng rng(3);
  int trues = 0;
  for (int i = 0; i < 10000; ++i) trues += sample_transition(spec, State{0, 0}, 0, rng)[1];
  CHECK(std::fabs(trues / 10000.0 - 0.3) < 0.02);
}

TEST_CASE("terminal states cannot be stepped") {
  ProblemSpec spec = make_linear(2);
  State terminal = {0, 1};
  REQUIRE(is_terminal(spec, terminal));
  Rng rng(1);
  CHECK_THROWS_AS(sample_transition(spec, terminal, 0, rng), Error);
}

TEST_CASE("generator rewards sit exactly on terminal states") {
  ProblemSpec spec = make_linear(4);
  for_each_state(spec.domain, [&](const State& s) {
    for (ActionId a = 0; a < spec.num_actions(); ++a)
      CHECK(true_reward(spec, s, a) == (is_terminal(spec, s) ? 1.0 : 0.0));
  });
}

TEST_CASE("initial states via rule and via reachability agree") {
  ProblemSpec with_rule = make_linear(2);
  ProblemSpec bare = with_rule;
  bare.initial_rule.reset();

  auto to_set = [](const std::vector<State>& states) {
    return std::set<State>(states.begin(), states.end());
  };
  std::set<State> expected = {{0, 0}, {1, 0}};
  CHECK(to_set(initial_states(with_rule)) == expected);
  CHECK(to_set(initial_states(bare)) == expected);

  for (int n : {3, 4}) {
    ProblemSpec rule = make_expon(n);
    ProblemSpec norule = rule;
    norule.initial_rule.reset();
    CHECK(to_set(initial_states(rule)) == to_set(initial_states(norule)));
  }
}

TEST_CASE("a problem without terminal states has no initial set") {
  ProblemSpec spec = one_var(0.5);
  CHECK(initial_states(spec).empty());
  // Reset falls back to a uniform draw over all states.
  Rng rng(5);
  Environment env(spec);
  int trues = 0;
  for (int i = 0; i < 10000; ++i) {
    env.reset(rng);
    trues += env.state()[0];
  }
  CHECK(std::fabs(trues / 10000.0 - 0.5) < 0.02);
}

TEST_CASE("reset_initial draws uniformly from the initial set") {
  ProblemSpec spec = make_linear(2);
  Rng rng(7);
  int first = 0;
  for (int i = 0; i < 10000; ++i) {
    State s = reset_initial(spec, rng);
    CHECK(!is_terminal(spec, s));
    if (s == State{0, 0}) ++first;
  }
  CHECK(std::fabs(first / 10000.0 - 0.5) < 0.02);

  Rng a(11), b(11);
  for (int i = 0; i < 20; ++i) CHECK(reset_initial(spec, a) == reset_initial(spec, b));

  // A rule selecting a single state always yields that state.
  ProblemSpec single = make_linear(2);
  single.initial_rule = DecisionTree<bool>::node(
      0, {DecisionTree<bool>::leaf(false),
          DecisionTree<bool>::node(1, {DecisionTree<bool>::leaf(true),
                                       DecisionTree<bool>::leaf(false)})});
  Rng rng2(13);
  for (int i = 0; i < 10; ++i) CHECK(reset_initial(single, rng2) == State{1, 0});
}

TEST_CASE("extract_parents reads tested variables") {
  ProblemSpec spec;
  spec.domain = DomainSpec::binary(2);
  spec.name = "fig";
  spec.actions = {"act"};
  spec.cpds = {{DT::leaf({0.5, 0.5}), fig_cpd()}};
  spec.reward = DecisionTree<double>::leaf(0.0);
  spec.terminal = DecisionTree<bool>::leaf(false);
  DbnGraph g = extract_parents(spec);
  CHECK(g.of(0, 0).empty());
  CHECK(g.of(0, 1) == std::vector<VarId>{0, 1});

  LearnedModel fresh(make_linear(3), InductionConfig{});
  DbnGraph fg = extract_parents(fresh);
  for (ActionId a = 0; a < 3; ++a)
    for (VarId i = 0; i < 3; ++i) CHECK(fg.of(a, i).empty());
}

TEST_CASE("ground_mdp enumerates the product-form transition law") {
  ProblemSpec spec = one_var(0.7);
  GroundMdp mdp = ground_mdp(spec);
  REQUIRE(mdp.num_states() == 2);
  REQUIRE(mdp.trans[0][0].size() == 2);
  CHECK(mdp.trans[0][0][0].second == doctest::Approx(0.3));
  CHECK(mdp.trans[0][0][1].second == doctest::Approx(0.7));

  ProblemSpec two;
  two.name = "two";
  two.domain = DomainSpec::binary(2);
  two.actions = {"act"};
  two.cpds = {{DT::leaf({0.5, 0.5}), DT::leaf({0.5, 0.5})}};
  two.reward = DecisionTree<double>::leaf(0.0);
  two.terminal = DecisionTree<bool>::leaf(false);
  GroundMdp m2 = ground_mdp(two);
  REQUIRE(m2.trans[0][0].size() == 4);
  for (const auto& [s2, p] : m2.trans[0][0]) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("ground rows are probability distributions and match direct products") {
  for (const ProblemSpec& spec : {make_noisy(5, 0.2), make_coffee_robot(), make_expon(4)}) {
    GroundMdp mdp = ground_mdp(spec);
    long long nonterminal_rows = 0;
    for (long long s = 0; s < mdp.num_states(); ++s) {
      if (mdp.terminal[s]) {
        CHECK(mdp.trans[s].empty());
        continue;
      }
      State state = spec.domain.index_state(s);
      for (int a = 0; a < mdp.num_actions(); ++a) {
        ++nonterminal_rows;
        double sum = 0.0;
        for (const auto& [s2, p] : mdp.trans[s][a]) {
          sum += p;
          // Independent route: multiply per-variable CPD evaluations.
          State next = spec.domain.index_state(s2);
          double direct = 1.0;
          for (VarId i = 0; i < spec.num_vars(); ++i)
            direct *= spec.cpds[a][i].evaluate(state)[next[i]];
          CHECK(p == doctest::Approx(direct).epsilon(1e-12));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
    if (spec.name == "coffee_robot") CHECK(nonterminal_rows == 128);
  }
}

TEST_CASE("enumeration refuses oversized problems") {
  CHECK_THROWS_AS(ground_mdp(make_linear(20)), EnumerationError);
}

TEST_CASE("learned model freezes to a problem spec") {
  ProblemSpec env = make_noisy(3, 0.2);
  LearnedModel empty(env, InductionConfig{});
  ProblemSpec frozen = empty.to_spec();
  for_each_state(env.domain, [&](const State& s) {
    for (ActionId a = 0; a < env.num_actions(); ++a) {
      for (VarId i = 0; i < env.num_vars(); ++i)
        CHECK(frozen.cpds[a][i].evaluate(s)[1] == doctest::Approx(0.5));
      CHECK(true_reward(frozen, s, a) == 0.0);
    }
  });
  CHECK(is_terminal(frozen, State{0, 0, 1}));  // terminal condition carried over

  // Train on a long random walk and compare against the generator.
  LearnedModel model(env, InductionConfig{7.88, 0.0});
  Rng rng(29);
  Environment sim(env);
  sim.reset(rng);
  for (int t = 0; t < 20000; ++t) {
    if (sim.at_terminal()) sim.reset(rng);
    State s = sim.state();
    ActionId a = uniform_int(rng, env.num_actions());
    double r = sim.step(a, rng);
    model.observe(s, a, sim.state(), r);
  }
  ProblemSpec learned = model.to_spec();
  for_each_state(env.domain, [&](const State& s) {
    if (is_terminal(env, s)) return;
    for (ActionId a = 0; a < env.num_actions(); ++a)
      for (VarId i = 0; i < env.num_vars(); ++i) {
        double got = learned.cpds[a][i].evaluate(s)[1];
        double want = env.cpds[a][i].evaluate(s)[1];
        CHECK(std::fabs(got - want) <= 0.05);
      }
  });

  // Freezing is a pure function of the learner state.
  ProblemSpec again = model.to_spec();
  for (ActionId a = 0; a < env.num_actions(); ++a)
    for (VarId i = 0; i < env.num_vars(); ++i)
      CHECK(trees_equal(learned.cpds[a][i], again.cpds[a][i]));
}

TEST_CASE("parent sets only grow on a deterministic stream") {
  ProblemSpec env = make_linear(4);
  LearnedModel model(env, InductionConfig{7.88, 0.0});
  Rng rng(31);
  Environment sim(env);
  sim.reset(rng);
  std::vector<std::set<VarId>> seen(4 * 4);
  for (int chunk = 0; chunk < 10; ++chunk) {
    for (int t = 0; t < 300; ++t) {
      if (sim.at_terminal()) sim.reset(rng);
      State s = sim.state();
      ActionId a = uniform_int(rng, 4);
      double r = sim.step(a, rng);
      model.observe(s, a, sim.state(), r);
    }
    DbnGraph g = extract_parents(model);
    for (ActionId a = 0; a < 4; ++a)
      for (VarId i = 0; i < 4; ++i) {
        std::set<VarId> now(g.of(a, i).begin(), g.of(a, i).end());
        CHECK(std::includes(now.begin(), now.end(), seen[a * 4 + i].begin(),
                            seen[a * 4 + i].end()));
        seen[a * 4 + i] = std::move(now);
      }
  }
}

TEST_CASE("problem validation catches malformed specs") {
  ProblemSpec bad = make_linear(2);
  bad.cpds[0][0] = DT::leaf({0.45, 0.45});
  CHECK_THROWS_WITH_AS(validate_problem(bad), doctest::Contains("CPD(a1, x1)"),
                       ValidationError);

  ProblemSpec repeat = make_linear(2);
  repeat.terminal = DecisionTree<bool>::node(
      0, {DecisionTree<bool>::node(0, {DecisionTree<bool>::leaf(false),
                                       DecisionTree<bool>::leaf(false)}),
          DecisionTree<bool>::leaf(true)});
  CHECK_THROWS_AS(validate_problem(repeat), ValidationError);

  ProblemSpec gamma = make_linear(2);
  gamma.discount = 1.0;
  CHECK_THROWS_AS(validate_problem(gamma), ValidationError);
}
