#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "spiti/agents.hpp"
#include "spiti/problems.hpp"

using namespace spiti;
using testing::for_each_state;

namespace {

using DT = DecisionTree<Distribution>;

ProblemSpec self_loop_reward_one() {
  // One persistent binary variable, one action, constant reward 1, no
  // terminals; the initial rule pins the start state.
  ProblemSpec spec;
  spec.name = "loop";
  spec.domain = DomainSpec::binary(1);
  spec.actions = {"act"};
  spec.cpds = {{DT::node(0, {DT::leaf({1.0, 0.0}), DT::leaf({0.0, 1.0})})}};
  spec.reward = DecisionTree<double>::leaf(1.0);
  spec.terminal = DecisionTree<bool>::leaf(false);
  spec.initial_rule =
      DecisionTree<bool>::node(0, {DecisionTree<bool>::leaf(true), DecisionTree<bool>::leaf(false)});
  spec.discount = 0.9;
  spec.r_max = 0.0;  // start the tabular baseline from zero
  return spec;
}

}  // namespace

TEST_CASE("select_action is greedy at epsilon zero and uniform at one") {
  QTreeSet qs = {ValueTree::leaf(0.0), ValueTree::leaf(3.0), ValueTree::leaf(1.0),
                 ValueTree::leaf(2.0)};
  State s = {0};
  Rng rng(1);
  for (int i = 0; i < 50; ++i) CHECK(select_action(qs, s, 0.0, 4, rng) == 1);

  std::vector<int> counts(4, 0);
  for (int i = 0; i < 10000; ++i) ++counts[select_action(qs, s, 1.0, 4, rng)];
  for (int c : counts) CHECK(std::fabs(c / 10000.0 - 0.25) < 0.02);

  int greedy = 0;
  for (int i = 0; i < 10000; ++i) greedy += select_action(qs, s, 0.1, 4, rng) == 1;
  CHECK(std::fabs(greedy / 10000.0 - (0.9 + 0.1 / 4)) < 0.02);
}

TEST_CASE("one observation feeds one example to each learner of the action") {
  ProblemSpec env = make_linear(3);
  LearnedModel model(env, InductionConfig{});
  model.observe(State{0, 0, 0}, 1, State{0, 0, 0}, 0.0);
  for (ActionId a = 0; a < 3; ++a)
    for (VarId i = 0; i < 3; ++i)
      CHECK(model.cpd(a, i).example_count() == (a == 1 ? 1 : 0));
  CHECK(model.reward_learner().example_count() == 1);
  CHECK(model.observation_count() == 1);
}

TEST_CASE("deterministic dynamics freeze to zero-one probabilities") {
  ProblemSpec env = make_linear(3);
  LearnedModel model(env, InductionConfig{7.88, 0.0});
  Rng rng(5);
  Environment sim(env);
  sim.reset(rng);
  std::vector<std::pair<State, ActionId>> visited;
  for (int t = 0; t < 500; ++t) {
    if (sim.at_terminal()) sim.reset(rng);
    State s = sim.state();
    ActionId a = uniform_int(rng, 3);
    double r = sim.step(a, rng);
    model.observe(s, a, sim.state(), r);
    visited.emplace_back(s, a);
  }
  ProblemSpec learned = model.to_spec();
  for (const auto& [s, a] : visited)
    for (VarId i = 0; i < 3; ++i) {
      double p = learned.cpds[a][i].evaluate(s)[1];
      CHECK((std::fabs(p) <= 1e-12 || std::fabs(p - 1.0) <= 1e-12));
    }
}

TEST_CASE("the planner loop stays at zero on a reward-free environment") {
  ProblemSpec env = make_linear(3);
  env.reward = DecisionTree<double>::leaf(0.0);
  SpitiAgent agent(env, InductionConfig{7.88, 0.0}, ExplorationConfig{0.1, 0.9, 0.99});
  Rng rng(7);
  Environment sim(env);
  sim.reset(rng);
  for (int t = 0; t < 50; ++t) {
    if (sim.at_terminal()) sim.reset(rng);
    State s = sim.state();
    ActionId a = agent.act(s, rng);
    double r = sim.step(a, rng);
    agent.observe(s, a, sim.state(), r, sim.at_terminal(), rng);
  }
  REQUIRE(agent.value_tree().is_leaf());
  CHECK(agent.value_tree().label() == 0.0);
  CHECK(agent.learn_calls() == 50);
  CHECK(agent.plan_calls() == 50);
}

TEST_CASE("dyna-q converges along the geometric recurrence") {
  ProblemSpec env = self_loop_reward_one();
  DynaQAgent agent(env, ExplorationConfig{0.0, 0.9, 0.99});
  Rng rng(11);
  Environment sim(env);
  sim.reset(rng);
  // One stored pair: each observation performs 1 direct + 2 planning
  // updates, so after t steps Q has seen 3t expected updates of
  // Q <- 1 + 0.9 Q from 0.
  int updates = 0;
  for (int t = 1; t <= 40; ++t) {
    State s = sim.state();
    ActionId a = agent.act(s, rng);
    double r = sim.step(a, rng);
    agent.observe(s, a, sim.state(), r, false, rng);
    updates = 3 * t;
    double expect = 10.0 * (1.0 - std::pow(0.9, updates));
    CHECK(agent.q_value(s, 0) == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(updates >= 88);
  CHECK(std::fabs(agent.q_value(State{0}, 0) - 10.0) < 1e-3);
  // 66 expected updates already put Q within one percent of the fixed point.
  CHECK(10.0 * std::pow(0.9, 66) < 1e-1);
}

TEST_CASE("unvisited state-action pairs keep the optimistic initialization") {
  ProblemSpec coffee = make_coffee_robot();
  DynaQAgent agent(coffee, ExplorationConfig{0.1, 0.9, 0.99});
  CHECK(agent.q_value(State{0, 0, 0, 0, 0, 0}, 2) == doctest::Approx(10.0));
  CHECK(agent.model_nodes() == 0);
}

TEST_CASE("dyna-q model growth is monotone and bounded by the transitions") {
  ProblemSpec coffee = make_coffee_robot();
  DynaQAgent agent(coffee, ExplorationConfig{1.0, 0.9, 0.99});
  Rng rng(13);
  Environment sim(coffee);
  sim.reset(rng);
  long long last = 0;
  for (int t = 0; t < 4000; ++t) {
    if (sim.at_terminal()) sim.reset(rng);
    State s = sim.state();
    ActionId a = agent.act(s, rng);
    double r = sim.step(a, rng);
    agent.observe(s, a, sim.state(), r, sim.at_terminal(), rng);
    CHECK(agent.model_nodes() >= last);
    last = agent.model_nodes();
  }
  CHECK(last <= 128);
}

TEST_CASE("agent trajectories are a pure function of the seed") {
  ProblemSpec coffee = make_coffee_robot();
  for (int pass = 0; pass < 2; ++pass) {
    auto run = [&](std::uint64_t seed) {
      SpitiAgent agent(coffee, InductionConfig{7.88, 0.0}, ExplorationConfig{0.1, 0.9, 0.99});
      Rng rng(seed);
      Environment sim(coffee);
      sim.reset(rng);
      std::vector<int> actions;
      for (int t = 0; t < 120; ++t) {
        if (sim.at_terminal()) sim.reset(rng);
        State s = sim.state();
        ActionId a = agent.act(s, rng);
        double r = sim.step(a, rng);
        agent.observe(s, a, sim.state(), r, sim.at_terminal(), rng);
        actions.push_back(a);
      }
      return actions;
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
  }
}

TEST_CASE("spiti node counts stabilize on a large stationary problem") {
  ProblemSpec env = make_linear(14);
  SpitiAgent agent(env, InductionConfig{7.88, 0.0}, ExplorationConfig{0.1, 0.9, 0.99});
  Rng rng(17);
  Environment sim(env);
  sim.reset(rng);
  long long lo = 0, hi = 0;
  for (int t = 1; t <= 4000; ++t) {
    if (sim.at_terminal()) sim.reset(rng);
    State s = sim.state();
    ActionId a = agent.act(s, rng);
    double r = sim.step(a, rng);
    agent.observe(s, a, sim.state(), r, sim.at_terminal(), rng);
    if (t >= 3000) {
      long long nodes = agent.model_nodes();
      lo = lo == 0 ? nodes : std::min(lo, nodes);
      hi = std::max(hi, nodes);
    }
  }
  CHECK(hi - lo < hi / 10);  // drift below ten percent over the last quarter
}
