#pragma once

#include <functional>
#include <vector>

#include "spiti/tree.hpp"
#include "spiti/types.hpp"

namespace spiti::testing {

/// Calls fn(state) for every state of the domain.
inline void for_each_state(const DomainSpec& domain,
                           const std::function<void(const State&)>& fn) {
  const long long count = domain.state_count();
  for (long long idx = 0; idx < count; ++idx) fn(domain.index_state(idx));
}

/// Random tree over binary variables, testing any subset of 0..n-1.
template <typename LeafGen>
auto random_tree(Rng& rng, int n, double split_prob, LeafGen leaf)
    -> DecisionTree<decltype(leaf(rng))> {
  using L = decltype(leaf(rng));
  std::vector<int> avail(n);
  for (int i = 0; i < n; ++i) avail[i] = i;
  std::function<DecisionTree<L>(std::vector<int>)> build =
      [&](std::vector<int> vars) -> DecisionTree<L> {
    if (vars.empty() || uniform01(rng) > split_prob)
      return DecisionTree<L>::leaf(leaf(rng));
    int pick = uniform_int(rng, static_cast<int>(vars.size()));
    int v = vars[pick];
    vars.erase(vars.begin() + pick);
    std::vector<DecisionTree<L>> kids;
    kids.push_back(build(vars));
    kids.push_back(build(vars));
    return DecisionTree<L>::node(v, std::move(kids));
  };
  return build(avail);
}

inline DecisionTree<double> random_value_tree(Rng& rng, int n, double split_prob = 0.65) {
  return random_tree(rng, n, split_prob,
                     [](Rng& g) { return std::floor(uniform01(g) * 100.0) / 10.0; });
}

}  // namespace spiti::testing
