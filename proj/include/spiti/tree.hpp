#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "spiti/types.hpp"

namespace spiti {

/// Tolerance for collapsing numeric leaves during simplification. Kept tight
/// so that distinct values still converging under value iteration are never
/// merged prematurely.
inline constexpr double kLeafTolerance = 1e-12;

inline bool label_equal(double a, double b) { return std::fabs(a - b) <= kLeafTolerance; }
inline bool label_equal(bool a, bool b) { return a == b; }
inline bool label_equal(int a, int b) { return a == b; }
inline bool label_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i] - b[i]) > kLeafTolerance) return false;
  return true;
}
template <typename L>
bool label_equal(const L& a, const L& b) {
  return a == b;
}

/// An immutable decision tree: internal nodes test one variable and carry one
/// child per domain value, leaves carry a label. No variable is tested twice
/// on any root-to-leaf path. Copies share structure and are cheap.
template <typename L>
class DecisionTree {
 public:
  DecisionTree() = default;

  static DecisionTree leaf(L label) {
    DecisionTree t;
    auto n = std::make_shared<Node>();
    n->is_leaf = true;
    n->label = std::move(label);
    t.node_ = std::move(n);
    return t;
  }

  static DecisionTree node(VarId test, std::vector<DecisionTree> children) {
    if (children.size() < 2) throw StructureError("decision node needs at least two children");
    for (const auto& c : children)
      if (!c.valid()) throw StructureError("decision node has an empty child");
    DecisionTree t;
    auto n = std::make_shared<Node>();
    n->is_leaf = false;
    n->test = test;
    n->children = std::move(children);
    t.node_ = std::move(n);
    return t;
  }

  bool valid() const { return node_ != nullptr; }
  bool is_leaf() const { return node_->is_leaf; }
  const L& label() const { return node_->label; }
  VarId test_var() const { return node_->test; }
  const std::vector<DecisionTree>& children() const { return node_->children; }
  int child_count() const { return static_cast<int>(node_->children.size()); }
  const DecisionTree& child(int value) const { return node_->children[value]; }
  bool same_node(const DecisionTree& o) const { return node_ == o.node_; }

  /// Label of the unique leaf whose path tests agree with `state`.
  const L& evaluate(std::span<const int> state) const {
    const Node* n = node_.get();
    while (!n->is_leaf) {
      if (n->test < 0 || static_cast<std::size_t>(n->test) >= state.size())
        throw StructureError("tree tests a variable outside the state vector");
      int v = state[n->test];
      if (v < 0 || static_cast<std::size_t>(v) >= n->children.size())
        throw StructureError("state value out of range for tested variable");
      n = n->children[v].node_.get();
    }
    return n->label;
  }

  std::size_t node_count() const {
    std::size_t c = 1;
    if (!node_->is_leaf)
      for (const auto& ch : node_->children) c += ch.node_count();
    return c;
  }

 private:
  struct Node {
    bool is_leaf = true;
    L label{};
    VarId test = -1;
    std::vector<DecisionTree> children;
  };
  std::shared_ptr<const Node> node_;
};

template <typename L>
bool trees_equal(const DecisionTree<L>& a, const DecisionTree<L>& b) {
  if (a.same_node(b)) return true;
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return label_equal(a.label(), b.label());
  if (a.test_var() != b.test_var() || a.child_count() != b.child_count()) return false;
  for (int k = 0; k < a.child_count(); ++k)
    if (!trees_equal(a.child(k), b.child(k))) return false;
  return true;
}

/// Collapse nodes whose children are identical; evaluation is unchanged.
template <typename L>
DecisionTree<L> simplify(const DecisionTree<L>& t) {
  if (t.is_leaf()) return t;
  std::vector<DecisionTree<L>> kids;
  kids.reserve(t.child_count());
  bool changed = false;
  for (int k = 0; k < t.child_count(); ++k) {
    kids.push_back(simplify(t.child(k)));
    changed = changed || !kids.back().same_node(t.child(k));
  }
  bool all_same = true;
  for (std::size_t k = 1; k < kids.size(); ++k)
    if (!trees_equal(kids[0], kids[k])) {
      all_same = false;
      break;
    }
  if (all_same) return kids[0];
  if (!changed) return t;
  return DecisionTree<L>::node(t.test_var(), std::move(kids));
}

/// Specialize a tree to var := value; tests on `var` disappear.
template <typename L>
DecisionTree<L> restrict(const DecisionTree<L>& t, VarId var, int value) {
  if (t.is_leaf()) return t;
  if (t.test_var() == var) return restrict(t.child(value), var, value);
  std::vector<DecisionTree<L>> kids;
  kids.reserve(t.child_count());
  bool changed = false;
  for (int k = 0; k < t.child_count(); ++k) {
    kids.push_back(restrict(t.child(k), var, value));
    changed = changed || !kids.back().same_node(t.child(k));
  }
  if (!changed) return t;
  bool all_same = true;
  for (std::size_t k = 1; k < kids.size(); ++k)
    if (!trees_equal(kids[0], kids[k])) {
      all_same = false;
      break;
    }
  if (all_same) return kids[0];
  return DecisionTree<L>::node(t.test_var(), std::move(kids));
}

template <typename L, typename F>
auto transform_leaves(const DecisionTree<L>& t, F&& f)
    -> DecisionTree<std::decay_t<std::invoke_result_t<F&, const L&>>> {
  using R = std::decay_t<std::invoke_result_t<F&, const L&>>;
  if (t.is_leaf()) return DecisionTree<R>::leaf(f(t.label()));
  std::vector<DecisionTree<R>> kids;
  kids.reserve(t.child_count());
  for (int k = 0; k < t.child_count(); ++k) kids.push_back(transform_leaves(t.child(k), f));
  return DecisionTree<R>::node(t.test_var(), std::move(kids));
}

template <typename L>
void collect_vars(const DecisionTree<L>& t, std::vector<char>& seen) {
  if (t.is_leaf()) return;
  if (static_cast<std::size_t>(t.test_var()) >= seen.size()) seen.resize(t.test_var() + 1, 0);
  seen[t.test_var()] = 1;
  for (int k = 0; k < t.child_count(); ++k) collect_vars(t.child(k), seen);
}

/// Sorted list of variables tested anywhere in the tree.
template <typename L>
std::vector<VarId> vars_tested(const DecisionTree<L>& t) {
  std::vector<char> seen;
  collect_vars(t, seen);
  std::vector<VarId> vars;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) vars.push_back(static_cast<VarId>(i));
  return vars;
}

template <typename L>
std::vector<L> leaf_labels(const DecisionTree<L>& t) {
  std::vector<L> out;
  std::function<void(const DecisionTree<L>&)> walk = [&](const DecisionTree<L>& n) {
    if (n.is_leaf()) {
      out.push_back(n.label());
      return;
    }
    for (int k = 0; k < n.child_count(); ++k) walk(n.child(k));
  };
  walk(t);
  return out;
}

/// One leaf of a tree viewed as a region of the state space: the partial
/// assignment along the path and the number of ground states it covers.
template <typename L>
struct LeafRegion {
  L label;
  std::vector<std::pair<VarId, int>> fixed;
  long long size = 1;
};

/// Leaf regions partition the state space; region sizes sum to the full count.
template <typename L>
std::vector<LeafRegion<L>> leaf_regions(const DecisionTree<L>& t, const DomainSpec& domain) {
  std::vector<LeafRegion<L>> out;
  std::vector<std::pair<VarId, int>> fixed;
  std::function<void(const DecisionTree<L>&)> walk = [&](const DecisionTree<L>& n) {
    if (n.is_leaf()) {
      long long size = 1;
      std::vector<char> on_path(domain.num_vars(), 0);
      for (const auto& [v, val] : fixed) on_path[v] = 1;
      for (int i = 0; i < domain.num_vars(); ++i)
        if (!on_path[i]) size *= domain.sizes[i];
      out.push_back({n.label(), fixed, size});
      return;
    }
    for (int k = 0; k < n.child_count(); ++k) {
      fixed.emplace_back(n.test_var(), k);
      walk(n.child(k));
      fixed.pop_back();
    }
  };
  walk(t);
  return out;
}

namespace detail {

template <typename L>
const DecisionTree<L>* resolve(const DecisionTree<L>* t, const std::vector<int>& ctx) {
  while (!t->is_leaf() && ctx[t->test_var()] >= 0) t = &t->child(ctx[t->test_var()]);
  return t;
}

template <typename L, typename R, typename F>
DecisionTree<R> merge_rec(std::vector<const DecisionTree<L>*>& cur, std::vector<int>& ctx,
                          F& comb) {
  bool all_leaves = true;
  VarId test = -1;
  int arity = 0;
  for (auto& c : cur) {
    c = resolve(c, ctx);
    if (!c->is_leaf() && all_leaves) {
      all_leaves = false;
      test = c->test_var();
      arity = c->child_count();
    }
  }
  if (all_leaves) {
    std::vector<L> labels;
    labels.reserve(cur.size());
    for (const auto* c : cur) labels.push_back(c->label());
    return DecisionTree<R>::leaf(comb(std::span<const L>(labels)));
  }
  std::vector<DecisionTree<R>> kids;
  kids.reserve(arity);
  for (int k = 0; k < arity; ++k) {
    ctx[test] = k;
    std::vector<const DecisionTree<L>*> next = cur;
    kids.push_back(merge_rec<L, R>(next, ctx, comb));
    ctx[test] = -1;
  }
  bool all_same = true;
  for (int k = 1; k < arity; ++k)
    if (!trees_equal(kids[0], kids[k])) {
      all_same = false;
      break;
    }
  if (all_same) return kids[0];
  return DecisionTree<R>::node(test, std::move(kids));
}

}  // namespace detail

/// Combine trees into a single tree whose value at every state is
/// `comb(evaluate(T_1, s), ..., evaluate(T_n, s))`. Implemented by recursive
/// descent grafting later trees into the leaves of earlier ones; the output
/// structure depends on argument order, only evaluation semantics are
/// guaranteed. Each variable is tested at most once per path.
template <typename L, typename F>
auto merge(std::span<const DecisionTree<L>> trees, F comb)
    -> DecisionTree<std::decay_t<std::invoke_result_t<F&, std::span<const L>>>> {
  using R = std::decay_t<std::invoke_result_t<F&, std::span<const L>>>;
  if (trees.empty()) throw StructureError("merge of an empty tree list");
  std::vector<char> seen;
  for (const auto& t : trees) collect_vars(t, seen);
  std::vector<int> ctx(seen.size(), -1);
  std::vector<const DecisionTree<L>*> cur;
  cur.reserve(trees.size());
  for (const auto& t : trees) cur.push_back(&t);
  return detail::merge_rec<L, R>(cur, ctx, comb);
}

template <typename L, typename F>
auto merge(const std::vector<DecisionTree<L>>& trees, F comb) {
  return merge(std::span<const DecisionTree<L>>(trees), std::move(comb));
}

/// Structural validation: child counts match domain sizes, variable ids are
/// in range, no variable repeats on a path. `sizes` may extend the domain
/// (e.g. with an action attribute).
template <typename L>
void validate_tree(const DecisionTree<L>& t, std::span<const int> sizes) {
  std::vector<char> on_path(sizes.size(), 0);
  std::function<void(const DecisionTree<L>&)> walk = [&](const DecisionTree<L>& n) {
    if (n.is_leaf()) return;
    VarId v = n.test_var();
    if (v < 0 || static_cast<std::size_t>(v) >= sizes.size())
      throw StructureError("tree tests unknown variable id " + std::to_string(v));
    if (on_path[v])
      throw StructureError("variable tested twice on one path: id " + std::to_string(v));
    if (n.child_count() != sizes[v])
      throw StructureError("child count does not match domain size for variable id " +
                           std::to_string(v));
    on_path[v] = 1;
    for (int k = 0; k < n.child_count(); ++k) walk(n.child(k));
    on_path[v] = 0;
  };
  walk(t);
}

}  // namespace spiti
