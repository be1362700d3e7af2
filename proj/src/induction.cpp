#include "spiti/induction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace spiti {

NodeStatistics::NodeStatistics(const std::vector<int>* attr_sizes, int num_classes)
    : attr_sizes_(attr_sizes), class_counts_(num_classes, 0) {
  tables_.resize(attr_sizes->size());
  for (std::size_t a = 0; a < attr_sizes->size(); ++a)
    tables_[a].assign((*attr_sizes)[a], std::vector<long long>(num_classes, 0));
}

void NodeStatistics::add(std::span<const int> attrs, int class_value) {
  if (static_cast<std::size_t>(class_value) >= class_counts_.size()) {
    class_counts_.resize(class_value + 1, 0);
    for (auto& table : tables_)
      for (auto& row : table) row.resize(class_value + 1, 0);
  }
  ++total_;
  ++class_counts_[class_value];
  for (std::size_t a = 0; a < tables_.size(); ++a) ++tables_[a][attrs[a]][class_value];
}

ContingencyTable NodeStatistics::table_for(int attr) const {
  ContingencyTable t;
  t.counts = tables_[attr];
  return t;
}

double NodeStatistics::chi2_for(int attr) const {
  if (total_ == 0) return 0.0;
  // Inline Pearson statistic; row/col sums over the attribute's table.
  const auto& table = tables_[attr];
  const int r = static_cast<int>(table.size());
  const int c = static_cast<int>(class_counts_.size());
  double stat = 0.0;
  for (int i = 0; i < r; ++i) {
    long long row_total = 0;
    for (int j = 0; j < c; ++j) row_total += table[i][j];
    if (row_total == 0) continue;
    for (int j = 0; j < c; ++j) {
      if (class_counts_[j] == 0) continue;
      double expected = static_cast<double>(row_total) *
                        static_cast<double>(class_counts_[j]) / static_cast<double>(total_);
      double d = static_cast<double>(table[i][j]) - expected;
      stat += d * d / expected;
    }
  }
  return stat;
}

std::optional<std::pair<int, double>> NodeStatistics::best_test(std::uint64_t banned) const {
  std::optional<std::pair<int, double>> best;
  for (std::size_t a = 0; a < tables_.size(); ++a) {
    if (banned & (std::uint64_t{1} << a)) continue;
    double chi2 = chi2_for(static_cast<int>(a));
    if (!best || chi2 > best->second) best = {static_cast<int>(a), chi2};
  }
  return best;
}

Distribution NodeStatistics::distribution(int num_classes) const {
  Distribution d(num_classes, 0.0);
  if (total_ == 0) {
    if (num_classes > 0)
      std::fill(d.begin(), d.end(), 1.0 / static_cast<double>(num_classes));
    return d;
  }
  for (int j = 0; j < num_classes && static_cast<std::size_t>(j) < class_counts_.size(); ++j)
    d[j] = static_cast<double>(class_counts_[j]) / static_cast<double>(total_);
  return d;
}

TreeLearner::TreeLearner(std::vector<int> attr_sizes, int num_classes, InductionConfig cfg)
    : attr_sizes_(std::move(attr_sizes)),
      cfg_(cfg),
      num_classes_(num_classes),
      dynamic_classes_(num_classes == 0) {
  if (attr_sizes_.size() > 64) throw Error("TreeLearner supports at most 64 attributes");
  root_ = make_leaf(0);
}

std::unique_ptr<TreeLearner::Node> TreeLearner::make_leaf(std::uint64_t tested_above) const {
  auto n = std::make_unique<Node>();
  n->stats = NodeStatistics(&attr_sizes_, num_classes_);
  n->tested_above = tested_above;
  return n;
}

void TreeLearner::add_example(std::span<const int> attrs, int class_value) {
  if (attrs.size() != attr_sizes_.size()) throw Error("attribute vector length mismatch");
  for (std::size_t a = 0; a < attrs.size(); ++a)
    if (attrs[a] < 0 || attrs[a] >= attr_sizes_[a])
      throw Error("attribute value out of domain");
  if (class_value < 0) throw Error("negative class value");
  if (class_value >= num_classes_) {
    if (!dynamic_classes_) throw Error("class value out of domain");
    num_classes_ = class_value + 1;
  }
  ++examples_added_;

  // Route to the leaf, updating statistics at every node on the path.
  std::vector<Node*> path;
  Node* n = root_.get();
  for (;;) {
    n->stats.add(attrs, class_value);
    path.push_back(n);
    if (n->is_leaf()) break;
    n = n->children[attrs[n->test]].get();
  }
  n->examples.emplace_back(std::vector<int>(attrs.begin(), attrs.end()), class_value);

  // Best-test maintenance along the path, topmost violation first. A rebuild
  // re-runs the batch construction below the node, so nothing deeper needs a
  // second look.
  for (Node* m : path) {
    if (m->is_leaf()) break;
    auto best = m->stats.best_test(m->tested_above);
    if (!split_decision(best->second, cfg_)) {
      rebuild(*m);
      return;
    }
    if (best->first != m->test &&
        m->stats.chi2_for(m->test) < best->second - cfg_.restructure_margin) {
      rebuild(*m);
      return;
    }
  }
  attempt_split(*path.back());
}

void TreeLearner::attempt_split(Node& leaf) {
  auto best = leaf.stats.best_test(leaf.tested_above);
  if (!best || !split_decision(best->second, cfg_)) return;
  int v = best->first;
  leaf.test = v;
  leaf.installed_chi2 = best->second;
  leaf.children.clear();
  for (int k = 0; k < attr_sizes_[v]; ++k)
    leaf.children.push_back(make_leaf(leaf.tested_above | (std::uint64_t{1} << v)));
  for (auto& ex : leaf.examples) {
    Node& c = *leaf.children[ex.first[v]];
    c.stats.add(ex.first, ex.second);
    c.examples.push_back(std::move(ex));
  }
  leaf.examples.clear();
  leaf.examples.shrink_to_fit();
  for (auto& c : leaf.children) attempt_split(*c);
}

void TreeLearner::collect_examples(Node& node,
                                   std::vector<std::pair<std::vector<int>, int>>& out) {
  if (node.is_leaf()) {
    for (auto& ex : node.examples) out.push_back(std::move(ex));
    node.examples.clear();
    return;
  }
  for (auto& c : node.children) collect_examples(*c, out);
}

void TreeLearner::rebuild(Node& node) {
  std::vector<std::pair<std::vector<int>, int>> buf;
  collect_examples(node, buf);
  std::uint64_t tested_above = node.tested_above;
  node.test = -1;
  node.installed_chi2 = 0.0;
  node.children.clear();
  node.stats = NodeStatistics(&attr_sizes_, num_classes_);
  node.examples.clear();
  for (auto& ex : buf) {
    node.stats.add(ex.first, ex.second);
    node.examples.push_back(std::move(ex));
  }
  node.tested_above = tested_above;
  attempt_split(node);
}

Distribution TreeLearner::predict_distribution(std::span<const int> attrs) const {
  const Node* n = root_.get();
  while (!n->is_leaf()) n = n->children[attrs[n->test]].get();
  return n->stats.distribution(num_classes_);
}

namespace {

DecisionTree<Distribution> freeze_node(const TreeLearner::Node& n, int num_classes) {
  if (n.is_leaf()) return DecisionTree<Distribution>::leaf(n.stats.distribution(num_classes));
  std::vector<DecisionTree<Distribution>> kids;
  kids.reserve(n.children.size());
  for (const auto& c : n.children) kids.push_back(freeze_node(*c, num_classes));
  return DecisionTree<Distribution>::node(n.test, std::move(kids));
}

std::size_t count_nodes(const TreeLearner::Node& n) {
  std::size_t c = 1;
  for (const auto& ch : n.children) c += count_nodes(*ch);
  return c;
}

}  // namespace

DecisionTree<Distribution> TreeLearner::freeze() const { return freeze_node(*root_, num_classes_); }

std::size_t TreeLearner::node_count() const { return count_nodes(*root_); }

std::vector<VarId> TreeLearner::tested_vars() const {
  std::vector<char> seen(attr_sizes_.size(), 0);
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.is_leaf()) return;
    seen[n.test] = 1;
    for (const auto& c : n.children) walk(*c);
  };
  walk(*root_);
  std::vector<VarId> vars;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) vars.push_back(static_cast<VarId>(i));
  return vars;
}

bool TreeLearner::installed_tests_sound() const {
  bool ok = true;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.is_leaf()) return;
    if (n.installed_chi2 < cfg_.tau_chi2) ok = false;
    for (const auto& c : n.children) walk(*c);
  };
  walk(*root_);
  return ok;
}

RewardLearner::RewardLearner(std::vector<int> attr_sizes, InductionConfig cfg)
    : learner_(std::move(attr_sizes), 0, cfg) {}

int RewardLearner::class_of(double value) {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] == value) return static_cast<int>(i);
  values_.push_back(value);
  return static_cast<int>(values_.size()) - 1;
}

void RewardLearner::add_example(std::span<const int> attrs, double value) {
  learner_.add_example(attrs, class_of(value));
}

namespace {

double leaf_mean(const TreeLearner::Node& n, const std::vector<double>& values) {
  if (n.stats.total() == 0) return 0.0;  // empty leaf predicts zero reward
  double m = 0.0;
  const auto& counts = n.stats.class_counts();
  for (std::size_t i = 0; i < counts.size() && i < values.size(); ++i)
    m += static_cast<double>(counts[i]) * values[i];
  return m / static_cast<double>(n.stats.total());
}

DecisionTree<double> freeze_reward_node(const TreeLearner::Node& n,
                                        const std::vector<double>& values) {
  if (n.is_leaf()) return DecisionTree<double>::leaf(leaf_mean(n, values));
  std::vector<DecisionTree<double>> kids;
  kids.reserve(n.children.size());
  for (const auto& c : n.children) kids.push_back(freeze_reward_node(*c, values));
  return DecisionTree<double>::node(n.test, std::move(kids));
}

}  // namespace

double RewardLearner::predict_value(std::span<const int> attrs) const {
  const TreeLearner::Node* n = &learner_.root();
  while (!n->is_leaf()) n = n->children[attrs[n->test]].get();
  return leaf_mean(*n, values_);
}

DecisionTree<double> RewardLearner::freeze() const {
  return freeze_reward_node(learner_.root(), values_);
}

}  // namespace spiti
