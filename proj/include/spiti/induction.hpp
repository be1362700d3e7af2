#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "spiti/stats.hpp"
#include "spiti/tree.hpp"
#include "spiti/types.hpp"

namespace spiti {

struct InductionConfig {
  /// Chi-square threshold gating test installation.
  double tau_chi2 = 7.88;
  /// How far the installed test's chi-square may fall below the best
  /// candidate's before the subtree is rebuilt from its stored examples.
  double restructure_margin = 0.0;
};

/// Inclusive gate: a split is installed iff chi2 >= tau.
inline bool split_decision(double chi2, const InductionConfig& cfg) {
  return chi2 >= cfg.tau_chi2;
}

/// Per-node sufficient statistics: the class distribution of the examples
/// reaching the node plus one contingency table per attribute.
class NodeStatistics {
 public:
  NodeStatistics() = default;
  NodeStatistics(const std::vector<int>* attr_sizes, int num_classes);

  void add(std::span<const int> attrs, int class_value);

  long long total() const { return total_; }
  const std::vector<long long>& class_counts() const { return class_counts_; }

  ContingencyTable table_for(int attr) const;
  double chi2_for(int attr) const;

  /// (attribute, chi2) maximizing the chi-square statistic among attributes
  /// not set in `banned`; ties break toward the lowest attribute id.
  /// Empty when every attribute is banned.
  std::optional<std::pair<int, double>> best_test(std::uint64_t banned) const;

  /// Maximum-likelihood class distribution padded to `num_classes`;
  /// uniform when the node holds no examples.
  Distribution distribution(int num_classes) const;

 private:
  const std::vector<int>* attr_sizes_ = nullptr;
  long long total_ = 0;
  std::vector<long long> class_counts_;
  // tables_[attr][attr_value][class]
  std::vector<std::vector<std::vector<long long>>> tables_;
};

/// Incremental decision-tree learner over discrete attributes and classes.
/// Examples stream in one at a time; a test is installed at a leaf when the
/// best candidate attribute's chi-square clears the threshold, and internal
/// nodes whose installed test falls behind the best candidate are rebuilt
/// from their stored examples (which makes the result match a batch build of
/// the same multiset).
class TreeLearner {
 public:
  /// num_classes = 0 lets the class arity grow as new class ids appear.
  TreeLearner(std::vector<int> attr_sizes, int num_classes, InductionConfig cfg);
  TreeLearner(const TreeLearner&) = delete;
  TreeLearner& operator=(const TreeLearner&) = delete;
  TreeLearner(TreeLearner&&) = default;
  TreeLearner& operator=(TreeLearner&&) = default;

  void add_example(std::span<const int> attrs, int class_value);

  /// Distribution of the leaf reached by `attrs`.
  Distribution predict_distribution(std::span<const int> attrs) const;

  /// Read-only snapshot: a decision tree whose leaves carry the current leaf
  /// distributions. Later add_example calls do not affect it.
  DecisionTree<Distribution> freeze() const;

  long long example_count() const { return examples_added_; }
  std::size_t node_count() const;
  std::vector<VarId> tested_vars() const;
  int num_classes() const { return num_classes_; }
  const InductionConfig& config() const { return cfg_; }
  const std::vector<int>& attr_sizes() const { return attr_sizes_; }

  /// True iff every installed test cleared the threshold when installed.
  bool installed_tests_sound() const;

  struct Node {
    NodeStatistics stats;
    std::uint64_t tested_above = 0;
    int test = -1;  // -1 marks a leaf
    double installed_chi2 = 0.0;
    std::vector<std::unique_ptr<Node>> children;
    std::vector<std::pair<std::vector<int>, int>> examples;  // leaves only
    bool is_leaf() const { return test < 0; }
  };
  const Node& root() const { return *root_; }

 private:
  void attempt_split(Node& leaf);
  void rebuild(Node& node);
  void collect_examples(Node& node, std::vector<std::pair<std::vector<int>, int>>& out);
  std::unique_ptr<Node> make_leaf(std::uint64_t tested_above) const;

  std::vector<int> attr_sizes_;
  InductionConfig cfg_;
  int num_classes_;
  bool dynamic_classes_;
  long long examples_added_ = 0;
  std::unique_ptr<Node> root_;
};

/// Tree learner over numeric classes (rewards): classes are the distinct
/// values seen so far, predictions are empirical means.
class RewardLearner {
 public:
  RewardLearner(std::vector<int> attr_sizes, InductionConfig cfg);

  void add_example(std::span<const int> attrs, double value);

  /// Expected value at the reached leaf; 0.0 when the leaf is empty.
  double predict_value(std::span<const int> attrs) const;

  /// Snapshot with expected-value leaves.
  DecisionTree<double> freeze() const;

  long long example_count() const { return learner_.example_count(); }
  std::size_t node_count() const { return learner_.node_count(); }
  std::vector<VarId> tested_vars() const { return learner_.tested_vars(); }
  const TreeLearner& learner() const { return learner_; }

 private:
  int class_of(double value);

  TreeLearner learner_;
  std::vector<double> values_;
};

}  // namespace spiti
