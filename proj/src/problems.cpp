#include "spiti/problems.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace spiti {

namespace {

using njson = nlohmann::json;
using DistTree = DecisionTree<Distribution>;

Distribution delta(int value, int size = 2) {
  Distribution d(size, 0.0);
  d[value] = 1.0;
  return d;
}

DistTree persist(VarId v, int size = 2) {
  std::vector<DistTree> kids;
  for (int k = 0; k < size; ++k) kids.push_back(DistTree::leaf(delta(k, size)));
  return DistTree::node(v, std::move(kids));
}

/// Condition chain: tests `vars` in order; if all take value 1 the tree is
/// `then_tree`, any 0 branch falls to `else_of(j)` where j is the chain
/// position at which the test failed.
template <typename L>
DecisionTree<L> all_true_chain(const std::vector<VarId>& vars, DecisionTree<L> then_tree,
                               const std::function<DecisionTree<L>(std::size_t)>& else_of) {
  DecisionTree<L> t = std::move(then_tree);
  for (std::size_t j = vars.size(); j-- > 0;)
    t = DecisionTree<L>::node(vars[j], {else_of(j), std::move(t)});
  return t;
}

template <typename L>
DecisionTree<L> all_true_chain(const std::vector<VarId>& vars, DecisionTree<L> then_tree,
                               DecisionTree<L> else_tree) {
  return all_true_chain<L>(vars, std::move(then_tree),
                           [&](std::size_t) { return else_tree; });
}

// Effect of setting variable `target` to `effect_value` gated on variables
// 0..k-1 all being true; no effect otherwise. Handles the case where the
// target itself sits on the gating chain (its persisted value is then known
// from the path).
DistTree gated_set(int k, VarId target, int effect_value) {
  std::function<DistTree(int)> build = [&](int j) -> DistTree {
    if (j == k) return DistTree::leaf(delta(effect_value));
    if (j == target)
      return DistTree::node(j, {DistTree::leaf(delta(0)), build(j + 1)});
    // On a failed gate the target persists; its value is already known when
    // the target sits higher up the chain.
    DistTree fallback = target < j ? DistTree::leaf(delta(1)) : persist(target);
    return DistTree::node(j, {std::move(fallback), build(j + 1)});
  };
  return build(0);
}

ProblemSpec base_linear(int n, const std::string& name) {
  if (n < 2) throw Error(name + " generator requires n >= 2");
  ProblemSpec spec;
  spec.name = name;
  spec.domain = DomainSpec::binary(n);
  for (int k = 0; k < n; ++k) spec.actions.push_back("a" + std::to_string(k + 1));
  spec.cpds.assign(n, {});
  // Action k sets variable k and resets everything after it, gated on the
  // prefix holding. Progress is therefore strictly ordered and the optimal
  // value depends only on the prefix length, which keeps the value tree
  // linear in n.
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (i == k)
        spec.cpds[k].push_back(gated_set(k, k, 1));
      else if (i > k)
        spec.cpds[k].push_back(gated_set(k, i, 0));
      else
        spec.cpds[k].push_back(persist(i));
    }
  }
  spec.reward = DecisionTree<double>::node(
      n - 1, {DecisionTree<double>::leaf(0.0), DecisionTree<double>::leaf(1.0)});
  spec.terminal = DecisionTree<bool>::node(
      n - 1, {DecisionTree<bool>::leaf(false), DecisionTree<bool>::leaf(true)});
  spec.initial_rule = DecisionTree<bool>::node(
      n - 1, {DecisionTree<bool>::leaf(true), DecisionTree<bool>::leaf(false)});
  spec.discount = 0.9;
  spec.r_max = 1.0;
  return spec;
}

}  // namespace

ProblemSpec make_linear(int n) { return base_linear(n, "linear" + std::to_string(n)); }

ProblemSpec make_expon(int n) {
  ProblemSpec spec = base_linear(n, "expon" + std::to_string(n));
  // Counter semantics: action k clears every earlier variable instead of the
  // later ones, which persist.
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < k; ++i) spec.cpds[k][i] = gated_set(k, i, 0);
    for (int i = k + 1; i < n; ++i) spec.cpds[k][i] = persist(i);
  }
  std::vector<VarId> all_vars(n);
  for (int i = 0; i < n; ++i) all_vars[i] = i;
  spec.reward = all_true_chain<double>(all_vars, DecisionTree<double>::leaf(1.0),
                                       DecisionTree<double>::leaf(0.0));
  spec.terminal = all_true_chain<bool>(all_vars, DecisionTree<bool>::leaf(true),
                                       DecisionTree<bool>::leaf(false));
  spec.initial_rule = all_true_chain<bool>(all_vars, DecisionTree<bool>::leaf(false),
                                           DecisionTree<bool>::leaf(true));
  return spec;
}

ProblemSpec make_noisy(int n, double theta) {
  if (!(theta > 0.0 && theta < 0.5))
    throw Error("noisy generator requires 0 < theta < 0.5");
  ProblemSpec spec = base_linear(n, "noisy" + std::to_string(n));
  for (auto& row : spec.cpds)
    for (auto& tree : row)
      tree = transform_leaves(tree, [theta](const Distribution& d) {
        return Distribution{d[0] * (1.0 - theta) + d[1] * theta,
                            d[1] * (1.0 - theta) + d[0] * theta};
      });
  return spec;
}

namespace {

enum CoffeeVar { kHuc = 0, kHrc, kWet, kRaining, kUmbrella, kOffice };

DistTree bern(double p_true) { return DistTree::leaf({1.0 - p_true, p_true}); }

}  // namespace

ProblemSpec make_coffee_robot() {
  ProblemSpec spec;
  spec.name = "coffee_robot";
  spec.domain.names = {"huc", "hrc", "wet", "raining", "umbrella", "office"};
  spec.domain.sizes.assign(6, 2);
  spec.actions = {"go", "buyc", "delc", "getu"};
  spec.cpds.assign(4, {});
  for (int a = 0; a < 4; ++a)
    for (int i = 0; i < 6; ++i) spec.cpds[a].push_back(persist(i));

  // go: the robot moves between the office and the cafe; moving in the rain
  // without an umbrella soaks it.
  spec.cpds[0][kOffice] = DistTree::node(kOffice, {bern(1.0), bern(0.0)});
  spec.cpds[0][kWet] = DistTree::node(
      kWet, {DistTree::node(kRaining,
                            {bern(0.0), DistTree::node(kUmbrella, {bern(0.9), bern(0.0)})}),
             bern(1.0)});
  // buyc: buying works at the cafe.
  spec.cpds[1][kHrc] =
      DistTree::node(kHrc, {DistTree::node(kOffice, {bern(0.9), bern(0.0)}), bern(1.0)});
  // delc: handing the coffee over works at the office while holding one; the
  // robot usually loses the cup either way.
  spec.cpds[2][kHuc] = DistTree::node(
      kHuc,
      {DistTree::node(kOffice, {bern(0.0), DistTree::node(kHrc, {bern(0.0), bern(0.8)})}),
       bern(1.0)});
  spec.cpds[2][kHrc] = DistTree::node(
      kHrc, {bern(0.0), DistTree::node(kOffice, {bern(1.0), bern(0.1)})});
  // getu: the umbrella lives at the office.
  spec.cpds[3][kUmbrella] = DistTree::node(
      kUmbrella, {DistTree::node(kOffice, {bern(0.0), bern(0.9)}), bern(1.0)});

  using RT = DecisionTree<double>;
  spec.reward = RT::node(kHuc, {RT::node(kWet, {RT::leaf(0.1), RT::leaf(0.0)}),
                                RT::node(kWet, {RT::leaf(1.0), RT::leaf(0.9)})});
  spec.terminal =
      DecisionTree<bool>::node(kHuc, {DecisionTree<bool>::leaf(false), DecisionTree<bool>::leaf(true)});
  spec.discount = 0.9;
  spec.r_max = 1.0;
  return spec;
}

namespace {

enum ProcessVar {
  kDemandHi = 0,
  kRushOrder,
  kSuppliedA,
  kSuppliedB,
  kShapedA,
  kShapedB,
  kDrilledA,
  kDrilledB,
  kSmoothA,
  kSmoothB,
  kPaintedA,
  kPaintedB,
  kQualityA,
  kQualityB,
  kBolted,
  kConnected,
  kShipped
};

// If `var` is false, it becomes true with probability p; once true it stays.
DistTree latch(VarId var, double p) {
  return DistTree::node(var, {bern(p), bern(1.0)});
}

// `inner` applies when `cond` is true; otherwise `var` persists.
DistTree guarded(VarId cond, VarId var, DistTree inner) {
  return DistTree::node(cond, {persist(var), std::move(inner)});
}

}  // namespace

ProblemSpec make_process_planning() {
  ProblemSpec spec;
  spec.name = "process_planning";
  spec.domain.names = {"demand_hi", "rush_order", "supplied_a", "supplied_b", "shaped_a",
                       "shaped_b",  "drilled_a",  "drilled_b",  "smooth_a",   "smooth_b",
                       "painted_a", "painted_b",  "quality_a",  "quality_b",  "bolted",
                       "connected", "shipped"};
  spec.domain.sizes.assign(17, 2);
  spec.actions = {"order_a",       "order_b",       "shape_a",  "shape_b", "drill_a",
                  "drill_b",       "polish_a",      "polish_b", "hand_paint_a",
                  "hand_paint_b",  "spray_paint_a", "spray_paint_b", "bolt", "ship"};
  const int num_actions = static_cast<int>(spec.actions.size());
  spec.cpds.assign(num_actions, {});
  for (int a = 0; a < num_actions; ++a)
    for (int i = 0; i < 17; ++i) spec.cpds[a].push_back(persist(i));

  auto act = [&](const std::string& name) {
    for (int a = 0; a < num_actions; ++a)
      if (spec.actions[a] == name) return a;
    throw Error("unknown action " + name);
  };

  spec.cpds[act("order_a")][kSuppliedA] = latch(kSuppliedA, 0.9);
  spec.cpds[act("order_b")][kSuppliedB] = latch(kSuppliedB, 0.85);
  // Shaping needs raw material and leaves the surface rough.
  spec.cpds[act("shape_a")][kShapedA] = guarded(kSuppliedA, kShapedA, latch(kShapedA, 0.95));
  spec.cpds[act("shape_a")][kSmoothA] = guarded(kSuppliedA, kSmoothA, bern(0.0));
  spec.cpds[act("shape_b")][kShapedB] = guarded(kSuppliedB, kShapedB, latch(kShapedB, 0.9));
  spec.cpds[act("shape_b")][kSmoothB] = guarded(kSuppliedB, kSmoothB, bern(0.0));
  spec.cpds[act("drill_a")][kDrilledA] = guarded(kShapedA, kDrilledA, latch(kDrilledA, 0.9));
  spec.cpds[act("drill_b")][kDrilledB] = guarded(kShapedB, kDrilledB, latch(kDrilledB, 0.9));
  spec.cpds[act("polish_a")][kSmoothA] = guarded(kShapedA, kSmoothA, latch(kSmoothA, 0.8));
  spec.cpds[act("polish_b")][kSmoothB] = guarded(kShapedB, kSmoothB, latch(kSmoothB, 0.8));
  // Hand painting is careful: high quality on a smooth surface, coin-flip
  // quality otherwise. Spray painting is fast but low quality.
  spec.cpds[act("hand_paint_a")][kPaintedA] =
      guarded(kShapedA, kPaintedA, latch(kPaintedA, 0.95));
  spec.cpds[act("hand_paint_a")][kQualityA] = guarded(
      kShapedA, kQualityA, DistTree::node(kSmoothA, {bern(0.5), bern(0.9)}));
  spec.cpds[act("hand_paint_b")][kPaintedB] =
      guarded(kShapedB, kPaintedB, latch(kPaintedB, 0.95));
  spec.cpds[act("hand_paint_b")][kQualityB] = guarded(
      kShapedB, kQualityB, DistTree::node(kSmoothB, {bern(0.5), bern(0.9)}));
  spec.cpds[act("spray_paint_a")][kPaintedA] =
      guarded(kShapedA, kPaintedA, latch(kPaintedA, 0.9));
  spec.cpds[act("spray_paint_a")][kQualityA] = guarded(kShapedA, kQualityA, bern(0.1));
  spec.cpds[act("spray_paint_b")][kPaintedB] =
      guarded(kShapedB, kPaintedB, latch(kPaintedB, 0.9));
  spec.cpds[act("spray_paint_b")][kQualityB] = guarded(kShapedB, kQualityB, bern(0.1));
  // Bolting joins the two drilled components.
  spec.cpds[act("bolt")][kBolted] =
      guarded(kDrilledA, kBolted, guarded(kDrilledB, kBolted, latch(kBolted, 0.9)));
  spec.cpds[act("bolt")][kConnected] =
      guarded(kDrilledA, kConnected, guarded(kDrilledB, kConnected, latch(kConnected, 0.85)));
  // Shipping needs a connected, fully painted assembly.
  spec.cpds[act("ship")][kShipped] = guarded(
      kConnected, kShipped,
      guarded(kPaintedA, kShipped, guarded(kPaintedB, kShipped, latch(kShipped, 0.95))));

  using RT = DecisionTree<double>;
  RT high_demand = RT::node(
      kQualityA, {RT::leaf(2.0), RT::node(kQualityB, {RT::leaf(2.0), RT::leaf(10.0)})});
  RT low_demand = RT::node(kRushOrder, {RT::leaf(6.0), RT::leaf(8.0)});
  spec.reward = RT::node(
      kShipped,
      {RT::leaf(0.0), RT::node(kDemandHi, {std::move(low_demand), std::move(high_demand)})});
  spec.terminal = DecisionTree<bool>::node(
      kShipped, {DecisionTree<bool>::leaf(false), DecisionTree<bool>::leaf(true)});
  spec.initial_rule = DecisionTree<bool>::node(
      kShipped, {DecisionTree<bool>::leaf(true), DecisionTree<bool>::leaf(false)});
  spec.discount = 0.9;
  spec.r_max = 10.0;
  return spec;
}

namespace {

constexpr int kSchemaVersion = 1;

template <typename L>
njson tree_to_json(const DecisionTree<L>& t, const std::vector<std::string>& names,
                   const std::function<njson(const L&)>& leaf) {
  if (t.is_leaf()) return njson{{"leaf", leaf(t.label())}};
  njson children = njson::array();
  for (int k = 0; k < t.child_count(); ++k)
    children.push_back(tree_to_json(t.child(k), names, leaf));
  return njson{{"test", names.at(t.test_var())}, {"children", std::move(children)}};
}

template <typename L>
DecisionTree<L> tree_from_json(const njson& j, const std::vector<std::string>& names,
                               const std::vector<int>& sizes,
                               const std::function<L(const njson&)>& leaf,
                               const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": tree node must be an object");
  if (j.contains("leaf")) return DecisionTree<L>::leaf(leaf(j.at("leaf")));
  if (!j.contains("test") || !j.contains("children"))
    throw ParseError(where + ": tree node needs either a leaf or test/children");
  const std::string name = j.at("test").get<std::string>();
  int var = -1;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) var = static_cast<int>(i);
  if (var < 0) throw ParseError(where + ": unknown test variable '" + name + "'");
  const njson& kids = j.at("children");
  if (!kids.is_array() || static_cast<int>(kids.size()) != sizes[var])
    throw ParseError(where + ": '" + name + "' needs " + std::to_string(sizes[var]) +
                     " children");
  std::vector<DecisionTree<L>> children;
  children.reserve(kids.size());
  for (const auto& kid : kids)
    children.push_back(tree_from_json(kid, names, sizes, leaf, where));
  return DecisionTree<L>::node(var, std::move(children));
}

njson dist_leaf_to_json(const Distribution& d) { return njson(d); }

Distribution dist_leaf_from_json(const njson& j, int arity, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != arity)
    throw ParseError(where + ": distribution leaf needs " + std::to_string(arity) + " entries");
  Distribution d;
  for (const auto& v : j) d.push_back(v.get<double>());
  return d;
}

std::vector<std::string> value_labels(int size) {
  if (size == 2) return {"false", "true"};
  std::vector<std::string> out;
  for (int i = 0; i < size; ++i) out.push_back("v" + std::to_string(i));
  return out;
}

}  // namespace

std::string problem_to_text(const ProblemSpec& spec) {
  njson j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "problem";
  j["name"] = spec.name;
  j["discount"] = spec.discount;
  if (spec.r_max) j["r_max"] = *spec.r_max;
  njson vars = njson::array();
  for (int i = 0; i < spec.num_vars(); ++i)
    vars.push_back(njson{{"name", spec.domain.names[i]},
                         {"values", value_labels(spec.domain.sizes[i])}});
  j["variables"] = std::move(vars);
  j["actions"] = spec.actions;

  njson transitions;
  for (ActionId a = 0; a < spec.num_actions(); ++a) {
    njson per_var;
    for (VarId i = 0; i < spec.num_vars(); ++i)
      per_var[spec.domain.names[i]] =
          tree_to_json<Distribution>(spec.cpds[a][i], spec.domain.names, dist_leaf_to_json);
    transitions[spec.actions[a]] = std::move(per_var);
  }
  j["transitions"] = std::move(transitions);

  std::vector<std::string> reward_names = spec.domain.names;
  reward_names.push_back("action");
  j["reward"] = tree_to_json<double>(spec.reward, reward_names,
                                     [](const double& v) { return njson(v); });
  j["terminal"] = tree_to_json<bool>(spec.terminal, spec.domain.names,
                                     [](const bool& v) { return njson(v); });
  if (spec.initial_rule)
    j["initial"] = tree_to_json<bool>(*spec.initial_rule, spec.domain.names,
                                      [](const bool& v) { return njson(v); });
  return j.dump(2) + "\n";
}

void save_problem(const ProblemSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << problem_to_text(spec);
}

ProblemSpec parse_problem_text(const std::string& text) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const njson::parse_error& e) {
    throw ParseError(std::string("problem file: ") + e.what());
  }
  try {
    if (!j.contains("schema_version"))
      throw ParseError("problem file: missing schema_version");
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw ParseError("problem file: unsupported schema_version");

    ProblemSpec spec;
    spec.name = j.value("name", "unnamed");
    spec.discount = j.at("discount").get<double>();
    if (j.contains("r_max")) spec.r_max = j.at("r_max").get<double>();
    for (const auto& v : j.at("variables")) {
      spec.domain.names.push_back(v.at("name").get<std::string>());
      spec.domain.sizes.push_back(static_cast<int>(v.at("values").size()));
    }
    for (const auto& a : j.at("actions")) spec.actions.push_back(a.get<std::string>());

    const auto& transitions = j.at("transitions");
    for (ActionId a = 0; a < spec.num_actions(); ++a) {
      if (!transitions.contains(spec.actions[a]))
        throw ParseError("problem file: no transitions for action '" + spec.actions[a] + "'");
      const auto& per_var = transitions.at(spec.actions[a]);
      std::vector<DecisionTree<Distribution>> row;
      for (VarId i = 0; i < spec.num_vars(); ++i) {
        const std::string& var = spec.domain.names[i];
        if (!per_var.contains(var))
          throw ParseError("problem file: action '" + spec.actions[a] +
                           "' has no CPD for variable '" + var + "'");
        const std::string where = "CPD(" + spec.actions[a] + ", " + var + ")";
        const int arity = spec.domain.sizes[i];
        row.push_back(tree_from_json<Distribution>(
            per_var.at(var), spec.domain.names, spec.domain.sizes,
            [&](const njson& leaf) { return dist_leaf_from_json(leaf, arity, where); }, where));
      }
      spec.cpds.push_back(std::move(row));
    }

    std::vector<std::string> reward_names = spec.domain.names;
    reward_names.push_back("action");
    std::vector<int> reward_sizes = spec.domain.sizes;
    reward_sizes.push_back(spec.num_actions());
    spec.reward = tree_from_json<double>(
        j.at("reward"), reward_names, reward_sizes,
        [](const njson& leaf) { return leaf.get<double>(); }, "reward tree");
    spec.terminal = tree_from_json<bool>(
        j.at("terminal"), spec.domain.names, spec.domain.sizes,
        [](const njson& leaf) { return leaf.get<bool>(); }, "terminal tree");
    if (j.contains("initial"))
      spec.initial_rule = tree_from_json<bool>(
          j.at("initial"), spec.domain.names, spec.domain.sizes,
          [](const njson& leaf) { return leaf.get<bool>(); }, "initial tree");

    validate_problem(spec);
    return spec;
  } catch (const njson::exception& e) {
    throw ParseError(std::string("problem file: ") + e.what());
  }
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem_text(buf.str());
}

ProblemSpec resolve_problem(const std::string& arg) {
  if (arg.rfind("builtin:", 0) != 0) return load_problem(arg);
  std::vector<std::string> parts;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  const std::string& kind = parts.size() > 1 ? parts[1] : "";
  auto int_arg = [&](std::size_t idx) {
    if (parts.size() <= idx) throw ParseError(arg + ": missing size argument");
    return std::stoi(parts[idx]);
  };
  ProblemSpec spec;
  if (kind == "linear") {
    spec = make_linear(int_arg(2));
  } else if (kind == "expon") {
    spec = make_expon(int_arg(2));
  } else if (kind == "noisy") {
    if (parts.size() < 4) throw ParseError(arg + ": expected builtin:noisy:N:THETA");
    spec = make_noisy(std::stoi(parts[2]), std::stod(parts[3]));
  } else if (kind == "coffee") {
    spec = make_coffee_robot();
  } else if (kind == "process") {
    spec = make_process_planning();
  } else {
    throw ParseError("unknown builtin problem '" + arg + "'");
  }
  validate_problem(spec);
  return spec;
}

void save_solution(const Solution& sol, const ProblemSpec& spec, const std::string& path) {
  njson j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "solution";
  j["problem"] = sol.problem;
  j["gamma"] = sol.gamma;
  j["value"] = tree_to_json<double>(sol.value, spec.domain.names,
                                    [](const double& v) { return njson(v); });
  j["policy"] = tree_to_json<int>(sol.policy, spec.domain.names, [&](const int& a) {
    return njson(spec.actions.at(a));
  });
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

Solution load_solution(const std::string& path, const ProblemSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open solution file " + path);
  njson j;
  try {
    in >> j;
  } catch (const njson::parse_error& e) {
    throw ParseError(std::string("solution file: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw ParseError("solution file: unsupported schema_version");
    Solution sol;
    sol.problem = j.value("problem", "");
    sol.gamma = j.at("gamma").get<double>();
    sol.value = tree_from_json<double>(
        j.at("value"), spec.domain.names, spec.domain.sizes,
        [](const njson& leaf) { return leaf.get<double>(); }, "value tree");
    sol.policy = tree_from_json<int>(
        j.at("policy"), spec.domain.names, spec.domain.sizes,
        [&](const njson& leaf) {
          const std::string name = leaf.get<std::string>();
          for (ActionId a = 0; a < spec.num_actions(); ++a)
            if (spec.actions[a] == name) return static_cast<int>(a);
          throw ParseError("solution file: unknown action '" + name + "'");
        },
        "policy tree");
    return sol;
  } catch (const njson::exception& e) {
    throw ParseError(std::string("solution file: ") + e.what());
  }
}

}  // namespace spiti
