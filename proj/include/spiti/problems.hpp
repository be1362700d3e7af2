#pragma once

#include <string>

#include "spiti/fmdp.hpp"
#include "spiti/planner.hpp"

namespace spiti {

/// Chain family: n binary variables and n actions; action k sets variable k
/// true iff variables 1..k-1 are all true, otherwise leaves the state
/// unchanged. Reward 1 exactly on states with variable n true, which are
/// also the terminal states.
ProblemSpec make_linear(int n);

/// Binary-counter family: action k sets variable k true and clears all
/// earlier variables, enabled iff variables 1..k-1 are all true. Reward 1 on
/// the all-true state, which is terminal. The shortest path from all-false
/// has length 2^n - 1.
ProblemSpec make_expon(int n);

/// make_linear(n) with every CPD leaf probability p replaced by
/// p(1-theta) + (1-p)theta: each variable's outcome is inverted with
/// probability theta. Requires 0 < theta < 0.5.
ProblemSpec make_noisy(int n, double theta);

/// Delivery robot domain: 6 boolean variables, 4 actions. Terminal once the
/// owner has coffee.
ProblemSpec make_coffee_robot();

/// Factory domain: 17 binary variables, 14 actions (1,835,008 state-action
/// pairs). Terminal once the component is shipped.
ProblemSpec make_process_planning();

/// Load and validate a problem file. Throws ParseError on syntax or missing
/// fields, ValidationError on semantic violations.
ProblemSpec load_problem(const std::string& path);
ProblemSpec parse_problem_text(const std::string& text);

void save_problem(const ProblemSpec& spec, const std::string& path);
std::string problem_to_text(const ProblemSpec& spec);

/// Accepts a file path or a builtin designator:
/// builtin:linear:N, builtin:expon:N, builtin:noisy:N:THETA,
/// builtin:coffee, builtin:process.
ProblemSpec resolve_problem(const std::string& arg);

/// Serialized value/policy pair produced by offline solving.
struct Solution {
  std::string problem;
  double gamma = 0.9;
  ValueTree value;
  PolicyTree policy;
};

void save_solution(const Solution& sol, const ProblemSpec& spec, const std::string& path);
Solution load_solution(const std::string& path, const ProblemSpec& spec);

}  // namespace spiti
