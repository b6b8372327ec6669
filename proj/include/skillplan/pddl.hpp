#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace skillplan::pddl {

/// Parse/validation failure with source location.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(column) +
                           ": " + msg),
        line(line),
        column(column) {}
  int line;
  int column;
};

class GroundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TypedName {
  std::string name;
  std::string type;  // "object" when untyped
  bool operator==(const TypedName&) const = default;
};

struct Predicate {
  std::string name;
  std::vector<TypedName> parameters;
  bool operator==(const Predicate&) const = default;
};

/// Predicate atom with variable or constant arguments.
struct Atom {
  std::string predicate;
  std::vector<std::string> args;
  auto operator<=>(const Atom&) const = default;
  std::string str() const;
};

struct Literal {
  Atom atom;
  bool negated = false;
  bool operator==(const Literal&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<TypedName> parameters;
  std::vector<Literal> precondition;  // conjunction
  std::vector<Literal> effect;        // add (positive) / delete (negated)
  bool operator==(const ActionSchema&) const = default;
};

struct Domain {
  std::string name;
  std::vector<TypedName> types;      // (name, supertype)
  std::vector<TypedName> constants;  // domain-level objects
  std::vector<Predicate> predicates;
  std::vector<ActionSchema> actions;

  bool type_exists(const std::string& t) const;
  /// True when `t` equals `ancestor` or derives from it.
  bool type_is_a(const std::string& t, const std::string& ancestor) const;
  const Predicate* find_predicate(const std::string& name) const;
  const ActionSchema* find_action(const std::string& name) const;
  bool operator==(const Domain&) const = default;
};

struct Problem {
  std::string name;
  std::string domain_name;
  std::vector<TypedName> objects;
  std::vector<Atom> init;            // ground atoms
  std::vector<Literal> goal;         // conjunction of (possibly negated) ground atoms
  std::vector<std::string> feasibility;  // predicates assumed true while grounding
  bool operator==(const Problem&) const = default;
};

/// Canonical sorted set of ground atoms; equality and hashing deterministic.
struct PredicateState {
  std::vector<Atom> atoms;  // sorted, unique

  static PredicateState from_atoms(std::vector<Atom> atoms);
  bool contains(const Atom& a) const;
  auto operator<=>(const PredicateState&) const = default;
  std::string key() const;  // canonical string form
};

struct GroundedAction {
  std::string schema;
  std::vector<std::string> args;
  int source = -1;
  int target = -1;
  std::string skill_id;  // schema name: all groundings share one expert class

  std::string signature() const;  // "schema(arg1,arg2)"
};

/// Reachable predicate states connected by grounded actions.
struct TaskGraph {
  std::vector<PredicateState> states;
  std::vector<GroundedAction> edges;
  int initial = 0;
  std::vector<int> goal_states;
  std::vector<std::vector<int>> outgoing;  // per state: edge indices, lexicographic

  bool is_goal(int state) const;
  const std::vector<int>& actions_from(int state) const { return outgoing.at(state); }
  int successor(int edge) const { return edges.at(edge).target; }

  /// Recheck structural invariants (edge endpoints, effect soundness needs
  /// the domain; see validate_against).
  void validate_against(const Domain& dom, const Problem& prob) const;
};

Domain parse_domain(const std::string& text);
Problem parse_problem(const std::string& text, const Domain& dom);

Domain parse_domain_file(const std::string& path);
Problem parse_problem_file(const std::string& path, const Domain& dom);

/// Breadth-first closure of reachable states under all applicable ground
/// actions. Feasibility predicates are treated as always true and excluded
/// from states. Deterministic: BFS order, lexicographic action order.
TaskGraph ground(const Domain& dom, const Problem& prob, std::size_t max_states = 100000);

std::string pretty_print(const Domain& dom);
std::string pretty_print(const Problem& prob);

nlohmann::json to_json(const TaskGraph& graph);
std::string to_dot(const TaskGraph& graph);

}  // namespace skillplan::pddl
