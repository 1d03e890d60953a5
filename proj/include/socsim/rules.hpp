#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "socsim/blackboard.hpp"

namespace socsim {

/// Facts a robot derives from its blackboard each tick; the vocabulary of rule and guard
/// conditions.
struct Situation {
  std::map<std::string, bool> flags;
  std::map<std::string, double> numbers;
};

/// Names accepted in conditions. Unknown names are rejected when a table is loaded.
const std::set<std::string>& known_flags();
const std::set<std::string>& known_numbers();

/// Conjunction of atoms: `flag`, `!flag`, or `number <op> literal` with op in < <= > >=.
/// The literal `true` is the empty conjunction.
class Condition {
 public:
  struct Atom {
    std::string name;
    bool negated = false;
    bool comparison = false;
    std::string op;
    double value = 0.0;
  };

  /// Throws ConfigError on syntax errors or unknown names.
  static Condition parse(const std::string& text);

  bool eval(const Situation& s) const;
  const std::string& text() const { return text_; }
  bool always() const { return atoms_.empty(); }

 private:
  std::string text_;
  std::vector<Atom> atoms_;
};

struct Rule {
  Condition when;
  std::string then;  // operator name
};

/// Ordered per-role rule lists; the first matching rule selects the operator.
struct RuleTable {
  std::map<Role, std::vector<Rule>> rules;
};

/// Parses {"Attacker": [{"when": "...", "then": "go"}, ...], ...}. Every list ends in an
/// unconditional standby rule, appended when missing.
RuleTable parse_rule_table(const nlohmann::json& j);
nlohmann::json to_json(const RuleTable& t);

/// Prepends the rules of `fragment` to the matching role lists of `base`.
void merge_rules(RuleTable& base, const RuleTable& fragment);

struct Selection {
  std::string op;
  bool fallback = false;  // the rule named an operator that is not installed
};

Selection select_behavior(const Situation& s, Role role, const RuleTable& table,
                          const std::set<std::string>& installed);

/// Behavior operator as a finite-state automaton whose states name primitive tasks.
struct OperatorFSA {
  struct State {
    std::string name;
    std::string task;
  };
  struct Arc {
    std::string from;
    std::string to;
    Condition guard;
  };
  std::string name;
  std::vector<State> states;
  std::vector<Arc> arcs;  // priority order within each source state
  std::string initial;
  std::set<std::string> terminals;

  const State* state(const std::string& n) const;
};

/// Throws ConfigError for unknown states or tasks, a missing initial state, or states
/// unreachable from the initial one.
OperatorFSA parse_operator(const std::string& name, const nlohmann::json& j, const std::set<std::string>& tasks);

/// Running copy of an operator.
class OperatorInstance {
 public:
  explicit OperatorInstance(const OperatorFSA* fsa);

  /// Follows the first satisfied arc out of the current state. Without one, or on reaching
  /// a terminal state, the operator is done. Returns the task to execute, empty when done.
  std::string advance(const Situation& s);

  bool done() const { return done_; }
  const std::string& state() const { return state_; }
  const OperatorFSA& fsa() const { return *fsa_; }

 private:
  const OperatorFSA* fsa_;
  std::string state_;
  bool done_ = false;
};

}  // namespace socsim
