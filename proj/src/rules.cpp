#include "socsim/rules.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

#include "socsim/error.hpp"

namespace socsim {

const std::set<std::string>& known_flags() {
  static const std::set<std::string> f{
      "ball_known",     "ball_visible",     "has_ball",        "bid_won",          "captain",
      "pass_kicker",    "pass_receiver",    "pass_active",     "pass_proposed",    "ball_own_half",
      "ball_opp_half",  "receiver_available", "aligned_goal",  "aligned_receiver", "kicked",
      "ball_in_own_area"};
  return f;
}

const std::set<std::string>& known_numbers() {
  static const std::set<std::string> n{"ball_dist", "goal_dist", "own_goal_dist", "ball_x", "x"};
  return n;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_and(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find("&&", start);
    parts.push_back(trim(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 2;
  }
  return parts;
}

bool is_ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

}  // namespace

Condition Condition::parse(const std::string& text) {
  Condition c;
  c.text_ = trim(text);
  if (c.text_.empty()) throw ConfigError("empty condition");
  if (c.text_ == "true") return c;
  for (const std::string& part : split_and(c.text_)) {
    if (part.empty()) throw ConfigError("condition '" + text + "': empty term");
    Atom a;
    std::size_t op_pos = part.find_first_of("<>");
    if (op_pos != std::string::npos) {
      a.comparison = true;
      a.name = trim(part.substr(0, op_pos));
      std::size_t lit = op_pos + 1;
      a.op = part.substr(op_pos, 1);
      if (lit < part.size() && part[lit] == '=') {
        a.op += "=";
        ++lit;
      }
      const std::string literal = trim(part.substr(lit));
      std::size_t used = 0;
      try {
        a.value = std::stod(literal, &used);
      } catch (const std::exception&) {
        throw ConfigError("condition '" + text + "': bad number '" + literal + "'");
      }
      if (used != literal.size()) throw ConfigError("condition '" + text + "': bad number '" + literal + "'");
      if (!known_numbers().count(a.name)) throw ConfigError("condition '" + text + "': unknown quantity '" + a.name + "'");
    } else {
      std::string name = part;
      if (name[0] == '!') {
        a.negated = true;
        name = trim(name.substr(1));
      }
      if (!is_ident(name)) throw ConfigError("condition '" + text + "': bad term '" + part + "'");
      if (!known_flags().count(name)) throw ConfigError("condition '" + text + "': unknown flag '" + name + "'");
      a.name = name;
    }
    c.atoms_.push_back(std::move(a));
  }
  return c;
}

bool Condition::eval(const Situation& s) const {
  for (const Atom& a : atoms_) {
    if (a.comparison) {
      auto it = s.numbers.find(a.name);
      if (it == s.numbers.end()) return false;
      const double x = it->second;
      bool ok = false;
      if (a.op == "<") ok = x < a.value;
      else if (a.op == "<=") ok = x <= a.value;
      else if (a.op == ">") ok = x > a.value;
      else ok = x >= a.value;
      if (!ok) return false;
    } else {
      auto it = s.flags.find(a.name);
      const bool v = it != s.flags.end() && it->second;
      if (v == a.negated) return false;
    }
  }
  return true;
}

RuleTable parse_rule_table(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("rule table must be an object keyed by role");
  RuleTable t;
  for (const auto& [role_name, list] : j.items()) {
    const Role role = role_from_string(role_name);
    if (!list.is_array()) throw ConfigError("rules for " + role_name + " must be a list");
    auto& out = t.rules[role];
    for (const auto& r : list) {
      if (!r.is_object() || !r.contains("when") || !r.contains("then"))
        throw ConfigError("rule for " + role_name + " needs 'when' and 'then'");
      out.push_back({Condition::parse(r.at("when").get<std::string>()), r.at("then").get<std::string>()});
    }
  }
  for (auto& [role, list] : t.rules)
    if (list.empty() || !list.back().when.always()) list.push_back({Condition::parse("true"), "standby"});
  return t;
}

nlohmann::json to_json(const RuleTable& t) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [role, list] : t.rules) {
    auto& arr = j[to_string(role)] = nlohmann::json::array();
    for (const auto& r : list) arr.push_back({{"when", r.when.text()}, {"then", r.then}});
  }
  return j;
}

void merge_rules(RuleTable& base, const RuleTable& fragment) {
  for (const auto& [role, list] : fragment.rules) {
    auto& dst = base.rules[role];
    std::vector<Rule> merged;
    for (const auto& r : list)
      if (!r.when.always()) merged.push_back(r);
    merged.insert(merged.end(), dst.begin(), dst.end());
    if (merged.empty() || !merged.back().when.always()) merged.push_back({Condition::parse("true"), "standby"});
    dst = std::move(merged);
  }
}

Selection select_behavior(const Situation& s, Role role, const RuleTable& table,
                          const std::set<std::string>& installed) {
  auto it = table.rules.find(role);
  if (it != table.rules.end()) {
    for (const Rule& r : it->second) {
      if (!r.when.eval(s)) continue;
      if (installed.count(r.then)) return {r.then, false};
      return {"standby", true};
    }
  }
  return {"standby", false};
}

const OperatorFSA::State* OperatorFSA::state(const std::string& n) const {
  for (const auto& s : states)
    if (s.name == n) return &s;
  return nullptr;
}

OperatorFSA parse_operator(const std::string& name, const nlohmann::json& j, const std::set<std::string>& tasks) {
  OperatorFSA f;
  f.name = name;
  const std::string where = "operator '" + name + "': ";
  if (!j.is_object() || !j.contains("states") || !j.contains("initial"))
    throw ConfigError(where + "needs 'states' and 'initial'");
  for (const auto& [sname, task] : j.at("states").items()) {
    const std::string t = task.get<std::string>();
    if (!tasks.count(t)) throw ConfigError(where + "unknown task '" + t + "'");
    f.states.push_back({sname, t});
  }
  f.initial = j.at("initial").get<std::string>();
  if (!f.state(f.initial)) throw ConfigError(where + "initial state '" + f.initial + "' not declared");
  if (j.contains("terminal"))
    for (const auto& t : j.at("terminal")) {
      const std::string s = t.get<std::string>();
      if (!f.state(s)) throw ConfigError(where + "terminal state '" + s + "' not declared");
      f.terminals.insert(s);
    }
  if (j.contains("arcs"))
    for (const auto& a : j.at("arcs")) {
      OperatorFSA::Arc arc{a.at("from").get<std::string>(), a.at("to").get<std::string>(),
                           Condition::parse(a.value("when", std::string("true")))};
      if (!f.state(arc.from) || !f.state(arc.to)) throw ConfigError(where + "arc between undeclared states");
      f.arcs.push_back(std::move(arc));
    }

  std::set<std::string> seen{f.initial};
  std::deque<std::string> q{f.initial};
  while (!q.empty()) {
    const std::string s = q.front();
    q.pop_front();
    for (const auto& a : f.arcs)
      if (a.from == s && seen.insert(a.to).second) q.push_back(a.to);
  }
  for (const auto& s : f.states)
    if (!seen.count(s.name)) throw ConfigError(where + "state '" + s.name + "' unreachable from initial");
  return f;
}

OperatorInstance::OperatorInstance(const OperatorFSA* fsa) : fsa_(fsa), state_(fsa->initial) {
  done_ = fsa_->terminals.count(state_) > 0;
}

std::string OperatorInstance::advance(const Situation& s) {
  if (done_) return {};
  const OperatorFSA::Arc* taken = nullptr;
  for (const auto& a : fsa_->arcs)
    if (a.from == state_ && a.guard.eval(s)) {
      taken = &a;
      break;
    }
  if (!taken) {
    done_ = true;
    return {};
  }
  state_ = taken->to;
  if (fsa_->terminals.count(state_)) {
    done_ = true;
    return {};
  }
  return fsa_->state(state_)->task;
}

}  // namespace socsim
