#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace socsim {

enum class EventClass { Controllable, Uncontrollable };

struct EventSpec {
  std::string name;
  EventClass cls = EventClass::Uncontrollable;
  double rate = 1.0;  // 1/s
  std::string owner;  // acting player of a controllable event
};

struct PlayerFSA {
  struct Transition {
    std::string from;
    std::string event;
    std::string to;
  };
  std::string name;
  std::vector<std::string> states;
  std::string initial;
  std::vector<Transition> transitions;
};

/// Shared events move every listed component at once; all other events interleave.
using SyncTable = std::map<std::string, std::vector<std::string>>;

/// Continuous-time game over the reachable product states.
struct GameModel {
  struct Transition {
    int from = 0;
    int event = 0;
    int to = 0;
  };
  std::vector<std::string> components;
  std::vector<std::vector<std::string>> state_labels;  // per state, one label per component
  std::vector<EventSpec> events;
  std::vector<Transition> transitions;
  std::vector<bool> marked;
  int initial = 0;

  int size() const { return static_cast<int>(state_labels.size()); }
  double cost(int s) const { return marked[s] ? 0.0 : 1.0; }
  std::string state_name(int s) const;
  /// Owners of controllable events, sorted.
  std::vector<std::string> controllers() const;
  /// Transitions leaving state s, in model order.
  std::vector<Transition> out(int s) const;
};

/// Throws ConfigError on non-deterministic components, unknown or non-positive events,
/// sync entries naming a component that lacks the event, or unreachable component states.
void validate(const PlayerFSA& f);
void validate(const EventSpec& e);

/// Synchronous product restricted to states reachable from the joint initial state.
/// `marked` lists partial assignments (component → state); a product state matching any
/// of them is marked.
GameModel compose(const std::vector<PlayerFSA>& fsas, const std::vector<EventSpec>& events, const SyncTable& sync,
                  const std::vector<std::map<std::string, std::string>>& marked);

struct MarkingViolation {
  int from = 0;
  int event = 0;
  int to = 0;
};

/// Every marked → unmarked transition.
std::vector<MarkingViolation> validate_marking(const GameModel& m);

/// Per state, the controllable event index chosen for each controller (same order as
/// GameModel::controllers), -1 when that controller holds back.
struct Policy {
  std::vector<std::vector<int>> choice;
};

/// Every admissible control configuration of state s: per controller, one of its enabled
/// controllable events or none (-1, listed last). Holding back keeps a faster event from
/// ever being forced on a controller, so raising a controllable rate cannot hurt.
std::vector<std::vector<int>> control_options(const GameModel& m, int s);

/// Total rate and successor distribution of state s under a configuration.
struct Outflow {
  double rate = 0.0;
  std::vector<std::pair<int, double>> to;  // (state, rate)
};
Outflow outflow(const GameModel& m, int s, const std::vector<int>& config);

struct Solution {
  Policy policy;
  std::vector<double> values;  // s; +inf where the marked set cannot be reached surely
  std::vector<bool> infinite;
  double uniformization_rate = 0.0;
  int sweeps = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Minimal expected time to the marked set: uniformization at the largest total outflow,
/// Gauss-Seidel value iteration until the estimated error is below `tol`.
Solution solve_policy(const GameModel& m, double tol = 1e-9, int max_sweeps = 10000000);

/// Exact expected hitting times of a fixed policy by a dense linear solve; +inf where the
/// policy does not reach the marked set surely.
std::vector<double> evaluate_policy(const GameModel& m, const Policy& p);

struct DesSamples {
  std::vector<double> times;  // absorbed episodes
  int censored = 0;           // episodes that hit the horizon
};

/// Episode e uses the generator seeded with child_seed(seed, e), so results do not depend
/// on the order episodes are run in.
DesSamples simulate_des(const GameModel& m, const Policy& p, std::uint64_t seed, int episodes,
                        double horizon = 1000.0, std::optional<int> start = std::nullopt);

/// How abstract states and events translate into behavior rules.
struct ExportSpec {
  std::map<std::string, std::string> player_roles;                          // player → role name
  std::map<std::string, std::map<std::string, std::string>> state_conditions;  // player → state → condition
  struct EventHint {
    std::string op;
    std::string requires_;  // extra condition, may be empty
  };
  std::map<std::string, EventHint> events;
};

struct ExportResult {
  nlohmann::json fragment;  // rule table fragment, same grammar as behavior rules
  std::vector<std::string> warnings;
};

/// One rule per (player role, own-state condition): the operator of the event the policy
/// chooses most often in the states sharing that condition.
ExportResult export_policy(const GameModel& m, const Policy& p, const ExportSpec& spec);

/// Model document: {"players": [...], "events": [...], "sync": {...}, "marked": [...], "export": {...}}.
struct ModelDocument {
  std::vector<PlayerFSA> players;
  std::vector<EventSpec> events;
  SyncTable sync;
  std::vector<std::map<std::string, std::string>> marked;
  ExportSpec export_spec;
};

ModelDocument parse_model(const nlohmann::json& j);
GameModel build_model(const ModelDocument& d);

}  // namespace socsim
