#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "socsim/agent.hpp"
#include "socsim/config.hpp"

namespace socsim {

inline constexpr const char* kLogSchema = "socsim-log/1";
inline constexpr const char* kVersion = "1.0.0";

/// Starting positions that replace the kickoff formation; robots are ordered team 0 first.
struct Scenario {
  std::vector<RobotState> robots;
  BallState ball;
};

/// Invariant audits accumulated over one match, per tick or per decision round.
struct AuditReport {
  int ticks = 0;
  int decision_rounds = 0;
  int go_violations = 0;        // rounds with two or more go-to-ball robots in a team
  int captain_violations = 0;   // ticks without exactly one alive captain, outside failover windows
  int failovers = 0;
  double max_failover_delay = 0.0;  // s from liveness expiry of a dead captain to a unique new one
  int role_tables = 0;
  int role_violations = 0;      // tables missing an alive robot or without exactly one Goalkeeper
  int commitments = 0;
  int passes_done = 0;
  int bilateral_violations = 0;
  int deadlocks = 0;            // non-terminal commitment records past their deadline
  int robot_contacts = 0;
  int loc_frames = 0;
  int overruns = 0;
  std::array<int, 2> goals{};
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_lost = 0;

  nlohmann::json to_json() const;
};

struct MatchResult {
  std::vector<std::string> log;  // JSON lines, header first
  AuditReport audit;
  std::vector<std::uint64_t> blackboard_digests;  // every robot's digest after the last tick
  std::vector<RobotState> robots;
  BallState ball;
  std::vector<int> ball_holders;  // per tick, span index or -1
};

/// Optional knobs that are not part of the configuration document.
struct MatchOptions {
  std::optional<Scenario> scenario;
  TickBudget budget;
  bool keep_log = true;
};

/// Full closed loop: engine, sensing, every robot stack and the team radios.
MatchResult run_match(const RunConfig& cfg, const MatchOptions& opt = {});

/// Kickoff formation of one team, in field coordinates.
std::vector<Pose> kickoff_poses(int team_size, double attack_sign);

/// Header line contents; `wall_clock` is the only field that differs between identical runs.
nlohmann::json log_header(const RunConfig& cfg);

/// Names and seeds of every noise stream of a match.
std::vector<std::pair<std::string, std::uint64_t>> stream_seeds(const RunConfig& cfg);

/// Two-robot pass in an otherwise empty field (a goalkeeper stays home). Success when the
/// receiver gains possession before the trial ends.
struct PassTrial {
  bool success = false;
  bool proposed = false;
  double time = 0.0;
};
PassTrial run_pass_trial(const RunConfig& base, std::uint64_t seed, double duration = 6.0);

}  // namespace socsim
