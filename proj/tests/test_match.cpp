#include <map>

#include "doctest.h"

#include "socsim/config.hpp"
#include "socsim/error.hpp"
#include "socsim/match.hpp"

using namespace socsim;
using nlohmann::json;

namespace {

std::vector<std::string> without_clock(std::vector<std::string> log) {
  json h = json::parse(log.front());
  h.erase("wall_clock");
  log.front() = h.dump();
  return log;
}

}  // namespace

TEST_SUITE("match") {

TEST_CASE("same seed, same log") {
  const RunConfig cfg = make_run_config(json{{"seed", 11}, {"duration", 8.0}, {"channel", {{"loss", 0.1}}}});
  const MatchResult a = run_match(cfg), b = run_match(cfg);
  CHECK(without_clock(a.log) == without_clock(b.log));
  CHECK(a.blackboard_digests == b.blackboard_digests);
  const MatchResult c = run_match(make_run_config(json{{"seed", 12}, {"duration", 8.0}}));
  CHECK(without_clock(a.log) != without_clock(c.log));
}

TEST_CASE("header carries the configuration") {
  const RunConfig cfg = make_run_config(json{{"seed", 3}, {"duration", 1.0}});
  const json h = log_header(cfg);
  CHECK(h["schema"] == kLogSchema);
  CHECK(h["config_hash"] == cfg.hash);
  CHECK(h["seed"] == 3);
  CHECK(h.contains("wall_clock"));
  CHECK(h["streams"].size() == stream_seeds(cfg).size());
}

TEST_CASE("full match records every robot every decision round") {
  const RunConfig cfg = make_run_config(json{{"seed", 2}});
  const MatchResult res = run_match(cfg);
  std::map<std::pair<int, int>, int> per_robot;
  for (const auto& line : res.log) {
    const json r = json::parse(line);
    if (r["type"] == "decision") ++per_robot[{r["team"].get<int>(), r["robot"].get<int>()}];
  }
  CHECK(per_robot.size() == 8);
  for (const auto& [id, n] : per_robot) CHECK(n >= res.audit.decision_rounds);
  CHECK(res.audit.go_violations == 0);
  CHECK(res.audit.captain_violations == 0);
  CHECK(res.audit.role_violations == 0);
  CHECK(res.audit.bilateral_violations == 0);
  CHECK(res.audit.deadlocks == 0);
}

TEST_CASE("configuration errors stop the run before it starts") {
  CHECK_THROWS_AS(run_match(make_run_config(json{{"field", "missing_field.json"}})), ConfigError);
  CHECK_THROWS_AS(make_run_config(json{{"team_sizes", {0, 4}}}), ConfigError);
}

TEST_CASE("kickoff formation stays in the own half") {
  for (int n = 1; n <= 4; ++n) {
    const auto poses = kickoff_poses(n, 1.0);
    CHECK(poses.size() == static_cast<std::size_t>(n));
    for (const auto& p : poses) CHECK(p.x < 0.0);
  }
}

TEST_CASE("captain failover after a death") {
  const RunConfig cfg =
      make_run_config(json{{"seed", 6}, {"duration", 10.0}, {"deaths", {{{"team", 0}, {"robot", 0}, {"time", 4.0}}}}});
  const MatchResult res = run_match(cfg);
  CHECK(res.audit.failovers >= 1);
  CHECK(res.audit.max_failover_delay <= cfg.behavior.decision_period * cfg.dt + 1e-9);
  CHECK(res.audit.captain_violations == 0);
  CHECK(res.audit.role_violations == 0);
}

}  // TEST_SUITE
