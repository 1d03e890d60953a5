#include "socsim/replay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "socsim/config.hpp"
#include "socsim/error.hpp"
#include "socsim/localizer.hpp"
#include "socsim/match.hpp"
#include "socsim/random.hpp"

namespace socsim {

using nlohmann::json;

namespace {

std::string at_line(long line, long last_valid) {
  return "line " + std::to_string(line) + " (last valid record #" + std::to_string(last_valid) + "): ";
}

Pose pose_from(const json& j) { return Pose(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

PoseEstimate estimate_from(const json& j) {
  return {pose_from(j.at("pose")), j.at("score").get<double>(), j.at("fit").get<double>(), j.at("trusted").get<bool>()};
}

bool same_bits(const PoseEstimate& a, const PoseEstimate& b) {
  return a.pose.x == b.pose.x && a.pose.y == b.pose.y && a.pose.theta() == b.pose.theta() && a.score == b.score &&
         a.fit == b.fit && a.trusted == b.trusted;
}

}  // namespace

MatchLog read_log(std::istream& in) {
  MatchLog log;
  std::string text;
  long line = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  bool summary_seen = false;
  while (std::getline(in, text)) {
    ++line;
    const long last_valid = static_cast<long>(log.records.size()) - 1;
    if (summary_seen) throw LogParseError(at_line(line, last_valid) + "record after the summary", line, last_valid);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw LogParseError(at_line(line, last_valid) + "malformed record at byte " + std::to_string(e.byte), line,
                          last_valid);
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
      throw LogParseError(at_line(line, last_valid) + "record without a type", line, last_valid);
    const std::string type = j["type"].get<std::string>();
    if (log.records.empty()) {
      if (type != "header") throw LogParseError(at_line(line, last_valid) + "log does not start with a header", line, -1);
      if (j.value("schema", std::string()) != kLogSchema)
        throw LogParseError(at_line(line, last_valid) + "unsupported schema", line, -1);
    } else {
      if (type == "header") throw LogParseError(at_line(line, last_valid) + "second header", line, last_valid);
      if (!j.contains("t") || !j["t"].is_number())
        throw LogParseError(at_line(line, last_valid) + "record without a time", line, last_valid);
      const double t = j["t"].get<double>();
      if (t < last_t) throw LogParseError(at_line(line, last_valid) + "record out of time order", line, last_valid);
      last_t = t;
      summary_seen = type == "summary";
    }
    log.records.push_back(std::move(j));
  }
  const long last_valid = static_cast<long>(log.records.size()) - 1;
  if (log.records.empty()) throw LogParseError("empty log", 0, -1);
  if (!summary_seen)
    throw LogParseError("log truncated after record #" + std::to_string(last_valid) + " (no summary record)",
                        line + 1, last_valid);
  return log;
}

MatchLog read_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open log " + path);
  return read_log(in);
}

std::vector<json> filter_records(const MatchLog& log, const LogFilter& f) {
  std::vector<json> out;
  for (std::size_t k = 1; k < log.records.size(); ++k) {
    const json& r = log.records[k];
    const std::string type = r["type"].get<std::string>();
    if (type == "summary") continue;
    if (!f.kinds.empty() && !f.kinds.count(type)) continue;
    const double t = r["t"].get<double>();
    if (f.t_min && t < *f.t_min) continue;
    if (f.t_max && t > *f.t_max) continue;
    auto matches = [&](const json& x) {
      if (f.team && x.value("team", -1) != *f.team) return false;
      if (f.robot && x.value("robot", -1) != *f.robot) return false;
      return true;
    };
    if (type == "step") {
      if (!f.team && !f.robot) {
        out.push_back(r);
        continue;
      }
      json copy = r;
      copy["robots"] = json::array();
      for (const auto& rb : r["robots"])
        if (matches(rb)) copy["robots"].push_back(rb);
      if (!copy["robots"].empty()) out.push_back(std::move(copy));
    } else if (matches(r)) {
      out.push_back(r);
    }
  }
  return out;
}

double percentile(std::vector<double> values, double level) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(level / 100.0 * static_cast<double>(values.size()));
  const std::size_t idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(values.size()))) - 1;
  return values[idx];
}

LogSummary summarize(const MatchLog& log) {
  LogSummary s;
  std::array<long, 2> held{};
  std::vector<double> pos_err, head_err;
  std::map<std::pair<long, int>, int> going;  // (tick, team) → running go operators
  for (std::size_t k = 1; k < log.records.size(); ++k) {
    const json& r = log.records[k];
    const std::string type = r["type"].get<std::string>();
    if (type == "step") {
      ++s.steps;
      for (const auto& rb : r["robots"])
        if (rb.value("has_ball", false)) {
          ++held[rb["team"].get<int>()];
          break;
        }
    } else if (type == "decision") {
      ++s.decisions;
      if (r["operator"] == "go" && r["running"].get<bool>()) ++going[{r["tick"].get<long>(), r["team"].get<int>()}];
    } else if (type == "event") {
      ++s.events;
      if (r["kind"] == "goal") ++s.goals[r["team"].get<int>()];
    } else if (type == "loc") {
      ++s.loc_frames;
      const Pose truth = pose_from(r["truth"]);
      const Pose est = pose_from(r["result"]["pose"]);
      pos_err.push_back((truth.position() - est.position()).norm());
      head_err.push_back(angle_distance(truth.theta(), est.theta()));
    }
  }
  for (int t = 0; t < 2; ++t) s.possession[t] = s.steps > 0 ? static_cast<double>(held[t]) / s.steps : 0.0;
  for (const auto& [key, n] : going)
    if (n > 1) ++s.go_violations;
  for (double level : s.percentile_levels) {
    s.loc_position_error.push_back(percentile(pos_err, level));
    s.loc_heading_error.push_back(percentile(head_err, level));
  }
  return s;
}

json LogSummary::to_json() const {
  json pos = json::object(), head = json::object();
  for (std::size_t i = 0; i < percentile_levels.size(); ++i) {
    const std::string key = "p" + std::to_string(static_cast<int>(percentile_levels[i]));
    pos[key] = std::isnan(loc_position_error[i]) ? json(nullptr) : json(loc_position_error[i]);
    head[key] = std::isnan(loc_heading_error[i]) ? json(nullptr) : json(loc_heading_error[i]);
  }
  return {{"steps", steps},
          {"decisions", decisions},
          {"events", events},
          {"loc_frames", loc_frames},
          {"possession", possession},
          {"goals", goals},
          {"loc_position_error", pos},
          {"loc_heading_error", head},
          {"go_violations", go_violations}};
}

LocalizerReplay replay_localizer(const MatchLog& log) {
  const json& header = log.header();
  const RunConfig cfg = make_run_config(header.at("config"));
  if (cfg.hash != header.at("config_hash").get<std::string>())
    throw ConfigError("config hash in the log header does not match its config");
  const FieldModel field = make_field(cfg.field);
  struct Streams {
    Rng scan, goal;
  };
  std::map<std::pair<int, int>, Streams> streams;
  LocalizerReplay out;
  for (const auto& r : log.records) {
    if (r["type"] != "loc") continue;
    const int team = r["team"].get<int>(), robot = r["robot"].get<int>();
    const auto key = std::make_pair(team, robot);
    if (!streams.count(key)) {
      const std::string suffix = "/" + std::to_string(team) + "/" + std::to_string(robot);
      streams.emplace(key, Streams{Rng(cfg.seed, "scan" + suffix), Rng(cfg.seed, "goal" + suffix)});
    }
    Streams& st = streams.at(key);
    RobotState truth;
    truth.pose = pose_from(r["truth"]);
    ++out.frames;

    const auto scan = scan_transitions(truth, field, cfg.sensors.scan, &st.scan);
    const json& logged_scan = r["scan"];
    bool scan_ok = logged_scan.size() == scan.size();
    for (std::size_t k = 0; scan_ok && k < scan.size(); ++k)
      scan_ok = logged_scan[k][0].get<double>() == scan[k].x && logged_scan[k][1].get<double>() == scan[k].y;
    if (!scan_ok) ++out.scan_mismatches;

    const Goal& blue = field.goal(GoalColor::Blue);
    const Goal& yellow = field.goal(GoalColor::Yellow);
    const Goal& seen =
        std::abs(truth.pose.bearing_to(blue.center())) <= std::abs(truth.pose.bearing_to(yellow.center())) ? blue
                                                                                                            : yellow;
    const auto goal = observe_goal(truth, seen, cfg.sensors.goal, &st.goal);
    const json& logged_goal = r["goal"];
    const bool goal_ok = logged_goal.is_null()
                             ? !goal
                             : goal && to_string(goal->color) == logged_goal["color"].get<std::string>() &&
                                   goal->bearing == logged_goal["bearing"].get<double>();
    if (!goal_ok) ++out.goal_mismatches;

    const PoseEstimate result = localize(scan, field, goal, estimate_from(r["prev"]), cfg.localizer);
    if (!same_bits(result, estimate_from(r["result"]))) ++out.result_mismatches;
  }
  return out;
}

}  // namespace socsim
