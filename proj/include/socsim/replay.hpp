#pragma once

#include <array>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace socsim {

/// A parsed match log. Record 0 is the header; the last record is the summary.
struct MatchLog {
  std::vector<nlohmann::json> records;
  const nlohmann::json& header() const { return records.front(); }
};

/// Reads line-delimited records. Throws LogParseError on malformed lines, a missing or
/// foreign header, records out of time order, or a log that ends before its summary.
MatchLog read_log(std::istream& in);
MatchLog read_log_file(const std::string& path);

struct LogFilter {
  std::optional<int> team;
  std::optional<int> robot;  // team-local id
  std::set<std::string> kinds;  // record types; empty means all
  std::optional<double> t_min;
  std::optional<double> t_max;
};

/// Records matching every set criterion, in log order. The header and summary are never
/// returned. Step records keep only the matching robots.
std::vector<nlohmann::json> filter_records(const MatchLog& log, const LogFilter& f);

struct LogSummary {
  long steps = 0;
  long decisions = 0;
  long events = 0;
  long loc_frames = 0;
  std::array<double, 2> possession{};  // share of steps each team held the ball
  std::array<int, 2> goals{};
  std::vector<double> percentile_levels{50.0, 90.0, 95.0, 99.0};
  std::vector<double> loc_position_error;  // m, one entry per level
  std::vector<double> loc_heading_error;   // rad
  int go_violations = 0;  // decision rounds with two or more running go operators in a team

  nlohmann::json to_json() const;
};

LogSummary summarize(const MatchLog& log);

/// Nearest-rank percentile; NaN for an empty sample.
double percentile(std::vector<double> values, double level);

/// Regenerates every scan and goal sighting from the logged truth using the per-robot noise
/// streams and re-runs the localizer from the logged previous estimate. Counts frames whose
/// inputs or outputs differ in any bit.
struct LocalizerReplay {
  int frames = 0;
  int scan_mismatches = 0;
  int goal_mismatches = 0;
  int result_mismatches = 0;
  bool exact() const { return frames > 0 && scan_mismatches + goal_mismatches + result_mismatches == 0; }
};

LocalizerReplay replay_localizer(const MatchLog& log);

}  // namespace socsim
