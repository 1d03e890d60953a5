#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "socsim/des.hpp"
#include "socsim/experiments.hpp"
#include "socsim/replay.hpp"

namespace socsim {

/// `t,team,robot,x,y,theta`: one row per step record per robot.
long write_trajectory(const MatchLog& log, std::ostream& out);

/// `t,team,robot,position_error,heading_error`: one row per localization frame.
long write_localization_errors(const MatchLog& log, std::ostream& out);

/// `t,x,y,holder`: true ball track.
long write_ball_track(const MatchLog& log, std::ostream& out);

/// `state,label,value,marked,choice`: one row per reachable state.
long write_value_table(const GameModel& m, const Solution& s, std::ostream& out);

/// Writes every series of a log into `dir`; returns the file names.
std::vector<std::string> emit_log_plots(const MatchLog& log, const std::filesystem::path& dir);

/// Writes `<experiment>_metrics.csv`.
std::vector<std::string> emit_experiment_plots(const MetricsTable& table, const std::filesystem::path& dir);

}  // namespace socsim
