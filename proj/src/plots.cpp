#include "socsim/plots.hpp"

#include <fstream>
#include <iomanip>

#include "socsim/error.hpp"

namespace socsim {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

long write_trajectory(const MatchLog& log, std::ostream& out) {
  out << "t,team,robot,x,y,theta\n";
  long rows = 0;
  for (const auto& r : log.records) {
    if (r["type"] != "step") continue;
    const double t = r["t"].get<double>();
    for (const auto& rb : r["robots"]) {
      const json& p = rb["pose"];
      out << t << "," << rb["team"].get<int>() << "," << rb["robot"].get<int>() << "," << p[0].get<double>() << ","
          << p[1].get<double>() << "," << p[2].get<double>() << "\n";
      ++rows;
    }
  }
  return rows;
}

long write_localization_errors(const MatchLog& log, std::ostream& out) {
  out << "t,team,robot,position_error,heading_error\n";
  long rows = 0;
  for (const auto& r : log.records) {
    if (r["type"] != "loc") continue;
    const json& a = r["truth"];
    const json& b = r["result"]["pose"];
    const double dx = a[0].get<double>() - b[0].get<double>();
    const double dy = a[1].get<double>() - b[1].get<double>();
    out << r["t"].get<double>() << "," << r["team"].get<int>() << "," << r["robot"].get<int>() << ","
        << std::hypot(dx, dy) << "," << angle_distance(a[2].get<double>(), b[2].get<double>()) << "\n";
    ++rows;
  }
  return rows;
}

long write_ball_track(const MatchLog& log, std::ostream& out) {
  out << "t,x,y,holder\n";
  long rows = 0;
  for (const auto& r : log.records) {
    if (r["type"] != "step") continue;
    const json& b = r["ball"];
    out << r["t"].get<double>() << "," << b["x"].get<double>() << "," << b["y"].get<double>() << ","
        << b["holder"].get<int>() << "\n";
    ++rows;
  }
  return rows;
}

long write_value_table(const GameModel& m, const Solution& s, std::ostream& out) {
  const auto controllers = m.controllers();
  out << "state,label,value,marked,choice\n";
  for (int i = 0; i < m.size(); ++i) {
    std::string choice;
    for (std::size_t c = 0; c < controllers.size(); ++c) {
      const int e = s.policy.choice[i][c];
      if (e < 0) continue;
      if (!choice.empty()) choice += " ";
      choice += m.events[e].name;
    }
    out << i << "," << m.state_name(i) << ",";
    if (s.infinite[i]) out << "inf";
    else out << s.values[i];
    out << "," << (m.marked[i] ? 1 : 0) << "," << choice << "\n";
  }
  return m.size();
}

std::vector<std::string> emit_log_plots(const MatchLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files{"trajectory.csv", "localization_error.csv", "ball.csv"};
  auto traj = open_out(dir / files[0]);
  write_trajectory(log, traj);
  auto loc = open_out(dir / files[1]);
  write_localization_errors(log, loc);
  auto ball = open_out(dir / files[2]);
  write_ball_track(log, ball);
  return files;
}

std::vector<std::string> emit_experiment_plots(const MetricsTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string name = table.experiment + "_metrics.csv";
  auto out = open_out(dir / name);
  out << table.to_csv();
  return {name};
}

}  // namespace socsim
