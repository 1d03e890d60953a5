// Command line entry point: run, experiment, replay, plot.
// Exit codes: 0 pass, 1 acceptance failure, 2 usage or configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "socsim/config.hpp"
#include "socsim/error.hpp"
#include "socsim/experiments.hpp"
#include "socsim/match.hpp"
#include "socsim/plots.hpp"
#include "socsim/replay.hpp"

namespace {

using nlohmann::json;
using namespace socsim;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct ConfigFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<double> loss;
  std::vector<std::string> sets;
  std::string log;
  std::string plot_dir;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON config file (comments allowed)");
    app->add_option("-s,--seed", seed, "master seed");
    app->add_option("--duration", duration, "match length in seconds");
    app->add_option("--loss", loss, "team radio message loss probability");
    app->add_option("--set", sets, "override a config key, e.g. --set channel.latency=0.05")->take_all();
    app->add_option("--plot-dir", plot_dir, "directory for plot data");
  }

  // Defaults, then the config file, then flags.
  RunConfig resolve() const {
    json doc = json::object();
    std::filesystem::path base;
    if (!config.empty()) {
      doc = read_json_file(config);
      base = std::filesystem::path(config).parent_path();
    }
    if (seed) doc["seed"] = *seed;
    if (duration) doc["duration"] = *duration;
    if (loss) set_dotted(doc, "channel.loss", std::to_string(*loss));
    if (!log.empty()) doc["log_path"] = log;
    if (!plot_dir.empty()) doc["plot_dir"] = plot_dir;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      set_dotted(doc, s.substr(0, eq), s.substr(eq + 1));
    }
    return make_run_config(doc, base);
  }
};

bool audit_clean(const AuditReport& a) {
  return a.go_violations == 0 && a.captain_violations == 0 && a.role_violations == 0 && a.bilateral_violations == 0 &&
         a.deadlocks == 0;
}

int cmd_run(const ConfigFlags& flags) {
  const RunConfig cfg = flags.resolve();
  MatchOptions opt;
  opt.keep_log = !cfg.log_path.empty() || !cfg.plot_dir.empty();
  const MatchResult res = run_match(cfg, opt);
  if (!cfg.log_path.empty()) {
    std::ofstream out(cfg.log_path);
    if (!out) throw ConfigError("cannot write " + cfg.log_path);
    for (const auto& line : res.log) out << line << "\n";
  }
  if (!cfg.plot_dir.empty()) {
    MatchLog log;
    for (const auto& line : res.log) log.records.push_back(json::parse(line));
    emit_log_plots(log, cfg.plot_dir);
  }
  const bool ok = audit_clean(res.audit);
  std::cout << json{{"config_hash", cfg.hash}, {"seed", cfg.seed}, {"pass", ok}, {"audit", res.audit.to_json()}}.dump(2)
            << "\n";
  return ok ? kPass : kFail;
}

int cmd_experiment(const ConfigFlags& flags, const std::string& name, bool as_json) {
  const RunConfig cfg = flags.resolve();
  const MetricsTable table = run_experiment(name, cfg);
  if (as_json) std::cout << table.to_json().dump(2) << "\n";
  else std::cout << table.to_text();
  if (!cfg.plot_dir.empty()) emit_experiment_plots(table, cfg.plot_dir);
  return table.passed() ? kPass : kFail;
}

struct ReplayFlags {
  std::string log;
  std::optional<int> team, robot;
  std::vector<std::string> kinds;
  std::optional<double> from, to;
  bool summary = false;
  bool localizer = false;
};

int cmd_replay(const ReplayFlags& f) {
  const MatchLog log = read_log_file(f.log);
  if (f.summary) {
    std::cout << summarize(log).to_json().dump(2) << "\n";
    return kPass;
  }
  if (f.localizer) {
    const LocalizerReplay r = replay_localizer(log);
    std::cout << json{{"frames", r.frames},
                      {"scan_mismatches", r.scan_mismatches},
                      {"goal_mismatches", r.goal_mismatches},
                      {"result_mismatches", r.result_mismatches},
                      {"exact", r.exact()}}
                     .dump(2)
              << "\n";
    return r.exact() ? kPass : kFail;
  }
  LogFilter filter;
  filter.team = f.team;
  filter.robot = f.robot;
  filter.kinds.insert(f.kinds.begin(), f.kinds.end());
  filter.t_min = f.from;
  filter.t_max = f.to;
  for (const auto& r : filter_records(log, filter)) std::cout << r.dump() << "\n";
  return kPass;
}

int cmd_plot(const ConfigFlags& flags, const std::string& log_file, bool des, std::string out_dir) {
  if (log_file.empty() && !des) throw ConfigError("plot needs --from-log FILE or --des");
  const RunConfig cfg = flags.resolve();
  if (out_dir.empty()) out_dir = cfg.plot_dir.empty() ? "plots" : cfg.plot_dir;
  std::vector<std::string> files;
  if (!log_file.empty()) files = emit_log_plots(read_log_file(log_file), out_dir);
  if (des) {
    const DesStudy s = des_study(cfg);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "des_values.csv");
    if (!out) throw ConfigError("cannot write " + out_dir + "/des_values.csv");
    out.precision(17);
    write_value_table(s.model, s.solution, out);
    std::ofstream frag(std::filesystem::path(out_dir) / "des_rules.json");
    frag << s.exported.fragment.dump(2) << "\n";
    files.push_back("des_values.csv");
    files.push_back("des_rules.json");
    for (const auto& w : s.exported.warnings) std::cerr << "warning: " << w << "\n";
  }
  for (const auto& f : files) std::cout << (std::filesystem::path(out_dir) / f).string() << "\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot soccer simulator and module harness"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "simulate one seeded match");
  run_flags.attach(run);
  run->add_option("-l,--log", run_flags.log, "write the match log here");

  ConfigFlags exp_flags;
  std::string exp_name;
  bool exp_json = false;
  auto* exp = app.add_subcommand("experiment", "run a module harness and print its metrics table");
  exp->add_option("name", exp_name, "localizer, fusion, navigation or des")->required();
  exp->add_flag("--json", exp_json, "print the table as JSON");
  exp_flags.attach(exp);

  ReplayFlags rf;
  auto* rep = app.add_subcommand("replay", "filter, summarize or re-localize a match log");
  rep->add_option("log", rf.log, "match log")->required();
  rep->add_option("--team", rf.team, "team 0 or 1");
  rep->add_option("--robot", rf.robot, "team-local robot id");
  rep->add_option("--kind", rf.kinds, "record type (step, decision, event, loc); repeatable");
  rep->add_option("--from", rf.from, "earliest time, s");
  rep->add_option("--to", rf.to, "latest time, s");
  rep->add_flag("--summary", rf.summary, "print summary statistics");
  rep->add_flag("--localizer", rf.localizer, "replay the localizer streams and compare bit for bit");

  ConfigFlags plot_flags;
  std::string plot_log, plot_out;
  bool plot_des = false;
  auto* plot = app.add_subcommand("plot", "write plot data files");
  plot_flags.attach(plot);
  plot->add_option("--from-log", plot_log, "match log to export");
  plot->add_flag("--des", plot_des, "export the DES value table and rule fragment");
  plot->add_option("-o,--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (exp->parsed()) return cmd_experiment(exp_flags, exp_name, exp_json);
    if (rep->parsed()) return cmd_replay(rf);
    if (plot->parsed()) return cmd_plot(plot_flags, plot_log, plot_des, plot_out);
  } catch (const LogParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
