#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "socsim/agent.hpp"
#include "socsim/blackboard.hpp"
#include "socsim/field.hpp"
#include "socsim/fusion.hpp"
#include "socsim/localizer.hpp"
#include "socsim/navigation.hpp"
#include "socsim/sim.hpp"

namespace socsim {

struct DeathSpec {
  int team = 0;
  int robot = 0;
  double time = 0.0;  // s
};

struct SensorSuite {
  ScanConfig scan;
  CameraConfig front = front_camera();
  CameraConfig up = up_camera();
  GoalSensorConfig goal;
  SonarConfig sonar;
  double odom_scale_sigma = 0.02;   // relative error on each odometry increment
  double odom_heading_sigma = 0.001;  // rad per control tick
};

struct DesRunConfig {
  nlohmann::json model;  // resolved model document
  double tol = 1e-9;
  int episodes = 100000;
  double horizon = 1000.0;  // s, censoring time of one episode
};

/// Everything one invocation needs, resolved from defaults, a config file and flags.
struct RunConfig {
  std::uint64_t seed = 1;
  double duration = 60.0;
  double dt = 0.01;
  std::array<int, 2> team_sizes{4, 4};
  int vision_period = 10;         // control ticks between camera frames
  int localization_period = 100;  // control ticks between localization frames
  int step_period = 1;            // control ticks between step records

  FieldConfig field;
  Arena arena;
  BallPhysics ball;
  RobotLimits limits;
  SensorSuite sensors;
  ChannelConfig channel;
  std::vector<DeathSpec> deaths;
  FusionConfig fusion;
  GuideParams guide;
  LocalizerConfig localizer;
  BehaviorConfig behavior;
  DesRunConfig des;

  std::string log_path;
  std::string plot_dir;

  /// Fully resolved document (defaults merged, referenced files inlined).
  nlohmann::json resolved;
  /// Hex FNV-1a of the canonical dump of `resolved`, output paths excluded.
  std::string hash;
};

/// Directory holding the shipped data files (behavior rules, DES model).
std::filesystem::path data_dir();

/// Parses a JSON file; // and /* */ comments are accepted. Throws ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& file);

/// Default document with every key spelled out.
nlohmann::json default_config_json();

/// Merges `overrides` onto the defaults (RFC 7386 merge patch), inlines "field",
/// "behavior" and "des.model" file references relative to `base_dir`, validates, and
/// parses. Unknown keys are rejected. Throws ConfigError.
RunConfig make_run_config(const nlohmann::json& overrides, const std::filesystem::path& base_dir = {});

/// make_run_config on the file's contents, with references relative to its directory.
RunConfig load_run_config(const std::filesystem::path& file);

/// Sets a dotted key ("channel.loss") from flag text; numbers and booleans are parsed,
/// anything else is kept as a string.
void set_dotted(nlohmann::json& doc, const std::string& dotted, const std::string& value);

std::string hex64(std::uint64_t v);

}  // namespace socsim
