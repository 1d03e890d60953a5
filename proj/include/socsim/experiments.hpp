#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "socsim/config.hpp"
#include "socsim/des.hpp"
#include "socsim/localizer.hpp"

namespace socsim {

/// One row of an experiment report: `value relation bound` decides `pass`.
struct Metric {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=" or "=="
  double bound = 0.0;
  bool pass = false;
};

Metric make_metric(std::string name, double value, std::string relation, double bound);

struct MetricsTable {
  std::string experiment;
  std::vector<Metric> metrics;

  bool passed() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
  std::string to_csv() const;
};

/// Names accepted by run_experiment.
std::vector<std::string> experiment_names();

/// Runs one module harness on the configuration. Throws ConfigError for an unknown name.
MetricsTable run_experiment(const std::string& name, const RunConfig& cfg);

struct LocalizationSample {
  Pose truth;
  PoseEstimate result;
  double position_error = 0.0;  // m
  double heading_error = 0.0;   // rad
  double seconds = 0.0;         // wall time of the localize call
};

/// Localizes at `count` uniformly drawn poses inside the field lines with the goal sensor
/// active and the given clutter share. The previous estimate handed to the localizer is the
/// truth displaced by 0.5 m and 0.3 rad of noise, untrusted.
std::vector<LocalizationSample> localization_samples(const RunConfig& cfg, int count, double clutter,
                                                     std::uint64_t seed);

struct FusionStudy {
  int frames = 0;
  std::vector<double> unfused_error;  // per robot, mean over frames where it saw the ball
  double local_only_error = 0.0;      // global fusion disabled, mean over robots and frames
  double fused_error = 0.0;           // mean over robots and frames of the team estimate
  double mean_nees = 0.0;             // of the fused estimates
  double nees_low = 0.0;              // 95% two-sided band of the mean NEES
  double nees_high = 0.0;
};

/// Four robots around a random ball position per frame, each with both cameras and a noisy
/// pose estimate whose noise matches the configured pose sigmas.
FusionStudy fusion_study(const RunConfig& cfg, int frames, std::uint64_t seed);

struct NavigationStudy {
  int scenes = 0;
  double max_gradient_error = 0.0;  // relative, analytic vs central differences of the potential
  double isotropy_deviation = 0.0;  // beta = 0: |U(theta1) - U(theta2)|
  double dribble_excess = 0.0;      // largest |omega| beyond the dribble limit
  int contacts = 0;                 // closed-loop scenes in which the robot touched an obstacle
  int arrivals = 0;
};

NavigationStudy navigation_study(const RunConfig& cfg, int scenes, std::uint64_t seed);

struct DesStudy {
  GameModel model;
  Solution solution;
  std::vector<double> linear;  // evaluate_policy on the optimal policy
  double max_deviation = 0.0;  // over states with finite values
  int marking_violations = 0;
  double mc_mean = 0.0;
  double mc_se = 0.0;
  int mc_censored = 0;
  ExportResult exported;
};

DesStudy des_study(const RunConfig& cfg);

}  // namespace socsim
