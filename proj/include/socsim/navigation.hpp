#pragma once

#include <optional>
#include <span>

#include "socsim/geometry.hpp"
#include "socsim/localizer.hpp"
#include "socsim/random.hpp"
#include "socsim/sim.hpp"

namespace socsim {

struct NavCommand {
  double v_cmd = 0.0;
  double omega_cmd = 0.0;
  double accel = 0.0;  // (v_cmd - v) / dt
  bool unreachable = false;  // goal lies inside an obstacle
};

struct Obstacle {
  Vec2 center;
  double radius = 0.0;
};

struct PotentialParams {
  double k_att = 1.0;
  double k_rep = 0.5;
  double d0 = 1.2;   // m from robot center to obstacle surface where repulsion vanishes
  double beta = 2.0; // front weighting; 0 is isotropic
  double robot_radius = 0.24;
  double k_omega = 3.0;   // rad/s per rad of heading error toward the resultant
  double damping = 1.5;   // 1/s, speed feedback in the acceleration law
  double a_max = 3.0;     // m/s^2
  double v_max = 1.5;
  double omega_max = 3.0;
  double dt = 0.01;       // control period
};

/// Throws ConfigError unless gains are positive, beta >= 0 and d0 exceeds the robot radius.
void validate(const PotentialParams& p);

/// Front weighting ((1 + cos a) / 2)^beta of an obstacle at body bearing a.
double directional_weight(double alpha, double beta);

/// Field-frame potential at position `p` with heading `theta`. Infinite on contact.
double potential(Vec2 p, double theta, Vec2 goal, std::span<const Obstacle> obstacles,
                 const PotentialParams& params);

/// Analytic gradient of `potential` with respect to position, heading held fixed.
Vec2 potential_gradient(Vec2 p, double theta, Vec2 goal, std::span<const Obstacle> obstacles,
                        const PotentialParams& params);

/// Negative gradient mapped to the drive: acceleration along the heading and a turn rate
/// toward the resultant, both clamped to the platform limits.
NavCommand potential_command(const Pose& pose, double v, Vec2 goal, std::span<const Obstacle> obstacles,
                             const PotentialParams& params);

struct DribbleParams {
  double c0 = 0.4;    // rad/s
  double c1 = 0.8;    // rad*s/m
  double v_min = 0.1; // m/s
};

/// Largest turn rate that keeps a held ball: c0 + c1 * a / max(v, v_min), never negative.
double dribble_limit(double v, double a, const DribbleParams& p);

enum class GuideMode { Free, Dribble };

struct GuideParams {
  PotentialParams potential;
  DribbleParams dribble;
  double brake_margin = 0.05;  // m of clearance kept after a full stop
  double arrive_tol = 0.1;     // m
  double stall_time = 2.0;     // s without progress before escaping
  double stall_progress = 0.05;
  double escape_time = 1.0;    // s spent on a random detour
  double escape_distance = 1.5;
};

struct GuideOutput {
  NavCommand cmd;
  bool standby = false;  // no pose has ever been available
  bool escaping = false;
  Pose believed;         // dead-reckoned pose the command was computed from
};

/// Per-robot guidance state: odometry dead reckoning reset by trusted localization,
/// potential-field steering, braking for clearance, the dribble clamp and stall escape.
class Guide {
 public:
  explicit Guide(std::uint64_t seed = 0) : rng_(seed) {}

  /// `odom` is the body-frame motion since the previous call. `fresh` is a localization
  /// result delivered since then, if any.
  GuideOutput update(const std::optional<PoseEstimate>& fresh, const Pose& odom, double v, const Pose& target,
                     GuideMode mode, std::span<const Obstacle> obstacles, const GuideParams& params, double now) {
    observe(fresh, odom);
    return command(v, target, mode, obstacles, params, now);
  }

  /// Dead reckoning step; a trusted estimate (or the first estimate of any kind) replaces the pose.
  void observe(const std::optional<PoseEstimate>& fresh, const Pose& odom);

  GuideOutput command(double v, const Pose& target, GuideMode mode, std::span<const Obstacle> obstacles,
                      const GuideParams& params, double now);

  std::optional<Pose> pose() const { return pose_; }
  void reset(const Pose& p) { pose_ = p; }

 private:
  std::optional<Pose> pose_;
  Rng rng_;
  double best_dist_ = 1e300;
  double best_time_ = 0.0;
  double escape_until_ = -1.0;
  Vec2 escape_goal_;
};

/// The emitted command after braking and, in dribble mode, the acceleration raise and
/// turn-rate clamp. Exposed for tests.
NavCommand shape_command(const NavCommand& raw, const Pose& pose, double v, GuideMode mode,
                         std::span<const Obstacle> obstacles, const GuideParams& params);

}  // namespace socsim
