#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socsim/field.hpp"
#include "socsim/geometry.hpp"
#include "socsim/random.hpp"

namespace socsim {

/// Something the engine wants recorded in the step log (clamping, rejected kicks, goals).
struct SimEvent {
  std::string kind;
  int robot = -1;
  std::string detail;
};
using SimLog = std::vector<SimEvent>;

struct RobotLimits {
  double v_max = 1.5;       // m/s
  double omega_max = 3.0;   // rad/s
  double radius = 0.24;     // m, disc footprint
};

struct DriveCommand {
  double v = 0.0;
  double omega = 0.0;
};

struct RobotState {
  Pose pose;
  double v = 0.0;
  double omega = 0.0;
  double accel = 0.0;  // linear acceleration applied over the last step
  bool has_ball = false;
  double capture_cooldown = 0.0;  // seconds before this robot may capture the ball again
};

/// Unicycle update along the exact circular arc. Commands are clamped to `limits`;
/// a clamp is recorded in `log` when one is supplied.
RobotState step_robot(const RobotState& s, DriveCommand cmd, double dt, const RobotLimits& limits,
                      SimLog* log = nullptr, int robot_id = -1);

struct BallPhysics {
  double friction = 0.5;      // 1/s, viscous: v <- v * exp(-friction * dt)
  double restitution = 0.7;   // wall and body bounces
  double radius = 0.11;
  double mass = 0.45;         // kg; kick impulse / mass = speed change
  double max_impulse = 2.7;   // N*s
  // Holding cone on the robot front.
  double hold_slack = 0.04;       // capture distance beyond contact (center to center)
  double hold_angle = 0.4;        // rad, half-angle of the cone
  double hold_lateral_tol = 0.06; // m, lateral slide that loses the ball
  double hold_mu_static = 0.8;    // lateral grip per unit normal push
  double hold_mu_kinetic = 0.5;
  double capture_speed_max = 6.0; // m/s relative speed above which the ball bounces off
  double capture_cooldown = 0.4;  // s after a kick or release
};

struct BallState {
  Vec2 position;
  Vec2 velocity;
  int holder = -1;            // index into the robot span, -1 when free
  double lateral_offset = 0.0;  // body-frame y of the held ball
  double lateral_rate = 0.0;    // 0 while sticking
};

/// Axis-aligned walls around the playing area.
struct Arena {
  double half_x = 6.5;
  double half_y = 4.5;
};

/// Distance from robot center to the held ball's center.
inline double hold_distance(const RobotLimits& lim, const BallPhysics& phys) {
  return lim.radius + phys.radius;
}

/// Advances the ball by one step: viscous decay, wall reflection, robot contact.
/// Capture and loss update `has_ball` on the robots.
BallState step_ball(const BallState& b, std::span<RobotState> robots, double dt,
                    const BallPhysics& phys, const RobotLimits& limits, const Arena& arena,
                    SimLog* log = nullptr);

/// Kicks a held ball along the kicker heading; speed gain = impulse / mass.
/// Without possession the ball is returned unchanged and a warning is logged.
BallState kick(const BallState& b, RobotState& kicker, int kicker_index, double impulse,
               const BallPhysics& phys, SimLog* log = nullptr);

struct Disc {
  Vec2 center;
  double radius = 0.0;
};

/// Static geometry the sonar ring can see.
struct SonarWorld {
  std::vector<Segment> walls;
  std::vector<Disc> discs;
  std::optional<Disc> circular_arena;  // ray exits through this circle from the inside
};

SonarWorld arena_walls(const Arena& arena);

inline constexpr int kSonarBeams = 16;

struct SonarConfig {
  double max_range = 5.0;
  double noise_sigma = 0.0;
};

struct SonarScan {
  std::array<double, kSonarBeams> ranges{};
  static double beam_angle(int k) { return 2.0 * kPi * k / kSonarBeams; }
};

/// Sixteen equally spaced beams from the robot center, beam 0 along the heading.
SonarScan simulate_sonar(const RobotState& s, const SonarWorld& world, const SonarConfig& cfg,
                         Rng* noise = nullptr);

struct CameraConfig {
  std::string name = "front";
  double fov = kPi / 2.0;    // full opening angle
  double max_range = 6.0;
  double range_sigma = 0.05;
  double bearing_sigma = 0.02;
};

CameraConfig front_camera();
CameraConfig up_camera();

struct BallObservation {
  int observer = -1;
  double relative_bearing = 0.0;
  double relative_distance = 0.0;
  double timestamp = 0.0;
  double range_sigma = 0.0;
  double bearing_sigma = 0.0;
};

/// Noisy range/bearing sighting, or nothing when the ball is outside the camera cone,
/// out of range, or behind one of the `occluders`.
std::optional<BallObservation> observe_ball(const RobotState& s, int observer, const BallState& b,
                                            const CameraConfig& cam, std::span<const Disc> occluders,
                                            double timestamp, Rng* noise = nullptr);

struct GoalObservation {
  GoalColor color;
  double bearing = 0.0;
};

struct GoalSensorConfig {
  double max_range = 15.0;
  double bearing_sigma = 0.02;
};

std::optional<GoalObservation> observe_goal(const RobotState& s, const Goal& goal,
                                            const GoalSensorConfig& cfg, Rng* noise = nullptr);

/// 0.25 m to 5 m in 0.25 m steps.
std::vector<double> default_scan_radii();

struct ScanConfig {
  std::vector<double> radii = default_scan_radii();
  double noise_sigma = 0.01;
  double clutter_fraction = 0.05;  // share of emitted pixels that are clutter
};

/// Transition pixels where the scan circles cross field markings, robot frame.
std::vector<TransitionPixel> scan_transitions(const RobotState& s, const FieldModel& field,
                                              const ScanConfig& cfg, Rng* noise = nullptr);

}  // namespace socsim
