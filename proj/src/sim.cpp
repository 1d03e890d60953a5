#include "socsim/sim.hpp"

#include <algorithm>
#include <cmath>

namespace socsim {

namespace {

void record(SimLog* log, std::string kind, int robot, std::string detail) {
  if (log) log->push_back({std::move(kind), robot, std::move(detail)});
}

// Field-frame velocity of a body-frame point attached to the robot.
Vec2 point_velocity(const RobotState& r, Vec2 body_point) {
  const Vec2 arm = rotate(body_point, r.pose.theta());
  return r.pose.heading() * r.v + Vec2{-arm.y, arm.x} * r.omega;
}

}  // namespace

RobotState step_robot(const RobotState& s, DriveCommand cmd, double dt, const RobotLimits& limits,
                      SimLog* log, int robot_id) {
  const double v = std::clamp(cmd.v, -limits.v_max, limits.v_max);
  const double w = std::clamp(cmd.omega, -limits.omega_max, limits.omega_max);
  if (v != cmd.v || w != cmd.omega) record(log, "clamp", robot_id, "drive command clamped to limits");

  RobotState out = s;
  const double th = s.pose.theta();
  double x = s.pose.x, y = s.pose.y;
  if (std::abs(w) < 1e-12) {
    x += v * dt * std::cos(th);
    y += v * dt * std::sin(th);
  } else {
    const double r = v / w;
    x += r * (std::sin(th + w * dt) - std::sin(th));
    y -= r * (std::cos(th + w * dt) - std::cos(th));
  }
  out.pose = Pose(x, y, th + w * dt);
  out.accel = (v - s.v) / dt;
  out.v = v;
  out.omega = w;
  out.capture_cooldown = std::max(0.0, s.capture_cooldown - dt);
  return out;
}

BallState step_ball(const BallState& b, std::span<RobotState> robots, double dt,
                    const BallPhysics& phys, const RobotLimits& limits, const Arena& arena,
                    SimLog* log) {
  BallState out = b;
  const double contact = limits.radius + phys.radius;
  const double capture_dist = contact + phys.hold_slack;

  auto release = [&](RobotState& r, int idx, Vec2 velocity, const char* why) {
    out.holder = -1;
    out.velocity = velocity;
    out.lateral_offset = 0.0;
    out.lateral_rate = 0.0;
    r.has_ball = false;
    r.capture_cooldown = phys.capture_cooldown;
    record(log, "ball_lost", idx, why);
  };

  if (out.holder >= 0 && out.holder < static_cast<int>(robots.size()) &&
      robots[out.holder].has_ball) {
    RobotState& r = robots[out.holder];
    const double v_prev = r.v - r.accel * dt;
    // Push of the robot front on the ball, per unit ball mass.
    const double normal = r.accel + phys.friction * v_prev;
    const double required = v_prev * r.omega;  // lateral acceleration the turn demands
    bool lost = false;
    const char* why = "";
    if (normal < -1e-9) {
      lost = true;
      why = "ball rolled ahead (braking harder than ball friction)";
    } else {
      const bool sticking = out.lateral_rate == 0.0;
      if (sticking && std::abs(required) <= phys.hold_mu_static * normal) {
        // held in place by static grip
      } else {
        const double excess = std::abs(required) - phys.hold_mu_kinetic * normal;
        if (excess <= 0.0) {
          out.lateral_rate = 0.0;
        } else {
          const double outward = required > 0.0 ? -1.0 : 1.0;
          out.lateral_rate += outward * excess * dt;
          out.lateral_offset += out.lateral_rate * dt;
        }
      }
      if (std::abs(out.lateral_offset) > phys.hold_lateral_tol) {
        lost = true;
        why = "ball slid out of the holding cone";
      }
    }
    const Vec2 front{contact, out.lateral_offset};
    out.position = r.pose.to_field(front);
    out.velocity = point_velocity(r, front);
    if (lost) release(r, out.holder, out.velocity, why);

    // A second robot with the ball inside its own cone knocks it loose.
    if (out.holder >= 0) {
      for (std::size_t i = 0; i < robots.size(); ++i) {
        if (static_cast<int>(i) == out.holder) continue;
        const RobotState& c = robots[i];
        const Vec2 d = out.position - c.pose.position();
        if (d.norm() <= capture_dist && std::abs(c.pose.bearing_to(out.position)) <= phys.hold_angle) {
          release(r, out.holder, {0.0, 0.0}, "contested");
          break;
        }
      }
    }
    return out;
  }

  if (out.holder >= 0) {
    out.holder = -1;
    out.lateral_offset = out.lateral_rate = 0.0;
  }

  const double decay = std::exp(-phys.friction * dt);
  const Vec2 disp = phys.friction > 0.0 ? out.velocity * ((1.0 - decay) / phys.friction)
                                        : out.velocity * dt;
  out.position += disp;
  out.velocity = out.velocity * decay;

  const double wx = arena.half_x - phys.radius;
  const double wy = arena.half_y - phys.radius;
  auto reflect = [&](double& p, double& v, double& other_v, double wall) {
    if (p > wall) {
      p = 2.0 * wall - p;
      v = -v;
    } else if (p < -wall) {
      p = -2.0 * wall - p;
      v = -v;
    } else {
      return;
    }
    v *= phys.restitution;
    other_v *= phys.restitution;
    record(log, "wall_bounce", -1, "");
  };
  reflect(out.position.x, out.velocity.x, out.velocity.y, wx);
  reflect(out.position.y, out.velocity.y, out.velocity.x, wy);

  for (std::size_t i = 0; i < robots.size(); ++i) {
    RobotState& r = robots[i];
    const Vec2 d = out.position - r.pose.position();
    const double dist = d.norm();
    if (dist > capture_dist) continue;
    const Vec2 rv = r.pose.heading() * r.v;
    const bool in_cone = std::abs(r.pose.bearing_to(out.position)) <= phys.hold_angle;
    if (in_cone && r.capture_cooldown <= 0.0 && (out.velocity - rv).norm() <= phys.capture_speed_max) {
      out.holder = static_cast<int>(i);
      out.lateral_offset =
          std::clamp(r.pose.to_body(out.position).y, -phys.hold_lateral_tol, phys.hold_lateral_tol);
      out.lateral_rate = 0.0;
      r.has_ball = true;
      const Vec2 front{contact, out.lateral_offset};
      out.position = r.pose.to_field(front);
      out.velocity = point_velocity(r, front);
      record(log, "ball_captured", static_cast<int>(i), "");
      break;
    }
    if (dist < contact && dist > 0.0) {
      const Vec2 n = d / dist;
      out.position = r.pose.position() + n * contact;
      const double vn = (out.velocity - rv).dot(n);
      if (vn < 0.0) out.velocity -= n * ((1.0 + phys.restitution) * vn);
    }
  }
  return out;
}

BallState kick(const BallState& b, RobotState& kicker, int kicker_index, double impulse,
               const BallPhysics& phys, SimLog* log) {
  if (!kicker.has_ball || b.holder != kicker_index) {
    record(log, "warning", kicker_index, "kick without possession ignored");
    return b;
  }
  const double j = std::clamp(impulse, 0.0, phys.max_impulse);
  if (j != impulse) record(log, "clamp", kicker_index, "kick impulse clamped");
  BallState out = b;
  out.velocity += kicker.pose.heading() * (j / phys.mass);
  out.holder = -1;
  out.lateral_offset = out.lateral_rate = 0.0;
  kicker.has_ball = false;
  kicker.capture_cooldown = phys.capture_cooldown;
  record(log, "kick", kicker_index, "");
  return out;
}

SonarWorld arena_walls(const Arena& arena) {
  const double x = arena.half_x, y = arena.half_y;
  SonarWorld w;
  w.walls = {{{-x, -y}, {x, -y}}, {{x, -y}, {x, y}}, {{x, y}, {-x, y}}, {{-x, y}, {-x, -y}}};
  return w;
}

SonarScan simulate_sonar(const RobotState& s, const SonarWorld& world, const SonarConfig& cfg,
                         Rng* noise) {
  SonarScan scan;
  const Vec2 o = s.pose.position();
  for (int k = 0; k < kSonarBeams; ++k) {
    const Vec2 dir = Vec2::unit(s.pose.theta() + SonarScan::beam_angle(k));
    double best = cfg.max_range;
    for (const auto& wall : world.walls) {
      const double t = ray_segment(o, dir, wall);
      if (t >= 0.0) best = std::min(best, t);
    }
    for (const auto& d : world.discs) {
      if ((o - d.center).norm() <= d.radius) continue;
      const double t = ray_circle(o, dir, d.center, d.radius);
      if (t >= 0.0) best = std::min(best, t);
    }
    if (world.circular_arena) {
      const double t = ray_circle(o, dir, world.circular_arena->center, world.circular_arena->radius);
      if (t >= 0.0) best = std::min(best, t);
    }
    if (noise) best += noise->gaussian(cfg.noise_sigma);
    scan.ranges[k] = std::clamp(best, 1e-3, cfg.max_range);
  }
  return scan;
}

CameraConfig front_camera() { return {}; }

CameraConfig up_camera() {
  CameraConfig c;
  c.name = "up";
  c.fov = 2.0 * kPi;
  c.max_range = 4.0;
  c.range_sigma = 0.08;
  c.bearing_sigma = 0.03;
  return c;
}

std::optional<BallObservation> observe_ball(const RobotState& s, int observer, const BallState& b,
                                            const CameraConfig& cam, std::span<const Disc> occluders,
                                            double timestamp, Rng* noise) {
  const Vec2 rel = s.pose.to_body(b.position);
  const double dist = rel.norm();
  if (dist <= 0.0 || dist > cam.max_range) return std::nullopt;
  const double bearing = std::atan2(rel.y, rel.x);
  const double half_fov = cam.fov / 2.0;
  if (std::abs(bearing) > half_fov) return std::nullopt;
  for (const auto& d : occluders)
    if (segment_hits_disc(s.pose.position(), b.position, d.center, d.radius)) return std::nullopt;

  BallObservation obs;
  obs.observer = observer;
  obs.timestamp = timestamp;
  obs.range_sigma = cam.range_sigma;
  obs.bearing_sigma = cam.bearing_sigma;
  obs.relative_distance = dist;
  obs.relative_bearing = bearing;
  if (noise) {
    obs.relative_distance = std::max(1e-3, dist + noise->gaussian(cam.range_sigma));
    obs.relative_bearing = bearing + noise->gaussian(cam.bearing_sigma);
  }
  if (half_fov < kPi)
    obs.relative_bearing = std::clamp(obs.relative_bearing, -half_fov, half_fov);
  else
    obs.relative_bearing = wrap_angle(obs.relative_bearing);
  return obs;
}

std::optional<GoalObservation> observe_goal(const RobotState& s, const Goal& goal,
                                            const GoalSensorConfig& cfg, Rng* noise) {
  const Vec2 c = goal.center();
  if ((c - s.pose.position()).norm() > cfg.max_range) return std::nullopt;
  double bearing = s.pose.bearing_to(c);
  if (noise) bearing = wrap_angle(bearing + noise->gaussian(cfg.bearing_sigma));
  return GoalObservation{goal.color, bearing};
}

std::vector<double> default_scan_radii() {
  std::vector<double> r;
  for (int i = 1; i <= 20; ++i) r.push_back(0.25 * i);
  return r;
}

std::vector<TransitionPixel> scan_transitions(const RobotState& s, const FieldModel& field,
                                              const ScanConfig& cfg, Rng* noise) {
  std::vector<TransitionPixel> pixels;
  const Vec2 c = s.pose.position();
  for (double r : cfg.radii) {
    for (const auto& seg : field.segments()) {
      Vec2 hits[2];
      const int n = intersect_circle_segment(c, r, seg, hits);
      for (int i = 0; i < n; ++i) {
        TransitionPixel p = transform_to_robot(hits[i], s.pose);
        if (noise) {
          p.x += noise->gaussian(cfg.noise_sigma);
          p.y += noise->gaussian(cfg.noise_sigma);
        }
        pixels.push_back(p);
      }
    }
  }
  if (noise && cfg.clutter_fraction > 0.0 && cfg.clutter_fraction < 1.0 && !cfg.radii.empty()) {
    const auto n_clutter = static_cast<std::size_t>(
        std::lround(pixels.size() * cfg.clutter_fraction / (1.0 - cfg.clutter_fraction)));
    for (std::size_t i = 0; i < n_clutter; ++i) {
      const auto k = static_cast<std::size_t>(noise->uniform(0.0, 1.0) * cfg.radii.size());
      const double r = cfg.radii[std::min(k, cfg.radii.size() - 1)];
      const double a = noise->uniform(-kPi, kPi);
      pixels.push_back({r * std::cos(a), r * std::sin(a)});
    }
  }
  return pixels;
}

}  // namespace socsim
