#include "socsim/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "socsim/error.hpp"

namespace socsim {

void validate(const PotentialParams& p) {
  if (!(p.k_att > 0.0) || !(p.k_rep > 0.0)) throw ConfigError("navigation: gains must be positive");
  if (!(p.beta >= 0.0)) throw ConfigError("navigation: beta must be non-negative");
  if (!(p.d0 > p.robot_radius)) throw ConfigError("navigation: d0 must exceed the robot radius");
  if (!(p.dt > 0.0) || !(p.a_max > 0.0) || !(p.v_max > 0.0) || !(p.omega_max > 0.0))
    throw ConfigError("navigation: limits and dt must be positive");
}

double directional_weight(double alpha, double beta) {
  if (beta == 0.0) return 1.0;
  return std::pow(0.5 * (1.0 + std::cos(alpha)), beta);
}

namespace {

struct Repulsion {
  double value = 0.0;
  Vec2 gradient;
  bool contact = false;
};

Repulsion repulsion(Vec2 p, double theta, const Obstacle& o, const PotentialParams& prm) {
  Repulsion out;
  const Vec2 delta = o.center - p;
  const double dist = delta.norm();
  const double s = dist - o.radius - prm.robot_radius;
  const double s0 = prm.d0 - prm.robot_radius;
  if (s <= 0.0) {
    out.contact = true;
    out.value = std::numeric_limits<double>::infinity();
    // Push straight out; magnitude is irrelevant once the command saturates.
    out.gradient = dist > 0.0 ? delta / dist * 1e6 : Vec2{1e6, 0.0};
    return out;
  }
  if (s >= s0) return out;

  const double alpha = wrap_angle(delta.angle() - theta);
  const double f = 1.0 / s - 1.0 / s0;
  const double w = directional_weight(alpha, prm.beta);
  out.value = 0.5 * prm.k_rep * w * f * f;

  // d s / d p = -delta / |delta|;  d alpha / d p = (delta.y, -delta.x) / |delta|^2
  const Vec2 ds = delta * (-1.0 / dist);
  const Vec2 dalpha = Vec2{delta.y, -delta.x} / (dist * dist);
  double dw = 0.0;
  if (prm.beta != 0.0) {
    const double base = 0.5 * (1.0 + std::cos(alpha));
    if (base > 1e-12) dw = prm.beta * std::pow(base, prm.beta - 1.0) * (-0.5 * std::sin(alpha));
  }
  out.gradient = dalpha * (0.5 * prm.k_rep * dw * f * f) + ds * (prm.k_rep * w * f * (-1.0 / (s * s)));
  return out;
}

}  // namespace

double potential(Vec2 p, double theta, Vec2 goal, std::span<const Obstacle> obstacles,
                 const PotentialParams& params) {
  double u = 0.5 * params.k_att * (p - goal).squared_norm();
  for (const auto& o : obstacles) u += repulsion(p, theta, o, params).value;
  return u;
}

Vec2 potential_gradient(Vec2 p, double theta, Vec2 goal, std::span<const Obstacle> obstacles,
                        const PotentialParams& params) {
  Vec2 g = (p - goal) * params.k_att;
  for (const auto& o : obstacles) g += repulsion(p, theta, o, params).gradient;
  return g;
}

NavCommand potential_command(const Pose& pose, double v, Vec2 goal, std::span<const Obstacle> obstacles,
                             const PotentialParams& params) {
  const Vec2 force = -potential_gradient(pose.position(), pose.theta(), goal, obstacles, params);
  const Vec2 fb = rotate(force, -pose.theta());

  NavCommand cmd;
  const double a = std::clamp(fb.x - params.damping * v, -params.a_max, params.a_max);
  cmd.v_cmd = std::clamp(v + a * params.dt, 0.0, params.v_max);
  cmd.accel = (cmd.v_cmd - v) / params.dt;
  const double heading_error = (fb.x == 0.0 && fb.y == 0.0) ? 0.0 : std::atan2(fb.y, fb.x);
  cmd.omega_cmd = std::clamp(params.k_omega * heading_error, -params.omega_max, params.omega_max);
  for (const auto& o : obstacles)
    if ((goal - o.center).norm() <= o.radius) cmd.unreachable = true;
  return cmd;
}

double dribble_limit(double v, double a, const DribbleParams& p) {
  return std::max(0.0, p.c0 + p.c1 * a / std::max(v, p.v_min));
}

namespace {

double braking_cap(const Pose& pose, std::span<const Obstacle> obstacles, const GuideParams& gp) {
  const PotentialParams& pp = gp.potential;
  double cap = pp.v_max;
  for (const auto& o : obstacles) {
    const Vec2 delta = o.center - pose.position();
    const double alpha = wrap_angle(delta.angle() - pose.theta());
    if (std::cos(alpha) <= -0.5) continue;  // well behind: forward motion opens the gap
    const double s = delta.norm() - o.radius - pp.robot_radius - gp.brake_margin;
    cap = std::min(cap, std::sqrt(2.0 * pp.a_max * std::max(0.0, s)));
  }
  return cap;
}

}  // namespace

NavCommand shape_command(const NavCommand& raw, const Pose& pose, double v, GuideMode mode,
                         std::span<const Obstacle> obstacles, const GuideParams& params) {
  const PotentialParams& pp = params.potential;
  const double cap = braking_cap(pose, obstacles, params);
  NavCommand out = raw;
  out.v_cmd = std::min(raw.v_cmd, cap);

  if (mode == GuideMode::Dribble) {
    const DribbleParams& dp = params.dribble;
    double a = (out.v_cmd - v) / pp.dt;
    const double w = std::abs(out.omega_cmd);
    if (w > dribble_limit(v, a, dp) && dp.c1 > 0.0) {
      // Speed up just enough that the wanted turn keeps the ball, within the platform limits.
      const double a_need = std::min((w - dp.c0) * std::max(v, dp.v_min) / dp.c1, pp.a_max);
      if (a_need > a) {
        out.v_cmd = std::min({v + a_need * pp.dt, pp.v_max, cap});
        out.v_cmd = std::max(out.v_cmd, 0.0);
        a = (out.v_cmd - v) / pp.dt;
      }
    }
    const double lim = dribble_limit(v, a, dp);
    out.omega_cmd = std::clamp(out.omega_cmd, -lim, lim);
  }
  out.accel = (out.v_cmd - v) / pp.dt;
  return out;
}

void Guide::observe(const std::optional<PoseEstimate>& fresh, const Pose& odom) {
  if (pose_) pose_ = pose_->compose(odom);
  if (fresh && (fresh->trusted || !pose_)) pose_ = fresh->pose;
}

GuideOutput Guide::command(double v, const Pose& target, GuideMode mode, std::span<const Obstacle> obstacles,
                           const GuideParams& params, double now) {
  GuideOutput out;
  if (!pose_) {
    out.standby = true;
    return out;
  }
  const Pose p = *pose_;
  out.believed = p;
  const PotentialParams& pp = params.potential;

  const double dist = (target.position() - p.position()).norm();
  if (dist <= params.arrive_tol) {
    best_dist_ = dist;
    best_time_ = now;
    escape_until_ = -1.0;
    NavCommand hold;
    hold.v_cmd = 0.0;
    hold.omega_cmd = std::clamp(pp.k_omega * wrap_angle(target.theta() - p.theta()), -pp.omega_max, pp.omega_max);
    out.cmd = shape_command(hold, p, v, mode, obstacles, params);
    return out;
  }

  if (now < escape_until_) {
    out.escaping = true;
  } else {
    if (dist < best_dist_ - params.stall_progress) {
      best_dist_ = dist;
      best_time_ = now;
    } else if (now - best_time_ > params.stall_time) {
      escape_goal_ = p.position() + Vec2::unit(rng_.uniform(-kPi, kPi)) * params.escape_distance;
      escape_until_ = now + params.escape_time;
      best_dist_ = std::numeric_limits<double>::infinity();
      best_time_ = escape_until_;
      out.escaping = true;
    }
  }

  const Vec2 goal = out.escaping ? escape_goal_ : target.position();
  const NavCommand raw = potential_command(p, v, goal, obstacles, pp);
  out.cmd = shape_command(raw, p, v, mode, obstacles, params);
  out.cmd.unreachable = false;
  for (const auto& o : obstacles)
    if ((target.position() - o.center).norm() <= o.radius) out.cmd.unreachable = true;
  return out;
}

}  // namespace socsim
