#include "socsim/fusion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "socsim/error.hpp"

namespace socsim {

void validate(const FusionConfig& cfg) {
  if (!(cfg.gate_threshold > 0.0)) throw ConfigError("fusion: gate_threshold must be positive");
  if (!(cfg.staleness > 0.0)) throw ConfigError("fusion: staleness must be positive");
  if (!(cfg.growth_rate >= 0.0)) throw ConfigError("fusion: growth_rate must be non-negative");
  if (!(cfg.untrusted_factor >= 1.0)) throw ConfigError("fusion: untrusted_factor must be >= 1");
  if (!(cfg.pose_position_sigma >= 0.0) || !(cfg.pose_heading_sigma >= 0.0))
    throw ConfigError("fusion: pose sigmas must be non-negative");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("fusion: epsilon must be positive");
}

namespace {

// Field-frame sighting with the sensor noise only, from the believed robot pose.
GaussianEstimate sensor_estimate(const BallObservation& obs, const Pose& p) {
  const double r = obs.relative_distance;
  const double phi = p.theta() + obs.relative_bearing;
  const double c = std::cos(phi), s = std::sin(phi);

  GaussianEstimate e;
  e.mean = {p.x + r * c, p.y + r * s};
  e.timestamp = obs.timestamp;
  e.source = obs.observer;

  Eigen::Matrix2d J;
  J << c, -r * s,
       s, r * c;
  const Eigen::Vector2d sig(obs.range_sigma * obs.range_sigma, obs.bearing_sigma * obs.bearing_sigma);
  e.cov = J * sig.asDiagonal() * J.transpose();
  return e;
}

// Pose uncertainty: translation adds directly, heading error swings the point sideways.
// Sightings from one pose share this error, so it is added once, after local fusion.
void add_pose_uncertainty(GaussianEstimate& e, const PoseEstimate& robot, const FusionConfig& cfg) {
  const Vec2 off = e.mean - robot.pose.position();
  const Eigen::Vector2d swing(-off.y, off.x);
  e.cov += cfg.pose_position_sigma * cfg.pose_position_sigma * Eigen::Matrix2d::Identity();
  e.cov += cfg.pose_heading_sigma * cfg.pose_heading_sigma * swing * swing.transpose();
  if (!robot.trusted) e.cov *= cfg.untrusted_factor;
  e.cov = 0.5 * (e.cov + e.cov.transpose());
}

}  // namespace

GaussianEstimate observation_to_estimate(const BallObservation& obs, const PoseEstimate& robot,
                                         const FusionConfig& cfg) {
  GaussianEstimate e = sensor_estimate(obs, robot.pose);
  add_pose_uncertainty(e, robot, cfg);
  return e;
}

namespace {

Eigen::Matrix2d inverse_spd(const Eigen::Matrix2d& m, double epsilon, bool& patched) {
  Eigen::Matrix2d a = 0.5 * (m + m.transpose());
  const double tr = a.trace();
  const double scale = tr > 0.0 ? tr : 1.0;
  if (a.determinant() <= epsilon * scale * scale || a(0, 0) <= 0.0 || a(1, 1) <= 0.0) {
    a.diagonal().array() += epsilon * scale;
    patched = true;
  }
  return a.inverse();
}

}  // namespace

GaussianEstimate fuse_pair(const GaussianEstimate& a, const GaussianEstimate& b, double epsilon) {
  bool patched = false;
  const Eigen::Matrix2d ia = inverse_spd(a.cov, epsilon, patched);
  const Eigen::Matrix2d ib = inverse_spd(b.cov, epsilon, patched);
  const Eigen::Matrix2d info = ia + ib;
  const Eigen::Vector2d ma(a.mean.x, a.mean.y), mb(b.mean.x, b.mean.y);

  GaussianEstimate out;
  out.cov = info.inverse();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  const Eigen::Vector2d m = out.cov * (ia * ma + ib * mb);
  out.mean = {m(0), m(1)};
  out.timestamp = std::max(a.timestamp, b.timestamp);
  out.source = a.source == b.source ? a.source : kTeamSource;
  out.regularized = patched || a.regularized || b.regularized;
  return out;
}

double mahalanobis2(const GaussianEstimate& a, const GaussianEstimate& b) {
  const Eigen::Vector2d d(a.mean.x - b.mean.x, a.mean.y - b.mean.y);
  const Eigen::Matrix2d s = a.cov + b.cov;
  return d.dot(s.ldlt().solve(d));
}

GateDecision disagreement_gate(const GaussianEstimate& a, const GaussianEstimate& b,
                               const FusionConfig& cfg) {
  return mahalanobis2(a, b) <= cfg.gate_threshold ? GateDecision::Fuse : GateDecision::KeepOwn;
}

GaussianEstimate fuse_local(std::span<const BallObservation> sightings, const PoseEstimate& robot,
                            const FusionConfig& cfg) {
  if (sightings.empty()) throw std::invalid_argument("fuse_local: no sightings");
  if (!cfg.local_enabled) {
    const auto latest = std::max_element(sightings.begin(), sightings.end(),
                                         [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; });
    return observation_to_estimate(*latest, robot, cfg);
  }
  // The shared pose error cancels in the difference of two sightings, so the gate and the
  // product use the sensor noise alone.
  GaussianEstimate acc = sensor_estimate(sightings.front(), robot.pose);
  for (std::size_t i = 1; i < sightings.size(); ++i) {
    const GaussianEstimate next = sensor_estimate(sightings[i], robot.pose);
    if (disagreement_gate(acc, next, cfg) == GateDecision::Fuse) acc = fuse_pair(acc, next, cfg.epsilon);
  }
  add_pose_uncertainty(acc, robot, cfg);
  return acc;
}

const char* to_string(BallStatus s) {
  switch (s) {
    case BallStatus::Fresh: return "fresh";
    case BallStatus::Propagated: return "propagated";
    case BallStatus::Unknown: return "unknown";
  }
  return "?";
}

BallBelief fuse_view(int self, std::span<const GaussianEstimate> estimates, const BallBelief& previous,
                     double now, const FusionConfig& cfg) {
  std::vector<const GaussianEstimate*> fresh;
  for (const auto& e : estimates) {
    if (e.timestamp > now + 1e-9 || now - e.timestamp > cfg.staleness) continue;
    if (!cfg.global_enabled && e.source != self) continue;
    fresh.push_back(&e);
  }
  std::stable_sort(fresh.begin(), fresh.end(), [](auto* x, auto* y) { return x->source < y->source; });

  BallBelief out;
  if (!fresh.empty()) {
    auto own = std::find_if(fresh.begin(), fresh.end(), [&](auto* e) { return e->source == self; });
    GaussianEstimate acc = own != fresh.end() ? **own : *fresh.front();
    const GaussianEstimate* seed = own != fresh.end() ? *own : fresh.front();
    for (auto* e : fresh) {
      if (e == seed) continue;
      if (disagreement_gate(acc, *e, cfg) == GateDecision::Fuse) acc = fuse_pair(acc, *e, cfg.epsilon);
    }
    out.status = BallStatus::Fresh;
    out.estimate = acc;
    out.last_fresh = acc;
    return out;
  }
  if (previous.status == BallStatus::Unknown) return out;

  out.status = BallStatus::Propagated;
  out.last_fresh = previous.last_fresh;
  out.estimate = previous.last_fresh;
  const double age = std::max(0.0, now - previous.last_fresh.timestamp);
  out.estimate.cov += cfg.growth_rate * age * Eigen::Matrix2d::Identity();
  return out;
}

std::vector<BallBelief> team_ball(std::span<const GaussianEstimate> estimates,
                                  std::span<const BallBelief> previous, double now, const FusionConfig& cfg) {
  std::vector<BallBelief> out;
  out.reserve(previous.size());
  for (std::size_t i = 0; i < previous.size(); ++i)
    out.push_back(fuse_view(static_cast<int>(i), estimates, previous[i], now, cfg));
  return out;
}

}  // namespace socsim
