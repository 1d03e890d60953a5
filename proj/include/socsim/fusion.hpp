#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "socsim/geometry.hpp"
#include "socsim/localizer.hpp"
#include "socsim/sim.hpp"

namespace socsim {

inline constexpr int kTeamSource = -1;

/// Ball position belief in the field frame.
struct GaussianEstimate {
  Vec2 mean;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  double timestamp = 0.0;
  int source = kTeamSource;  // robot id, or kTeamSource for a fused result
  bool regularized = false;  // a near-singular covariance was patched
};

struct FusionConfig {
  double gate_threshold = 9.0;  // on squared Mahalanobis distance
  double staleness = 1.0;       // s
  bool local_enabled = true;
  bool global_enabled = true;
  double growth_rate = 0.25;       // m^2/s added to each diagonal entry while unseen
  double pose_position_sigma = 0.05;
  double pose_heading_sigma = 0.035;
  double untrusted_factor = 4.0;
  double epsilon = 1e-9;  // diagonal patch for near-singular covariances
};

/// Throws ConfigError for non-positive thresholds, windows or factors below one.
void validate(const FusionConfig& cfg);

/// Polar sighting to a field-frame Gaussian by first-order propagation of the range and
/// bearing noise, plus the robot pose uncertainty.
GaussianEstimate observation_to_estimate(const BallObservation& obs, const PoseEstimate& robot,
                                         const FusionConfig& cfg);

/// Product of the two Gaussians, in information form.
GaussianEstimate fuse_pair(const GaussianEstimate& a, const GaussianEstimate& b, double epsilon = 1e-9);

double mahalanobis2(const GaussianEstimate& a, const GaussianEstimate& b);

enum class GateDecision { Fuse, KeepOwn };

GateDecision disagreement_gate(const GaussianEstimate& a, const GaussianEstimate& b,
                               const FusionConfig& cfg);

/// Combines several sightings taken from one pose (front and up camera). The sensor noise
/// terms are fused and the pose uncertainty, common to all of them, is added once. Without
/// local fusion only the most recent sighting is kept.
GaussianEstimate fuse_local(std::span<const BallObservation> sightings, const PoseEstimate& robot,
                            const FusionConfig& cfg);

enum class BallStatus { Fresh, Propagated, Unknown };

const char* to_string(BallStatus s);

/// One robot's belief about the ball. `last_fresh` is the most recent estimate built from
/// current sightings; `estimate` adds the growth accumulated since then.
struct BallBelief {
  BallStatus status = BallStatus::Unknown;
  GaussianEstimate estimate;
  GaussianEstimate last_fresh;
};

/// Belief of robot `self` given the estimates it holds (at most one per source robot,
/// its own included). Stale estimates are ignored. Fusion is sequential in robot id order
/// with the gate evaluated against the running result.
BallBelief fuse_view(int self, std::span<const GaussianEstimate> estimates, const BallBelief& previous,
                     double now, const FusionConfig& cfg);

/// fuse_view for every robot 0..n-1, all sharing the same estimate set.
std::vector<BallBelief> team_ball(std::span<const GaussianEstimate> estimates,
                                  std::span<const BallBelief> previous, double now, const FusionConfig& cfg);

}  // namespace socsim
