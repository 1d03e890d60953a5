#pragma once

// Independent reference computations shared by the unit tests and the acceptance binary.
// None of them call into the code they check.

#include <cstdint>
#include <vector>

#include "socsim/des.hpp"
#include "socsim/fusion.hpp"
#include "socsim/navigation.hpp"
#include "socsim/random.hpp"

namespace oracle {

/// Posterior of two Gaussian likelihoods by numerical integration on a dense grid.
struct GridMoments {
  double mx = 0, my = 0;
  double cxx = 0, cxy = 0, cyy = 0;
};
GridMoments grid_posterior(const socsim::GaussianEstimate& a, const socsim::GaussianEstimate& b, int n = 400);

/// (ma - mb)^T (Ca + Cb)^{-1} (ma - mb) by the explicit 2x2 inverse.
double mahalanobis2(const socsim::GaussianEstimate& a, const socsim::GaussianEstimate& b);

/// Central differences of the potential with respect to position.
socsim::Vec2 fd_gradient(socsim::Vec2 p, double theta, socsim::Vec2 goal,
                         const std::vector<socsim::Obstacle>& obstacles, const socsim::PotentialParams& params,
                         double h = 1e-6);

/// Dense Gaussian elimination with partial pivoting; `a` is row-major n×n.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b);

/// Expected hitting times of the marked set under a fixed per-state event configuration,
/// built from the raw transition list. +inf where the marked set is not reached surely.
std::vector<double> first_passage(const socsim::GameModel& m, const std::vector<std::vector<int>>& config);

/// Every stationary policy: per controller and state, one enabled controllable event or none.
/// Returns the per-state minimum of the first-passage values over all of them.
struct Enumeration {
  std::vector<double> best;
  long policies = 0;
};
Enumeration enumerate_policies(const socsim::GameModel& m);

/// Reachable product states by breadth-first search over component state tuples.
int reachable_states(const std::vector<socsim::PlayerFSA>& fsas, const socsim::SyncTable& sync);

/// Random model with up to `max_states` states, one or two absorbing marked states,
/// controllers "a" and "b", and at most three controllable options per state.
socsim::GameModel random_model(socsim::Rng& rng, int max_states);

}  // namespace oracle
