#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "oracles.hpp"
#include "socsim/config.hpp"
#include "socsim/error.hpp"
#include "socsim/experiments.hpp"
#include "socsim/navigation.hpp"
#include "socsim/sim.hpp"

using namespace socsim;

namespace {

std::vector<Obstacle> random_obstacles(Rng& rng, Vec2 robot, int n) {
  std::vector<Obstacle> obs;
  while (static_cast<int>(obs.size()) < n) {
    const Obstacle o{{rng.uniform(-4, 4), rng.uniform(-3, 3)}, rng.uniform(0.15, 0.3)};
    if ((o.center - robot).norm() > o.radius + 0.5) obs.push_back(o);
  }
  return obs;
}

// Fraction of trials in which a held ball survives 1.5 s of driving at (v, a) and turn rate
// factor * dribble_limit.
double retention(const DribbleParams& dp, double factor, Rng& rng, int trials) {
  const BallPhysics phys;
  const RobotLimits lim;
  int kept = 0;
  for (int i = 0; i < trials; ++i) {
    const double v0 = rng.uniform(0.3, 0.9), a = rng.uniform(0.0, 0.4), dt = 0.01;
    RobotState r;
    r.v = v0;
    r.has_ball = true;
    BallState b;
    b.holder = 0;
    b.position = {hold_distance(lim, phys), 0.0};
    std::vector<RobotState> robots{r};
    bool lost = false;
    for (int k = 0; k < 150 && !lost; ++k) {
      const double v = robots[0].v;
      const double w = factor * dribble_limit(v, a, dp);
      robots[0] = step_robot(robots[0], {v + a * dt, w}, dt, lim);
      b = step_ball(b, robots, dt, phys, lim, Arena{});
      lost = b.holder != 0;
    }
    kept += !lost;
  }
  return static_cast<double>(kept) / trials;
}

}  // namespace

TEST_SUITE("navigation") {

TEST_CASE("pure attraction drives straight ahead") {
  const PotentialParams p;
  const NavCommand c = potential_command(Pose{0, 0, 0}, 0.0, {3, 0}, {}, p);
  CHECK(c.omega_cmd == doctest::Approx(0.0));
  CHECK(c.accel > 0.0);
  CHECK_FALSE(c.unreachable);
}

TEST_CASE("front obstacles repel harder than abeam ones") {
  const PotentialParams p;
  const Vec2 goal{-3, 0};
  const Vec2 att = potential_gradient({0, 0}, 0.0, goal, {}, p);
  const std::vector<Obstacle> ahead{{{0.8, 0}, 0.2}};
  const std::vector<Obstacle> abeam{{{0, 0.8}, 0.2}};
  const double front = (potential_gradient({0, 0}, 0.0, goal, ahead, p) - att).norm();
  const double side = (potential_gradient({0, 0}, 0.0, goal, abeam, p) - att).norm();
  CHECK(front > side);
  CHECK(directional_weight(0.0, 2.0) == doctest::Approx(1.0));
  CHECK(directional_weight(kPi, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("gradient and command agree with finite differences") {
  Rng rng(13);
  PotentialParams p;
  for (int i = 0; i < 200; ++i) {
    const Vec2 pos{rng.uniform(-4, 4), rng.uniform(-3, 3)};
    const double th = rng.uniform(-kPi, kPi), v = rng.uniform(0, 1.2);
    const Vec2 goal{rng.uniform(-5, 5), rng.uniform(-3.5, 3.5)};
    const auto obs = random_obstacles(rng, pos, 4);
    const Vec2 fd = oracle::fd_gradient(pos, th, goal, obs, p);
    const Vec2 an = potential_gradient(pos, th, goal, obs, p);
    CHECK((an - fd).norm() <= 1e-4 * std::max(fd.norm(), 1e-6));

    const Vec2 fb = rotate(-fd, -th);
    const double a = std::clamp(fb.x - p.damping * v, -p.a_max, p.a_max);
    const double v_cmd = std::clamp(v + a * p.dt, 0.0, p.v_max);
    const double w = std::clamp(p.k_omega * std::atan2(fb.y, fb.x), -p.omega_max, p.omega_max);
    const NavCommand c = potential_command(Pose{pos, th}, v, goal, obs, p);
    CHECK(std::abs(c.v_cmd - v_cmd) <= 1e-4 * std::max(1.0, std::abs(v_cmd)));
    CHECK(std::abs(c.omega_cmd - w) <= 1e-4 * std::max(1.0, std::abs(w)));
  }
}

TEST_CASE("zero front weighting is isotropic") {
  Rng rng(14);
  PotentialParams p;
  p.beta = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec2 pos{rng.uniform(-4, 4), rng.uniform(-3, 3)};
    const auto obs = random_obstacles(rng, pos, 3);
    const Vec2 goal{1, 1};
    CHECK(potential(pos, rng.uniform(-kPi, kPi), goal, obs, p) ==
          potential(pos, rng.uniform(-kPi, kPi), goal, obs, p));
  }
}

TEST_CASE("contact makes the potential infinite and goals inside obstacles unreachable") {
  const PotentialParams p;
  const std::vector<Obstacle> obs{{{0.3, 0}, 0.2}};
  CHECK(std::isinf(potential({0, 0}, 0.0, {3, 0}, obs, p)));
  const std::vector<Obstacle> on_goal{{{3, 0}, 0.3}};
  CHECK(potential_command(Pose{0, 0, 0}, 0.0, {3, 0}, on_goal, p).unreachable);
}

TEST_CASE("dribble limit") {
  const DribbleParams d;
  for (double v : {0.0, 0.3, 1.0, 1.5}) CHECK(dribble_limit(v, 0.0, d) == doctest::Approx(d.c0));
  CHECK(dribble_limit(0.8, -0.1, d) < d.c0);
  CHECK(dribble_limit(0.1, -10.0, d) == 0.0);
}

TEST_CASE("dribble clamp is exact") {
  Rng rng(15);
  GuideParams gp;
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(0, 1.4);
    NavCommand raw;
    raw.v_cmd = std::clamp(v + rng.uniform(-0.03, 0.03), 0.0, gp.potential.v_max);
    raw.omega_cmd = rng.uniform(-3, 3);
    const NavCommand out = shape_command(raw, Pose{0, 0, 0}, v, GuideMode::Dribble, {}, gp);
    const double lim = dribble_limit(v, out.accel, gp.dribble);
    CHECK(std::abs(out.omega_cmd) <= lim + 1e-9);
    if (std::abs(raw.omega_cmd) > lim) CHECK(std::abs(std::abs(out.omega_cmd) - lim) <= 1e-9);
  }
}

TEST_CASE("the dribble limit separates kept and lost balls") {
  Rng rng(16);
  const DribbleParams dp;
  CHECK(retention(dp, 0.95, rng, 200) >= 0.95);
  CHECK(1.0 - retention(dp, 1.3, rng, 200) >= 0.95);
}

TEST_CASE("trusted estimate resets the pose exactly") {
  Guide g;
  g.observe(PoseEstimate{Pose{0, 0, 0}, 1, 1, true}, Pose{});
  g.observe(std::nullopt, Pose{0.1, 0.0, 0.05});
  const PoseEstimate fresh{Pose{1.234, -0.5, 0.7}, 1, 1, true};
  g.observe(fresh, Pose{0.1, 0.0, 0.0});
  REQUIRE(g.pose());
  CHECK(*g.pose() == fresh.pose);

  const PoseEstimate weak{Pose{3, 3, 3}, 0.1, 0.1, false};
  g.observe(weak, Pose{});
  CHECK(*g.pose() == fresh.pose);
}

TEST_CASE("reset error does not depend on the drift before it") {
  for (double drift : {0.001, 0.05}) {
    Rng rng(3);
    RobotState truth;
    Guide g;
    g.observe(PoseEstimate{truth.pose, 1, 1, true}, Pose{});
    for (int k = 0; k < 1000; ++k) {
      const RobotState next = step_robot(truth, {0.5, 0.2}, 0.01, {});
      const Pose odom = truth.pose.inverse().compose(next.pose);
      g.observe(std::nullopt, Pose{odom.x * (1 + rng.gaussian(drift)), odom.y, odom.theta() + rng.gaussian(drift)});
      truth = next;
    }
    const Pose loc{truth.pose.x + 0.03, truth.pose.y - 0.02, truth.pose.theta() + 0.01};
    g.observe(PoseEstimate{loc, 1, 1, true}, Pose{});
    CHECK((g.pose()->position() - truth.pose.position()).norm() ==
          doctest::Approx((loc.position() - truth.pose.position()).norm()));
  }
}

TEST_CASE("closed loop never touches an obstacle") {
  const RunConfig cfg = make_run_config(nlohmann::json::object());
  const NavigationStudy s = navigation_study(cfg, 100, 21);
  CHECK(s.contacts == 0);
  CHECK(s.max_gradient_error <= 1e-4);
  CHECK(s.isotropy_deviation == 0.0);
}

TEST_CASE("parameter checks") {
  PotentialParams p;
  p.d0 = 0.1;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = {};
  p.beta = -1;
  CHECK_THROWS_AS(validate(p), ConfigError);
}

}  // TEST_SUITE
