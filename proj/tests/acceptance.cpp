// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Every tolerance below is fixed here and is not read from configuration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "socsim/config.hpp"
#include "socsim/des.hpp"
#include "socsim/experiments.hpp"
#include "socsim/fusion.hpp"
#include "socsim/localizer.hpp"
#include "socsim/match.hpp"
#include "socsim/navigation.hpp"
#include "socsim/replay.hpp"

using namespace socsim;
using nlohmann::json;

namespace {

constexpr double kDeg = kPi / 180.0;

// Localization.
constexpr int kTimingFrames = 500;
constexpr double kMeanFrameBudget = 0.013;  // s
constexpr int kAccuracyPoses = 100;
constexpr double kPositionTol = 0.05;       // m
constexpr double kHeadingTol = 2.0 * kDeg;
constexpr double kCleanShare = 0.95;
constexpr double kClutterShare = 0.90;
constexpr double kClutter = 0.30;

// Fusion.
constexpr int kFusionPairs = 100;
constexpr double kGridTol = 1e-3;
constexpr int kGatePairs = 10000;
constexpr int kFusionFrames = 500;

// Navigation.
constexpr int kNavScenes = 1000;
constexpr double kGradientTol = 1e-4;  // relative
constexpr double kClampTol = 1e-9;

// DES.
constexpr int kDesModels = 200;
constexpr int kDesMaxStates = 10;
constexpr double kSolverTol = 1e-8;
constexpr int kEpisodes = 100000;
constexpr double kMcSigmas = 3.0;

// Behavior.
constexpr int kMatches = 20;
constexpr double kMatchSeconds = 60.0;
constexpr double kLoss = 0.10;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

void report(int n, const std::string& title, const Verdict& v, int& failures) {
  std::printf("criterion %d %s: %s;%s\n", n, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.str().c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

bool accurate(const LocalizationSample& s) {
  const double dp = (s.result.pose.position() - s.truth.position()).norm();
  const double dh = angle_distance(s.result.pose.theta(), s.truth.theta());
  return dp <= kPositionTol && dh <= kHeadingTol;
}

std::optional<GoalObservation> nearest_goal(const Pose& p, const FieldModel& f) {
  std::optional<GoalObservation> best;
  for (GoalColor c : {GoalColor::Blue, GoalColor::Yellow}) {
    const double b = p.bearing_to(f.goal(c).center());
    if (!best || std::abs(b) < std::abs(best->bearing)) best = GoalObservation{c, b};
  }
  return best;
}

Verdict localization_runtime(const RunConfig& cfg) {
  Verdict v;
  const auto s = localization_samples(cfg, kTimingFrames, cfg.sensors.scan.clutter_fraction, 101);
  double total = 0;
  for (const auto& x : s) total += x.seconds;
  const double mean = total / s.size();
  v.detail << " mean " << mean * 1e3 << " ms over " << s.size() << " frames (limit " << kMeanFrameBudget * 1e3 << " ms)";
  v.require(static_cast<int>(s.size()) == kTimingFrames && mean <= kMeanFrameBudget, "runtime");
  return v;
}

Verdict localization_accuracy(const RunConfig& cfg) {
  Verdict v;
  auto share = [](const std::vector<LocalizationSample>& s) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), accurate)) / s.size();
  };
  const double clean = share(localization_samples(cfg, kAccuracyPoses, 0.0, 202));
  const double noisy = share(localization_samples(cfg, kAccuracyPoses, kClutter, 303));
  v.detail << " clean " << clean * 100 << "%, 30% clutter " << noisy * 100 << "%";
  v.require(clean >= kCleanShare, "clean share");
  v.require(noisy >= kClutterShare, "clutter share");

  // Rotating every pixel and the goal bearing by delta must turn the estimate by -delta.
  const FieldModel field = make_field(cfg.field);
  Rng rng(404);
  int bad = 0;
  double worst = 0;
  const double hx = field.length() / 2 - 0.3, hy = field.width() / 2 - 0.3;
  for (int i = 0; i < kAccuracyPoses; ++i) {
    RobotState r;
    r.pose = Pose{rng.uniform(-hx, hx), rng.uniform(-hy, hy), rng.uniform(-kPi, kPi)};
    const double delta = rng.uniform(-kPi, kPi);
    ScanConfig sc = cfg.sensors.scan;
    sc.clutter_fraction = 0.0;
    const auto px = scan_transitions(r, field, sc);
    std::vector<TransitionPixel> turned;
    for (const auto& p : px) {
      const Vec2 q = rotate(p.vec(), delta);
      turned.push_back({q.x, q.y});
    }
    auto g = nearest_goal(r.pose, field), g2 = g;
    if (g2) g2->bearing = wrap_angle(g2->bearing + delta);
    const PoseEstimate a = localize(px, field, g, {}, cfg.localizer);
    const PoseEstimate b = localize(turned, field, g2, {}, cfg.localizer);
    const double err = angle_distance(b.pose.theta(), a.pose.theta() - delta);
    worst = std::max(worst, err);
    if (err > cfg.localizer.accumulator.phi_resolution) ++bad;
  }
  v.detail << ", rotation covariance worst " << worst / kDeg << " deg";
  v.require(bad == 0, "rotation covariance");
  return v;
}

Verdict fusion(const RunConfig& cfg) {
  Verdict v;
  Rng rng(505);
  auto random_est = [&] {
    GaussianEstimate e;
    e.mean = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double a = rng.uniform(0.05, 0.5), b = rng.uniform(0.05, 0.5), t = rng.uniform(0, kPi);
    Eigen::Matrix2d R;
    R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    e.cov = R * Eigen::Vector2d(a * a, b * b).asDiagonal() * R.transpose();
    return e;
  };
  double worst = 0;
  for (int i = 0; i < kFusionPairs; ++i) {
    const GaussianEstimate a = random_est(), b = random_est();
    const GaussianEstimate f = fuse_pair(a, b);
    const oracle::GridMoments g = oracle::grid_posterior(a, b);
    worst = std::max({worst, std::abs(f.mean.x - g.mx), std::abs(f.mean.y - g.my), std::abs(f.cov(0, 0) - g.cxx),
                      std::abs(f.cov(0, 1) - g.cxy), std::abs(f.cov(1, 1) - g.cyy)});
  }
  v.detail << " grid posterior max deviation " << worst;
  v.require(worst <= kGridTol, "grid posterior");

  int disagreements = 0;
  for (int i = 0; i < kGatePairs; ++i) {
    GaussianEstimate a = random_est(), b = random_est();
    b.mean = a.mean + Vec2{rng.gaussian(1.0), rng.gaussian(1.0)};
    const bool fuse = oracle::mahalanobis2(a, b) <= cfg.fusion.gate_threshold;
    if (fuse != (disagreement_gate(a, b, cfg.fusion) == GateDecision::Fuse)) ++disagreements;
  }
  v.detail << ", gate disagreements " << disagreements << "/" << kGatePairs;
  v.require(disagreements == 0, "gate");

  const FusionStudy s = fusion_study(cfg, kFusionFrames, 606);
  v.detail << ", fused error " << s.fused_error << " m vs unfused";
  bool better = true;
  for (double e : s.unfused_error) {
    v.detail << " " << e;
    better = better && s.fused_error <= e;
  }
  v.detail << " over " << s.frames << " frames";
  v.require(better && s.frames >= kFusionFrames, "fused improvement");
  return v;
}

Verdict navigation(const RunConfig& cfg) {
  Verdict v;
  Rng rng(707);
  PotentialParams p = cfg.guide.potential;
  double worst_grad = 0, worst_cmd = 0;
  for (int i = 0; i < kNavScenes; ++i) {
    const Vec2 pos{rng.uniform(-5, 5), rng.uniform(-3.5, 3.5)};
    const double th = rng.uniform(-kPi, kPi), speed = rng.uniform(0, p.v_max);
    const Vec2 goal{rng.uniform(-5, 5), rng.uniform(-3.5, 3.5)};
    std::vector<Obstacle> obs;
    while (obs.size() < 5) {
      const Obstacle o{{rng.uniform(-5, 5), rng.uniform(-3.5, 3.5)}, rng.uniform(0.1, 0.3)};
      if ((o.center - pos).norm() > o.radius + p.robot_radius + 0.05) obs.push_back(o);
    }
    const Vec2 fd = oracle::fd_gradient(pos, th, goal, obs, p);
    const Vec2 an = potential_gradient(pos, th, goal, obs, p);
    worst_grad = std::max(worst_grad, (an - fd).norm() / std::max(fd.norm(), 1e-6));

    const Vec2 fb = rotate(-fd, -th);
    const double a = std::clamp(fb.x - p.damping * speed, -p.a_max, p.a_max);
    const double v_cmd = std::clamp(speed + a * p.dt, 0.0, p.v_max);
    const double w = std::clamp(p.k_omega * std::atan2(fb.y, fb.x), -p.omega_max, p.omega_max);
    const NavCommand c = potential_command(Pose{pos, th}, speed, goal, obs, p);
    worst_cmd = std::max({worst_cmd, std::abs(c.v_cmd - v_cmd) / std::max(1.0, std::abs(v_cmd)),
                          std::abs(c.omega_cmd - w) / std::max(1.0, std::abs(w))});
  }
  v.detail << " gradient rel err " << worst_grad << ", command rel err " << worst_cmd;
  v.require(worst_grad <= kGradientTol && worst_cmd <= kGradientTol, "finite differences");

  PotentialParams iso = p;
  iso.beta = 0.0;
  int aniso = 0;
  for (int i = 0; i < kNavScenes; ++i) {
    const Vec2 pos{rng.uniform(-5, 5), rng.uniform(-3.5, 3.5)};
    const std::vector<Obstacle> obs{{{pos.x + rng.uniform(0.6, 1.5), pos.y + rng.uniform(-0.5, 0.5)}, 0.2}};
    if (potential(pos, rng.uniform(-kPi, kPi), {0, 0}, obs, iso) != potential(pos, rng.uniform(-kPi, kPi), {0, 0}, obs, iso))
      ++aniso;
  }
  v.detail << ", beta=0 anisotropic scenes " << aniso;
  v.require(aniso == 0, "isotropy");

  double excess = 0;
  for (int i = 0; i < kNavScenes; ++i) {
    const double speed = rng.uniform(0, p.v_max);
    NavCommand raw;
    raw.v_cmd = std::clamp(speed + rng.uniform(-0.03, 0.03), 0.0, p.v_max);
    raw.omega_cmd = rng.uniform(-p.omega_max, p.omega_max);
    const NavCommand out = shape_command(raw, Pose{}, speed, GuideMode::Dribble, {}, cfg.guide);
    const double lim = dribble_limit(speed, out.accel, cfg.guide.dribble);
    excess = std::max(excess, std::abs(out.omega_cmd) - lim);
    if (std::abs(raw.omega_cmd) > lim) excess = std::max(excess, std::abs(std::abs(out.omega_cmd) - lim));
  }
  v.detail << ", dribble clamp error " << std::max(0.0, excess);
  v.require(excess <= kClampTol, "dribble clamp");

  const NavigationStudy s = navigation_study(cfg, kNavScenes, 808);
  v.detail << ", closed loop contacts " << s.contacts << "/" << s.scenes;
  v.require(s.contacts == 0 && s.scenes == kNavScenes, "closed loop");
  return v;
}

GameModel one_step(double rate) {
  GameModel m;
  m.components = {"a"};
  m.state_labels = {{"s0"}, {"s1"}};
  m.events = {{"go", EventClass::Controllable, rate, "a"}};
  m.transitions = {{0, 0, 1}};
  m.marked = {false, true};
  return m;
}

bool close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

// |sample mean - expected| in standard errors.
double mc_sigmas(const DesSamples& d, double expected) {
  const double n = static_cast<double>(d.times.size());
  const double mu = std::accumulate(d.times.begin(), d.times.end(), 0.0) / n;
  double ss = 0;
  for (double x : d.times) ss += (x - mu) * (x - mu);
  const double se = std::sqrt(ss / (n - 1) / n);
  return se > 0 ? std::abs(mu - expected) / se : (mu == expected ? 0.0 : 1e300);
}

Verdict des(const RunConfig& cfg) {
  Verdict v;
  Rng rng(909);
  int linear_bad = 0, policy_bad = 0, scale_bad = 0, mono_bad = 0;
  long policies = 0;
  std::vector<GameModel> models;
  for (int i = 0; i < kDesModels; ++i) models.push_back(oracle::random_model(rng, kDesMaxStates));
  for (const auto& m : models) {
    const Solution s = solve_policy(m, 1e-12);
    const auto linear = oracle::first_passage(m, s.policy.choice);
    const oracle::Enumeration en = oracle::enumerate_policies(m);
    policies += en.policies;
    for (int k = 0; k < m.size(); ++k) {
      linear_bad += !close(s.values[k], linear[k], kSolverTol);
      policy_bad += !close(linear[k], en.best[k], kSolverTol);
    }

    const double c = rng.uniform(0.2, 5.0);
    GameModel scaled = m;
    for (auto& e : scaled.events) e.rate *= c;
    const Solution ss = solve_policy(scaled, 1e-12);
    for (int k = 0; k < m.size(); ++k) scale_bad += !close(ss.values[k] * c, s.values[k], kSolverTol);

    GameModel faster = m;
    std::vector<std::size_t> ctl;
    for (std::size_t e = 0; e < m.events.size(); ++e)
      if (m.events[e].cls == EventClass::Controllable) ctl.push_back(e);
    faster.events[ctl[static_cast<std::size_t>(rng.uniform(0, ctl.size())) % ctl.size()]].rate *= rng.uniform(1.1, 3.0);
    const Solution fs = solve_policy(faster, 1e-12);
    for (int k = 0; k < m.size(); ++k)
      mono_bad += !(fs.values[k] <= s.values[k] + kSolverTol * std::max(1.0, s.values[k]));
  }
  v.detail << " " << models.size() << " models, " << policies << " enumerated policies; value/linear mismatches "
           << linear_bad << ", policy mismatches " << policy_bad << ", scale " << scale_bad << ", monotonicity "
           << mono_bad;
  v.require(linear_bad == 0, "linear solve");
  v.require(policy_bad == 0, "enumeration");
  v.require(scale_bad == 0, "scale covariance");
  v.require(mono_bad == 0, "monotonicity");

  const GameModel unit = one_step(0.5);
  const Solution us = solve_policy(unit);
  v.detail << "; 1/lambda value " << us.values[0];
  v.require(us.values[0] == 2.0, "1/lambda");
  const double z1 = mc_sigmas(simulate_des(unit, us.policy, 1, kEpisodes), 2.0);

  const DesStudy study = des_study(cfg);
  const double z2 = std::abs(study.mc_mean - study.solution.values[study.model.initial]) / study.mc_se;
  double z3 = 0;
  for (int i = 0; i < 3; ++i) {
    const GameModel& m = models[i];
    const Solution s = solve_policy(m, 1e-12);
    if (std::isinf(s.values[m.initial])) continue;
    z3 = std::max(z3, mc_sigmas(simulate_des(m, s.policy, 10 + i, kEpisodes, 1e6), s.values[m.initial]));
  }
  v.detail << "; Monte Carlo deviations " << z1 << ", " << z2 << ", " << z3 << " SE";
  v.require(z1 <= kMcSigmas && z2 <= kMcSigmas && z3 <= kMcSigmas && study.mc_censored == 0, "Monte Carlo");
  return v;
}

Verdict behavior(const RunConfig& base) {
  Verdict v;
  AuditReport sum;
  double worst_failover = 0;
  int failovers = 0, without_failover = 0;
  const double round = base.behavior.decision_period * base.dt;
  for (int m = 0; m < kMatches; ++m) {
    json doc = base.resolved;
    doc.erase("log_path");
    doc.erase("plot_dir");
    doc["seed"] = 1000 + m;
    doc["duration"] = kMatchSeconds;
    doc["channel"]["loss"] = kLoss;
    // Kill team 0's captain mid-match, and in odd matches the new captain of team 1 too.
    doc["deaths"] = json::array({{{"team", 0}, {"robot", 0}, {"time", 15.0 + m}}});
    if (m % 2) doc["deaths"].push_back({{"team", 1}, {"robot", 0}, {"time", 30.0 + m / 2.0}});
    const RunConfig cfg = make_run_config(doc);
    MatchOptions opt;
    opt.keep_log = false;
    const AuditReport a = run_match(cfg, opt).audit;
    sum.go_violations += a.go_violations;
    sum.captain_violations += a.captain_violations;
    sum.role_violations += a.role_violations;
    sum.bilateral_violations += a.bilateral_violations;
    sum.deadlocks += a.deadlocks;
    sum.commitments += a.commitments;
    sum.passes_done += a.passes_done;
    sum.messages_lost += a.messages_lost;
    sum.messages_sent += a.messages_sent;
    failovers += a.failovers;
    without_failover += a.failovers < 1;
    worst_failover = std::max(worst_failover, a.max_failover_delay);
  }
  v.detail << " go " << sum.go_violations << ", captain " << sum.captain_violations << ", roles "
           << sum.role_violations << ", bilateral " << sum.bilateral_violations << ", deadlocks " << sum.deadlocks
           << "; failovers " << failovers << " worst " << worst_failover << " s; commitments " << sum.commitments
           << ", passes " << sum.passes_done << ", messages lost " << sum.messages_lost << "/" << sum.messages_sent;
  v.require(sum.go_violations == 0, "go exclusivity");
  v.require(sum.captain_violations == 0, "single captain");
  v.require(without_failover == 0 && worst_failover <= round + 1e-9, "failover");
  v.require(sum.role_violations == 0, "role totality");
  v.require(sum.bilateral_violations == 0 && sum.deadlocks == 0, "bilaterality");
  v.require(sum.commitments > 0, "pass commitments exercised");
  return v;
}

Verdict determinism(const RunConfig& base) {
  Verdict v;
  json doc = base.resolved;
  doc.erase("log_path");
  doc.erase("plot_dir");
  doc["seed"] = 7;
  doc["channel"]["loss"] = kLoss;
  const RunConfig cfg = make_run_config(doc);
  const MatchResult a = run_match(cfg), b = run_match(cfg);
  auto strip = [](std::vector<std::string> log) {
    json h = json::parse(log.front());
    h.erase("wall_clock");
    log.front() = h.dump();
    return log;
  };
  const auto la = strip(a.log), lb = strip(b.log);
  std::size_t first_diff = la.size() == lb.size() ? la.size() : std::min(la.size(), lb.size());
  for (std::size_t i = 0; i < std::min(la.size(), lb.size()); ++i)
    if (la[i] != lb[i]) {
      first_diff = i;
      break;
    }
  const bool same = la.size() == lb.size() && first_diff == la.size();
  v.detail << " " << la.size() << " records";
  if (!same) v.detail << ", first difference at record " << first_diff;
  v.require(same, "identical logs");

  std::ostringstream text;
  for (const auto& line : a.log) text << line << "\n";
  std::istringstream in(text.str());
  const LocalizerReplay r = replay_localizer(read_log(in));
  v.detail << "; localizer replay " << r.frames << " frames, mismatches scan " << r.scan_mismatches << " goal "
           << r.goal_mismatches << " result " << r.result_mismatches;
  v.require(r.exact() && r.frames == a.audit.loc_frames, "localizer replay");
  return v;
}

}  // namespace

int main() {
  const RunConfig cfg = make_run_config(json::object());
  int failures = 0;
  report(1, "localization runtime", localization_runtime(cfg), failures);
  report(2, "localization accuracy", localization_accuracy(cfg), failures);
  report(3, "fusion oracles and improvement", fusion(cfg), failures);
  report(4, "navigation gradient, isotropy, safety, clamp", navigation(cfg), failures);
  report(5, "DES solver", des(cfg), failures);
  report(6, "behavior invariants", behavior(cfg), failures);
  report(7, "determinism", determinism(cfg), failures);
  std::printf("%d of 7 criteria passed\n", 7 - failures);
  return failures == 0 ? 0 : 1;
}
