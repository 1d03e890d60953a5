#include "socsim/experiments.hpp"

#include <algorithm>
#include <Eigen/LU>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "socsim/error.hpp"
#include "socsim/fusion.hpp"
#include "socsim/navigation.hpp"
#include "socsim/random.hpp"
#include "socsim/replay.hpp"

namespace socsim {

using nlohmann::json;

Metric make_metric(std::string name, double value, std::string relation, double bound) {
  Metric m{std::move(name), value, std::move(relation), bound, false};
  if (m.relation == "<=") m.pass = value <= bound;
  else if (m.relation == ">=") m.pass = value >= bound;
  else if (m.relation == "==") m.pass = value == bound;
  else throw ConfigError("unknown metric relation " + m.relation);
  return m;
}

bool MetricsTable::passed() const {
  return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
}

json MetricsTable::to_json() const {
  json rows = json::array();
  for (const auto& m : metrics)
    rows.push_back({{"metric", m.name}, {"value", m.value}, {"relation", m.relation}, {"bound", m.bound}, {"pass", m.pass}});
  return {{"experiment", experiment}, {"pass", passed()}, {"metrics", rows}};
}

std::string MetricsTable::to_text() const {
  std::ostringstream os;
  os << "experiment " << experiment << "\n";
  std::size_t width = 6;
  for (const auto& m : metrics) width = std::max(width, m.name.size());
  for (const auto& m : metrics)
    os << "  " << std::left << std::setw(static_cast<int>(width)) << m.name << "  " << std::setw(14)
       << std::setprecision(6) << m.value << " " << m.relation << " " << std::setw(10) << m.bound << "  "
       << (m.pass ? "PASS" : "FAIL") << "\n";
  os << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string MetricsTable::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17) << "metric,value,relation,bound,pass\n";
  for (const auto& m : metrics)
    os << m.name << "," << m.value << "," << m.relation << "," << m.bound << "," << (m.pass ? 1 : 0) << "\n";
  return os.str();
}

std::vector<std::string> experiment_names() { return {"localizer", "fusion", "navigation", "des"}; }

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Wilson-Hilferty approximation of a chi-square quantile.
double chi2_quantile(double k, double z) {
  const double c = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
}

MetricsTable localizer_experiment(const RunConfig& cfg) {
  MetricsTable t{"localizer", {}};
  const auto timing = localization_samples(cfg, 500, cfg.sensors.scan.clutter_fraction, stream_seed(cfg.seed, "exp-loc-time"));
  const auto clean = localization_samples(cfg, 100, 0.0, stream_seed(cfg.seed, "exp-loc-clean"));
  const auto noisy = localization_samples(cfg, 100, 0.3, stream_seed(cfg.seed, "exp-loc-clutter"));
  std::vector<double> seconds, pos, head;
  for (const auto& s : timing) seconds.push_back(s.seconds);
  for (const auto& s : clean) {
    pos.push_back(s.position_error);
    head.push_back(s.heading_error);
  }
  auto accurate = [](const std::vector<LocalizationSample>& v) {
    const auto n = std::count_if(v.begin(), v.end(), [](const LocalizationSample& s) {
      return s.position_error <= 0.05 && s.heading_error <= 2.0 * kPi / 180.0;
    });
    return static_cast<double>(n) / static_cast<double>(v.size());
  };
  t.metrics.push_back(make_metric("mean_runtime_ms", mean(seconds) * 1e3, "<=", 13.0));
  t.metrics.push_back(make_metric("median_position_error_m", percentile(pos, 50.0), "<=", 0.05));
  t.metrics.push_back(make_metric("median_orientation_error_deg", percentile(head, 50.0) * 180.0 / kPi, "<=", 2.0));
  t.metrics.push_back(make_metric("accurate_fraction_clean", accurate(clean), ">=", 0.95));
  t.metrics.push_back(make_metric("accurate_fraction_clutter30", accurate(noisy), ">=", 0.90));
  return t;
}

MetricsTable fusion_experiment(const RunConfig& cfg) {
  MetricsTable t{"fusion", {}};
  const FusionStudy s = fusion_study(cfg, 500, stream_seed(cfg.seed, "exp-fusion"));
  for (std::size_t r = 0; r < s.unfused_error.size(); ++r)
    t.metrics.push_back(make_metric("unfused_mean_error_m_robot" + std::to_string(r), s.unfused_error[r], ">=", s.fused_error));
  t.metrics.push_back(make_metric("local_only_mean_error_m", s.local_only_error, ">=", s.fused_error));
  t.metrics.push_back(make_metric("fused_mean_error_m", s.fused_error, "<=",
                                  *std::min_element(s.unfused_error.begin(), s.unfused_error.end())));
  t.metrics.push_back(make_metric("fused_mean_nees", s.mean_nees, ">=", s.nees_low));
  t.metrics.push_back(make_metric("fused_mean_nees", s.mean_nees, "<=", s.nees_high));
  return t;
}

MetricsTable navigation_experiment(const RunConfig& cfg) {
  MetricsTable t{"navigation", {}};
  const NavigationStudy s = navigation_study(cfg, 1000, stream_seed(cfg.seed, "exp-nav"));
  t.metrics.push_back(make_metric("max_gradient_relative_error", s.max_gradient_error, "<=", 1e-4));
  t.metrics.push_back(make_metric("beta0_isotropy_deviation", s.isotropy_deviation, "==", 0.0));
  t.metrics.push_back(make_metric("dribble_clamp_excess", s.dribble_excess, "<=", 1e-9));
  t.metrics.push_back(make_metric("closed_loop_contacts", s.contacts, "==", 0.0));
  t.metrics.push_back(make_metric("closed_loop_arrival_fraction", static_cast<double>(s.arrivals) / s.scenes, ">=", 0.0));
  return t;
}

MetricsTable des_experiment(const RunConfig& cfg) {
  MetricsTable t{"des", {}};
  const DesStudy s = des_study(cfg);
  const double v0 = s.solution.values[s.model.initial];
  t.metrics.push_back(make_metric("reachable_states", s.model.size(), ">=", 1.0));
  t.metrics.push_back(make_metric("marking_violations", s.marking_violations, "==", 0.0));
  t.metrics.push_back(make_metric("value_iteration_converged", s.solution.converged ? 1.0 : 0.0, "==", 1.0));
  t.metrics.push_back(make_metric("max_vi_linear_deviation_s", s.max_deviation, "<=", 1e-8));
  t.metrics.push_back(make_metric("initial_value_s", v0, ">=", 0.0));
  t.metrics.push_back(make_metric("mc_mean_s", s.mc_mean, ">=", 0.0));
  t.metrics.push_back(make_metric("mc_deviation_in_se", s.mc_se > 0.0 ? std::abs(s.mc_mean - v0) / s.mc_se : 0.0, "<=", 3.0));
  t.metrics.push_back(make_metric("mc_censored", s.mc_censored, "==", 0.0));
  return t;
}

}  // namespace

MetricsTable run_experiment(const std::string& name, const RunConfig& cfg) {
  if (name == "localizer") return localizer_experiment(cfg);
  if (name == "fusion") return fusion_experiment(cfg);
  if (name == "navigation") return navigation_experiment(cfg);
  if (name == "des") return des_experiment(cfg);
  throw ConfigError("unknown experiment '" + name + "' (expected localizer, fusion, navigation or des)");
}

std::vector<LocalizationSample> localization_samples(const RunConfig& cfg, int count, double clutter,
                                                     std::uint64_t seed) {
  const FieldModel field = make_field(cfg.field);
  ScanConfig scan_cfg = cfg.sensors.scan;
  scan_cfg.clutter_fraction = clutter;
  Rng rng(seed);
  std::vector<LocalizationSample> out;
  const double hx = field.length() / 2.0 - 0.3, hy = field.width() / 2.0 - 0.3;
  for (int k = 0; k < count; ++k) {
    RobotState s;
    s.pose = Pose(rng.uniform(-hx, hx), rng.uniform(-hy, hy), rng.uniform(-kPi, kPi));
    const auto scan = scan_transitions(s, field, scan_cfg, &rng);
    const Goal& blue = field.goal(GoalColor::Blue);
    const Goal& yellow = field.goal(GoalColor::Yellow);
    const Goal& seen =
        std::abs(s.pose.bearing_to(blue.center())) <= std::abs(s.pose.bearing_to(yellow.center())) ? blue : yellow;
    const auto goal = observe_goal(s, seen, cfg.sensors.goal, &rng);
    const PoseEstimate prev{Pose(s.pose.x + rng.gaussian(0.5), s.pose.y + rng.gaussian(0.5), s.pose.theta() + rng.gaussian(0.3)),
                            0.0, 0.0, false};
    const auto t0 = std::chrono::steady_clock::now();
    const PoseEstimate res = localize(scan, field, goal, prev, cfg.localizer);
    const auto t1 = std::chrono::steady_clock::now();
    out.push_back({s.pose, res, (res.pose.position() - s.pose.position()).norm(),
                   angle_distance(res.pose.theta(), s.pose.theta()), std::chrono::duration<double>(t1 - t0).count()});
  }
  return out;
}

FusionStudy fusion_study(const RunConfig& cfg, int frames, std::uint64_t seed) {
  constexpr int kRobots = 4;
  Rng rng(seed);
  const FieldModel field = make_field(cfg.field);
  FusionConfig local_cfg = cfg.fusion;
  local_cfg.global_enabled = false;
  FusionStudy out;
  out.frames = frames;
  std::vector<std::vector<double>> unfused(kRobots);
  std::vector<double> fused, local_only, nees;
  for (int f = 0; f < frames; ++f) {
    const double now = f * 1.0;
    BallState ball;
    ball.position = {rng.uniform(-field.length() / 2 + 1, field.length() / 2 - 1),
                     rng.uniform(-field.width() / 2 + 1, field.width() / 2 - 1)};
    std::vector<GaussianEstimate> estimates;
    std::vector<int> sources;
    for (int r = 0; r < kRobots; ++r) {
      RobotState s;
      const double bearing = rng.uniform(-kPi, kPi);
      const Vec2 p = ball.position - Vec2::unit(bearing) * rng.uniform(1.0, 4.0);
      s.pose = Pose(p, bearing + rng.gaussian(0.3));
      const PoseEstimate believed{Pose(p.x + rng.gaussian(cfg.fusion.pose_position_sigma),
                                       p.y + rng.gaussian(cfg.fusion.pose_position_sigma),
                                       s.pose.theta() + rng.gaussian(cfg.fusion.pose_heading_sigma)),
                                  1.0, 1.0, true};
      std::vector<BallObservation> sightings;
      for (const CameraConfig* cam : {&cfg.sensors.front, &cfg.sensors.up})
        if (auto obs = observe_ball(s, r, ball, *cam, {}, now, &rng)) sightings.push_back(*obs);
      if (sightings.empty()) continue;
      GaussianEstimate own = fuse_local(sightings, believed, cfg.fusion);
      own.source = r;
      unfused[r].push_back((own.mean - ball.position).norm());
      estimates.push_back(own);
      sources.push_back(r);
    }
    for (int r : sources) {
      const BallBelief b = fuse_view(r, estimates, BallBelief{}, now, cfg.fusion);
      const Vec2 e = b.estimate.mean - ball.position;
      fused.push_back(e.norm());
      const BallBelief own = fuse_view(r, estimates, BallBelief{}, now, local_cfg);
      local_only.push_back((own.estimate.mean - ball.position).norm());
      const Eigen::Vector2d ev(e.x, e.y);
      nees.push_back(ev.dot(b.estimate.cov.inverse() * ev));
    }
  }
  for (const auto& u : unfused) out.unfused_error.push_back(mean(u));
  out.local_only_error = mean(local_only);
  out.fused_error = mean(fused);
  out.mean_nees = mean(nees);
  const double n = static_cast<double>(nees.size());
  out.nees_low = chi2_quantile(2.0 * n, -1.959964) / n;
  out.nees_high = chi2_quantile(2.0 * n, 1.959964) / n;
  return out;
}

NavigationStudy navigation_study(const RunConfig& cfg, int scenes, std::uint64_t seed) {
  Rng rng(seed);
  GuideParams gp = cfg.guide;
  gp.potential.dt = cfg.dt;
  gp.potential.robot_radius = cfg.limits.radius;
  gp.potential.v_max = std::min(gp.potential.v_max, cfg.limits.v_max);
  gp.potential.omega_max = std::min(gp.potential.omega_max, cfg.limits.omega_max);
  const PotentialParams& pp = gp.potential;
  NavigationStudy out;
  out.scenes = scenes;

  auto random_obstacles = [&](Vec2 keep_a, Vec2 keep_b, int n) {
    std::vector<Obstacle> obs;
    while (static_cast<int>(obs.size()) < n) {
      const Obstacle o{{rng.uniform(-4.0, 4.0), rng.uniform(-3.0, 3.0)}, rng.uniform(0.15, 0.4)};
      const double clear = o.radius + pp.robot_radius + 0.2;
      if ((o.center - keep_a).norm() < clear || (o.center - keep_b).norm() < clear) continue;
      obs.push_back(o);
    }
    return obs;
  };

  for (int k = 0; k < scenes; ++k) {
    // Gradient against central differences of the potential, away from contact.
    {
      const Vec2 goal{rng.uniform(-5.0, 5.0), rng.uniform(-3.5, 3.5)};
      const Vec2 p{rng.uniform(-5.0, 5.0), rng.uniform(-3.5, 3.5)};
      const auto obs = random_obstacles(p, goal, 1 + static_cast<int>(rng.uniform(0.0, 4.0)));
      bool near_contact = false;
      for (const auto& o : obs)
        if ((o.center - p).norm() - o.radius - pp.robot_radius < 0.05) near_contact = true;
      if (!near_contact) {
        const double theta = rng.uniform(-kPi, kPi);
        const double h = 1e-6;
        const Vec2 g = potential_gradient(p, theta, goal, obs, pp);
        const Vec2 fd{(potential(p + Vec2{h, 0}, theta, goal, obs, pp) - potential(p - Vec2{h, 0}, theta, goal, obs, pp)) / (2 * h),
                      (potential(p + Vec2{0, h}, theta, goal, obs, pp) - potential(p - Vec2{0, h}, theta, goal, obs, pp)) / (2 * h)};
        out.max_gradient_error = std::max(out.max_gradient_error, (g - fd).norm() / std::max(fd.norm(), 1e-6));

        PotentialParams iso = pp;
        iso.beta = 0.0;
        const double u1 = potential(p, theta, goal, obs, iso);
        const double u2 = potential(p, rng.uniform(-kPi, kPi), goal, obs, iso);
        out.isotropy_deviation = std::max(out.isotropy_deviation, std::abs(u1 - u2));
      }
    }
    // Dribble clamp on random raw commands.
    {
      NavCommand raw;
      raw.v_cmd = rng.uniform(0.0, pp.v_max);
      raw.omega_cmd = rng.uniform(-pp.omega_max, pp.omega_max);
      const double v = rng.uniform(0.0, pp.v_max);
      const NavCommand c = shape_command(raw, Pose(0, 0, 0), v, GuideMode::Dribble, {}, gp);
      const double lim = dribble_limit(v, (c.v_cmd - v) / pp.dt, gp.dribble);
      out.dribble_excess = std::max(out.dribble_excess, std::abs(c.omega_cmd) - lim);
    }
    // Closed loop: perfect pose, static obstacles, 20 s to reach the goal.
    {
      const Vec2 start{rng.uniform(-5.0, -3.0), rng.uniform(-3.0, 3.0)};
      const Vec2 goal{rng.uniform(3.0, 5.0), rng.uniform(-3.0, 3.0)};
      const auto obs = random_obstacles(start, goal, 1 + static_cast<int>(rng.uniform(0.0, 6.0)));
      Guide guide(rng.next());
      RobotState s;
      s.pose = Pose(start, rng.uniform(-kPi, kPi));
      guide.reset(s.pose);
      bool touched = false;
      const Pose target(goal, 0.0);
      for (int tick = 0; tick < static_cast<int>(20.0 / cfg.dt); ++tick) {
        const GuideOutput g =
            guide.update(PoseEstimate{s.pose, 1.0, 1.0, true}, Pose(), s.v, target, GuideMode::Free, obs, gp, tick * cfg.dt);
        s = step_robot(s, {g.cmd.v_cmd, g.cmd.omega_cmd}, cfg.dt, cfg.limits);
        for (const auto& o : obs)
          if ((s.pose.position() - o.center).norm() < o.radius + pp.robot_radius) touched = true;
        if ((s.pose.position() - goal).norm() <= gp.arrive_tol) {
          ++out.arrivals;
          break;
        }
      }
      if (touched) ++out.contacts;
    }
  }
  out.dribble_excess = std::max(out.dribble_excess, 0.0);
  return out;
}

DesStudy des_study(const RunConfig& cfg) {
  DesStudy s;
  const ModelDocument doc = parse_model(cfg.des.model);
  s.model = build_model(doc);
  s.marking_violations = static_cast<int>(validate_marking(s.model).size());
  s.solution = solve_policy(s.model, cfg.des.tol);
  s.linear = evaluate_policy(s.model, s.solution.policy);
  for (int i = 0; i < s.model.size(); ++i)
    if (!s.solution.infinite[i] && std::isfinite(s.linear[i]))
      s.max_deviation = std::max(s.max_deviation, std::abs(s.solution.values[i] - s.linear[i]));
    else if (s.solution.infinite[i] != std::isinf(s.linear[i]))
      s.max_deviation = std::numeric_limits<double>::infinity();
  const DesSamples mc =
      simulate_des(s.model, s.solution.policy, stream_seed(cfg.seed, "des-sim"), cfg.des.episodes, cfg.des.horizon);
  s.mc_censored = mc.censored;
  if (!mc.times.empty()) {
    s.mc_mean = mean(mc.times);
    double var = 0.0;
    for (double x : mc.times) var += (x - s.mc_mean) * (x - s.mc_mean);
    const double n = static_cast<double>(mc.times.size());
    s.mc_se = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
  }
  s.exported = export_policy(s.model, s.solution.policy, doc.export_spec);
  return s;
}

}  // namespace socsim
