#include "socsim/match.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <memory>
#include <set>

#include "socsim/error.hpp"
#include "socsim/random.hpp"

namespace socsim {

using nlohmann::json;

namespace {

json pose_json(const Pose& p) { return json::array({p.x, p.y, p.theta()}); }

json estimate_json(const PoseEstimate& e) {
  return {{"pose", pose_json(e.pose)}, {"score", e.score}, {"fit", e.fit}, {"trusted", e.trusted}};
}

json commitment_json(const Commitment& c) {
  return {{"id", c.id},
          {"kicker", c.kicker},
          {"receiver", c.receiver},
          {"state", to_string(c.state)},
          {"deadline", c.deadline},
          {"reception", json::array({c.reception.x, c.reception.y})}};
}

std::string stream_name(const char* kind, int team, int id) {
  return std::string(kind) + "/" + std::to_string(team) + "/" + std::to_string(id);
}

struct Streams {
  Rng scan, goal, camera, odom, sonar;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

json AuditReport::to_json() const {
  return {{"ticks", ticks},
          {"decision_rounds", decision_rounds},
          {"go_violations", go_violations},
          {"captain_violations", captain_violations},
          {"failovers", failovers},
          {"max_failover_delay", max_failover_delay},
          {"role_tables", role_tables},
          {"role_violations", role_violations},
          {"commitments", commitments},
          {"passes_done", passes_done},
          {"bilateral_violations", bilateral_violations},
          {"deadlocks", deadlocks},
          {"robot_contacts", robot_contacts},
          {"loc_frames", loc_frames},
          {"overruns", overruns},
          {"goals", goals},
          {"messages_sent", messages_sent},
          {"messages_lost", messages_lost}};
}

std::vector<Pose> kickoff_poses(int team_size, double attack_sign) {
  static const Vec2 spots[] = {{-5.4, 0.0}, {-3.0, 1.2}, {-3.0, -1.2}, {-1.0, 1.8},
                               {-1.0, -1.8}, {-2.0, 0.0}, {-4.0, 2.5}, {-4.0, -2.5}};
  std::vector<Pose> out;
  for (int i = 0; i < team_size; ++i) {
    const Vec2 p = spots[i % 8] * attack_sign;
    out.emplace_back(p, attack_sign > 0 ? 0.0 : kPi);
  }
  return out;
}

std::vector<std::pair<std::string, std::uint64_t>> stream_seeds(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (int t = 0; t < 2; ++t) {
    out.emplace_back("channel/" + std::to_string(t), stream_seed(cfg.seed, "channel/" + std::to_string(t)));
    for (int i = 0; i < cfg.team_sizes[t]; ++i)
      for (const char* kind : {"scan", "goal", "camera", "odom", "sonar", "guide"}) {
        const std::string name = stream_name(kind, t, i);
        out.emplace_back(name, stream_seed(cfg.seed, name));
      }
  }
  out.emplace_back("des-sim", stream_seed(cfg.seed, "des-sim"));
  return out;
}

json log_header(const RunConfig& cfg) {
  json streams = json::object();
  for (const auto& [name, seed] : stream_seeds(cfg)) streams[name] = seed;
  return {{"type", "header"},   {"schema", kLogSchema}, {"version", kVersion},
          {"wall_clock", utc_now()}, {"config_hash", cfg.hash}, {"seed", cfg.seed},
          {"streams", streams}, {"config", cfg.resolved}};
}

MatchResult run_match(const RunConfig& cfg, const MatchOptions& opt) {
  const FieldModel field = make_field(cfg.field);
  const int n0 = cfg.team_sizes[0];
  const int n1 = cfg.team_sizes[1];
  const int total = n0 + n1;
  const double dt = cfg.dt;
  const int ticks = static_cast<int>(std::llround(cfg.duration / dt));
  auto team_of = [&](int g) { return g < n0 ? 0 : 1; };
  auto local_of = [&](int g) { return g < n0 ? g : g - n0; };
  auto global_of = [&](int team, int id) { return team == 0 ? id : n0 + id; };

  std::array<TeamContext, 2> ctx;
  for (int t = 0; t < 2; ++t) {
    TeamContext& c = ctx[t];
    c.field = &field;
    c.team_size = cfg.team_sizes[t];
    c.attack_sign = t == 0 ? 1.0 : -1.0;
    c.dt = dt;
    c.behavior = cfg.behavior;
    c.guide = cfg.guide;
    c.guide.potential.dt = dt;
    c.guide.potential.robot_radius = cfg.limits.radius;
    c.guide.potential.v_max = std::min(c.guide.potential.v_max, cfg.limits.v_max);
    c.guide.potential.omega_max = std::min(c.guide.potential.omega_max, cfg.limits.omega_max);
    c.fusion = cfg.fusion;
    c.localizer = cfg.localizer;
    c.ball = cfg.ball;
    c.limits = cfg.limits;
    c.budget = opt.budget;
  }
  std::array<std::unique_ptr<Channel>, 2> channels;
  for (int t = 0; t < 2; ++t)
    channels[t] = std::make_unique<Channel>(std::max(1, cfg.team_sizes[t]), cfg.channel,
                                            stream_seed(cfg.seed, "channel/" + std::to_string(t)));

  std::vector<std::unique_ptr<RobotAgent>> agents;
  std::vector<Streams> streams;
  for (int g = 0; g < total; ++g) {
    const int t = team_of(g), i = local_of(g);
    agents.push_back(std::make_unique<RobotAgent>(i, &ctx[t], stream_seed(cfg.seed, stream_name("guide", t, i))));
    streams.push_back({Rng(cfg.seed, stream_name("scan", t, i)), Rng(cfg.seed, stream_name("goal", t, i)),
                       Rng(cfg.seed, stream_name("camera", t, i)), Rng(cfg.seed, stream_name("odom", t, i)),
                       Rng(cfg.seed, stream_name("sonar", t, i))});
  }

  std::vector<RobotState> robots(total);
  BallState ball;
  auto kickoff = [&]() {
    for (int t = 0; t < 2; ++t) {
      const auto poses = kickoff_poses(cfg.team_sizes[t], ctx[t].attack_sign);
      for (int i = 0; i < cfg.team_sizes[t]; ++i) {
        RobotState s;
        s.pose = poses[i];
        robots[global_of(t, i)] = s;
      }
    }
    ball = BallState{};
  };
  if (opt.scenario) {
    if (static_cast<int>(opt.scenario->robots.size()) != total)
      throw ConfigError("scenario robot count does not match the team sizes");
    robots = opt.scenario->robots;
    ball = opt.scenario->ball;
  } else {
    kickoff();
  }
  for (int g = 0; g < total; ++g) agents[g]->place(robots[g].pose);
  std::vector<Pose> prev_pose(total);
  for (int g = 0; g < total; ++g) prev_pose[g] = robots[g].pose;
  std::vector<bool> alive(total, true);

  std::map<int, std::vector<int>> deaths;
  for (const auto& d : cfg.deaths) deaths[static_cast<int>(std::llround(d.time / dt))].push_back(global_of(d.team, d.robot));

  MatchResult res;
  AuditReport& audit = res.audit;
  auto emit = [&](const json& j) {
    if (opt.keep_log) res.log.push_back(j.dump());
  };
  emit(log_header(cfg));

  const SonarWorld walls = arena_walls(cfg.arena);
  const int period = cfg.behavior.decision_period;
  const double round = period * dt;
  std::array<double, 2> failover_window_end{-1.0, -1.0};
  std::array<std::optional<double>, 2> pending_failover;
  std::set<std::uint64_t> seen_commitments, done_commitments, deadlocked;

  for (int tick = 0; tick < ticks; ++tick) {
    const double now = tick * dt;
    SimLog simlog;

    if (auto d = deaths.find(tick); d != deaths.end()) {
      for (int g : d->second) {
        if (!alive[g]) continue;
        alive[g] = false;
        const int t = team_of(g);
        if (agents[g]->captain()) pending_failover[t] = now;
        failover_window_end[t] = std::max(failover_window_end[t], now + cfg.behavior.liveness + round + dt);
        robots[g].v = robots[g].omega = 0.0;
        if (ball.holder == g) {
          ball.holder = -1;
          robots[g].has_ball = false;
        }
        emit({{"type", "event"}, {"t", now}, {"tick", tick}, {"kind", "death"}, {"team", t}, {"robot", local_of(g)}});
      }
    }

    // Sensing and robot software.
    std::vector<AgentOutput> outputs(total);
    const bool vision_tick = tick % cfg.vision_period == 0;
    const bool loc_tick = tick % cfg.localization_period == 0;
    for (int g = 0; g < total; ++g) {
      if (!alive[g]) continue;
      const int t = team_of(g), i = local_of(g);
      Streams& rs = streams[g];
      std::vector<Disc> others;
      for (int k = 0; k < total; ++k)
        if (k != g) others.push_back({robots[k].pose.position(), cfg.limits.radius});

      Perception in;
      const Pose delta = prev_pose[g].inverse().compose(robots[g].pose);
      in.odometry = Pose(delta.x * (1.0 + rs.odom.gaussian(cfg.sensors.odom_scale_sigma)),
                         delta.y * (1.0 + rs.odom.gaussian(cfg.sensors.odom_scale_sigma)),
                         delta.theta() + rs.odom.gaussian(cfg.sensors.odom_heading_sigma));
      in.v = robots[g].v;
      in.has_ball = robots[g].has_ball;
      if (vision_tick) {
        for (const CameraConfig* cam : {&cfg.sensors.front, &cfg.sensors.up})
          if (auto obs = observe_ball(robots[g], i, ball, *cam, others, now, &rs.camera)) in.sightings.push_back(*obs);
      }
      if (loc_tick) {
        in.localize = true;
        in.scan = scan_transitions(robots[g], field, cfg.sensors.scan, &rs.scan);
        const Goal& blue = field.goal(GoalColor::Blue);
        const Goal& yellow = field.goal(GoalColor::Yellow);
        const Goal& seen = std::abs(robots[g].pose.bearing_to(blue.center())) <=
                                   std::abs(robots[g].pose.bearing_to(yellow.center()))
                               ? blue
                               : yellow;
        in.goal = observe_goal(robots[g], seen, cfg.sensors.goal, &rs.goal);
      }
      SonarWorld world = walls;
      world.discs = others;
      in.sonar = simulate_sonar(robots[g], world, cfg.sensors.sonar, &rs.sonar);

      outputs[g] = agents[g]->tick(tick, in, *channels[t]);

      for (const auto& ev : agents[g]->take_events()) {
        if (ev.kind == "overrun") ++audit.overruns;
        emit({{"type", "event"}, {"t", now}, {"tick", tick}, {"kind", ev.kind}, {"team", t}, {"robot", i},
              {"detail", ev.detail}});
      }
      if (in.localize) {
        const auto& frame = agents[g]->last_localization();
        json scan = json::array();
        for (const auto& p : in.scan) scan.push_back(json::array({p.x, p.y}));
        json goal = nullptr;
        if (in.goal) goal = {{"color", to_string(in.goal->color)}, {"bearing", in.goal->bearing}};
        emit({{"type", "loc"}, {"t", now}, {"tick", tick}, {"team", t}, {"robot", i},
              {"truth", pose_json(robots[g].pose)}, {"prev", estimate_json(frame->prev)},
              {"result", estimate_json(frame->result)}, {"goal", goal}, {"scan", scan}});
        ++audit.loc_frames;
      }
    }

    // Audits on the state the robots just produced.
    const bool decision_tick = tick % period == 0;
    if (decision_tick) ++audit.decision_rounds;
    for (int t = 0; t < 2; ++t) {
      std::set<int> alive_ids;
      for (int i = 0; i < cfg.team_sizes[t]; ++i)
        if (alive[global_of(t, i)]) alive_ids.insert(i);
      if (alive_ids.empty()) continue;
      const bool in_window = now <= failover_window_end[t];

      int captains = 0;
      for (int i : alive_ids)
        if (agents[global_of(t, i)]->captain()) ++captains;
      if (captains != 1 && !in_window) ++audit.captain_violations;
      if (pending_failover[t] && captains == 1) {
        const double delay = std::max(0.0, now - *pending_failover[t] - cfg.behavior.liveness);
        audit.max_failover_delay = std::max(audit.max_failover_delay, delay);
        ++audit.failovers;
        pending_failover[t].reset();
      }

      if (decision_tick) {
        int going = 0;
        for (int i : alive_ids) {
          const RobotAgent& a = *agents[global_of(t, i)];
          if (a.operator_name() == "go" && a.operator_running()) ++going;
        }
        if (going > 1) {
          ++audit.go_violations;
          emit({{"type", "event"}, {"t", now}, {"tick", tick}, {"kind", "audit_go"}, {"team", t}, {"robot", -1}});
        }
        const int this_round = tick / period;
        for (int i : alive_ids) {
          const RobotAgent& a = *agents[global_of(t, i)];
          if (!a.captain() || !a.last_assignment() || a.last_assignment()->round != this_round) continue;
          ++audit.role_tables;
          const auto& roles = a.last_assignment()->roles;
          int keepers = 0;
          for (const auto& [id, r] : roles)
            if (r == Role::Goalkeeper) ++keepers;
          bool ok = keepers == 1;
          for (int id : alive_ids)
            if (!roles.count(id)) ok = false;
          if (!in_window && static_cast<int>(roles.size()) != static_cast<int>(alive_ids.size())) ok = false;
          if (!ok) ++audit.role_violations;
        }
      }

      // Commitment bilaterality.
      std::map<std::uint64_t, std::vector<int>> holders;
      for (int i : alive_ids)
        if (const auto& c = agents[global_of(t, i)]->commitment()) {
          holders[c->id].push_back(i);
          seen_commitments.insert(c->id);
          if (c->receiver == i && c->state == CommitmentState::Done) done_commitments.insert(c->id);
          if (!is_terminal(c->state) && now > c->deadline + 1.5 * dt && deadlocked.insert(c->id).second)
            ++audit.deadlocks;
        }
      for (const auto& [id, parties] : holders)
        for (int i : parties) {
          const Commitment& mine = *agents[global_of(t, i)]->commitment();
          if (mine.state != CommitmentState::Active) continue;
          const int peer = mine.kicker == i ? mine.receiver : mine.kicker;
          if (!alive_ids.count(peer)) continue;
          const auto& theirs = agents[global_of(t, peer)]->commitment();
          if (theirs && theirs->id == id && theirs->state == CommitmentState::Active) continue;
          bool in_flight = false;
          for (const auto& m : channels[t]->in_flight())
            if (const auto* pm = std::get_if<PassMessage>(&m.payload); pm && pm->commitment.id == id) in_flight = true;
          if (in_flight || channels[t]->lost_for(id)) continue;
          ++audit.bilateral_violations;
          emit({{"type", "event"}, {"t", now}, {"tick", tick}, {"kind", "audit_bilateral"}, {"team", t}, {"robot", i},
                {"detail", std::to_string(id)}});
        }

      if (decision_tick)
        for (int i : alive_ids) {
          const RobotAgent& a = *agents[global_of(t, i)];
          json c = nullptr;
          if (a.commitment()) c = commitment_json(*a.commitment());
          emit({{"type", "decision"}, {"t", now}, {"tick", tick}, {"team", t}, {"robot", i},
                {"role", to_string(a.role())}, {"selected", a.last_selection()}, {"operator", a.operator_name()},
                {"state", a.fsa_state()}, {"task", a.current_task()}, {"running", a.operator_running()},
                {"captain", a.captain()}, {"bid_won", a.bid_won()}, {"fallback", a.selection_fallback()},
                {"commitment", c}});
        }
    }

    // Physics.
    for (int g = 0; g < total; ++g) prev_pose[g] = robots[g].pose;
    for (int g = 0; g < total; ++g)
      if (alive[g] && outputs[g].kick_impulse && robots[g].has_ball)
        ball = kick(ball, robots[g], g, *outputs[g].kick_impulse, cfg.ball, &simlog);
    std::vector<RobotState> next = robots;
    for (int g = 0; g < total; ++g) {
      const DriveCommand cmd = alive[g] ? outputs[g].drive : DriveCommand{};
      next[g] = step_robot(robots[g], cmd, dt, cfg.limits, nullptr, g);
      const double lim_x = cfg.arena.half_x - cfg.limits.radius;
      const double lim_y = cfg.arena.half_y - cfg.limits.radius;
      if (std::abs(next[g].pose.x) > lim_x || std::abs(next[g].pose.y) > lim_y) {
        next[g].pose = Pose(std::clamp(next[g].pose.x, -lim_x, lim_x), std::clamp(next[g].pose.y, -lim_y, lim_y),
                            next[g].pose.theta());
        next[g].v = 0.0;
      }
    }
    // Robots that would close in on each other while touching stop in place; turning and
    // moving apart stay possible. Reverting one pair can create another, so iterate.
    const double contact = 2.0 * cfg.limits.radius;
    for (bool changed = true; changed;) {
      changed = false;
      for (int a = 0; a < total; ++a)
        for (int b = a + 1; b < total; ++b) {
          const double d_new = (next[a].pose.position() - next[b].pose.position()).norm();
          const double d_old = (robots[a].pose.position() - robots[b].pose.position()).norm();
          if (d_new >= contact || d_new >= d_old) continue;
          for (int g : {a, b}) {
            if (next[g].pose.position() == robots[g].pose.position()) continue;
            next[g].pose = Pose(robots[g].pose.position(), next[g].pose.theta());
            next[g].v = 0.0;
            changed = true;
          }
          if (d_old >= contact) ++audit.robot_contacts;
        }
    }
    robots = std::move(next);
    ball = step_ball(ball, robots, dt, cfg.ball, cfg.limits, cfg.arena, &simlog);
    res.ball_holders.push_back(ball.holder);

    for (const auto& ev : simlog) {
      if (ev.kind == "wall_bounce") continue;
      const int g = ev.robot;
      emit({{"type", "event"}, {"t", now}, {"tick", tick}, {"kind", ev.kind},
            {"team", g >= 0 ? team_of(g) : -1}, {"robot", g >= 0 ? local_of(g) : -1}, {"detail", ev.detail}});
    }

    const double half = field.length() / 2.0;
    const double mouth = field.goal(GoalColor::Blue).mouth.a.y;
    if (std::abs(ball.position.x) > half && std::abs(ball.position.y) < std::abs(mouth)) {
      const int scorer = ball.position.x > 0 ? 0 : 1;
      ++audit.goals[scorer];
      emit({{"type", "event"}, {"t", now}, {"tick", tick}, {"kind", "goal"}, {"team", scorer}, {"robot", -1}});
      kickoff();
      for (int g = 0; g < total; ++g) {
        if (!alive[g]) robots[g].pose = prev_pose[g];
        agents[g]->place(robots[g].pose);
        prev_pose[g] = robots[g].pose;
      }
    }

    if (tick % cfg.step_period == 0 && opt.keep_log) {
      json rs = json::array();
      for (int g = 0; g < total; ++g) {
        const RobotState& s = robots[g];
        const auto est = agents[g]->believed_pose();
        const auto& belief = agents[g]->ball_belief();
        json ball_est = nullptr;
        if (belief.status != BallStatus::Unknown)
          ball_est = json::array({belief.estimate.mean.x, belief.estimate.mean.y});
        rs.push_back({{"team", team_of(g)}, {"robot", local_of(g)}, {"alive", static_cast<bool>(alive[g])},
                      {"pose", pose_json(s.pose)}, {"v", s.v}, {"est", est ? pose_json(*est) : json(nullptr)},
                      {"cmd", json::array({outputs[g].drive.v, outputs[g].drive.omega})},
                      {"has_ball", s.has_ball}, {"ball_est", ball_est}});
      }
      emit({{"type", "step"}, {"t", (tick + 1) * dt}, {"tick", tick},
            {"ball", {{"x", ball.position.x}, {"y", ball.position.y}, {"vx", ball.velocity.x},
                      {"vy", ball.velocity.y}, {"holder", ball.holder}}},
            {"robots", rs}});
    }
    ++audit.ticks;
  }

  audit.commitments = static_cast<int>(seen_commitments.size());
  audit.passes_done = static_cast<int>(done_commitments.size());
  for (const auto& ch : channels) {
    audit.messages_sent += ch->sent_count();
    audit.messages_lost += ch->lost_count();
  }
  emit({{"type", "summary"}, {"t", ticks * dt}, {"audit", audit.to_json()}});
  for (const auto& a : agents) res.blackboard_digests.push_back(a->blackboard().digest());
  res.robots = robots;
  res.ball = ball;
  return res;
}

PassTrial run_pass_trial(const RunConfig& base, std::uint64_t seed, double duration) {
  RunConfig cfg = base;
  cfg.seed = seed;
  cfg.team_sizes = {3, 0};
  cfg.duration = duration;
  cfg.deaths.clear();

  // Kicker and receiver placement varies per trial; the goalkeeper stays home.
  Rng rng(seed, "pass-trial");
  const double kx = rng.uniform(-3.0, -1.5);
  const double ky = rng.uniform(-1.5, 1.5);
  const double dist = rng.uniform(2.0, 4.0);
  const double dir = rng.uniform(-0.6, 0.6);
  const Vec2 kicker{kx, ky};
  const Vec2 receiver = kicker + Vec2::unit(dir) * dist;

  Scenario sc;
  sc.robots.resize(3);
  sc.robots[0].pose = Pose(-5.4, 0.0, 0.0);
  sc.robots[1].pose = Pose(kicker, rng.uniform(-0.5, 0.5));
  sc.robots[1].has_ball = true;
  sc.robots[2].pose = Pose(receiver, (kicker - receiver).angle());
  sc.ball.holder = 1;
  sc.ball.position = sc.robots[1].pose.to_field({hold_distance(cfg.limits, cfg.ball), 0.0});

  MatchOptions opt;
  opt.scenario = sc;
  opt.keep_log = false;
  const MatchResult r = run_match(cfg, opt);
  PassTrial out;
  out.proposed = r.audit.commitments > 0;
  for (std::size_t k = 0; k < r.ball_holders.size(); ++k)
    if (r.ball_holders[k] == 2) {
      out.success = true;
      out.time = (k + 1) * cfg.dt;
      break;
    }
  return out;
}

}  // namespace socsim
