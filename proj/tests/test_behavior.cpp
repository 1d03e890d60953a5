#include <memory>
#include <vector>

#include "doctest.h"

#include "socsim/agent.hpp"
#include "socsim/blackboard.hpp"
#include "socsim/config.hpp"
#include "socsim/error.hpp"
#include "socsim/match.hpp"
#include "socsim/rules.hpp"
#include "socsim/team.hpp"

using namespace socsim;
using nlohmann::json;

namespace {

Situation facts(std::initializer_list<const char*> on, std::map<std::string, double> numbers = {}) {
  Situation s;
  for (const auto& f : known_flags()) s.flags[f] = false;
  for (const char* f : on) s.flags[f] = true;
  s.numbers = std::move(numbers);
  return s;
}

// Two robots of one team standing still: robot 0 in goal, robot 1 in the opponent half with
// the ball 2 m straight ahead of it.
struct StillTeam {
  RunConfig cfg = make_run_config(json::object());
  FieldModel field = make_field(cfg.field);
  TeamContext ctx;
  Channel channel;
  std::vector<std::unique_ptr<RobotAgent>> agents;
  std::vector<Pose> poses{Pose{-5.5, 0, 0}, Pose{1, 0.5, 0}};
  Vec2 ball{3, 0.5};

  StillTeam() : channel(2, make_run_config(json::object()).channel, 42) {
    ctx.field = &field;
    ctx.team_size = 2;
    ctx.dt = cfg.dt;
    ctx.behavior = cfg.behavior;
    ctx.guide = cfg.guide;
    ctx.fusion = cfg.fusion;
    ctx.localizer = cfg.localizer;
    ctx.ball = cfg.ball;
    ctx.limits = cfg.limits;
    for (int i = 0; i < 2; ++i) {
      agents.push_back(std::make_unique<RobotAgent>(i, &ctx, 100 + i));
      agents.back()->place(poses[i]);
    }
  }

  Perception perceive(int i, int tick) const {
    Perception in;
    RobotState r;
    r.pose = poses[i];
    if (tick % cfg.vision_period == 0) {
      BallState b;
      b.position = ball;
      if (auto o = observe_ball(r, i, b, cfg.sensors.front, {}, tick * cfg.dt)) in.sightings.push_back(*o);
    }
    if (tick % cfg.localization_period == 0) {
      in.localize = true;
      in.scan = scan_transitions(r, field, cfg.sensors.scan);
      in.goal = observe_goal(r, field.goal(GoalColor::Blue), cfg.sensors.goal);
    }
    return in;
  }

  AgentOutput tick(int i, int t) { return agents[i]->tick(t, perceive(i, t), channel); }
};

}  // namespace

TEST_SUITE("behavior") {

TEST_CASE("bid fitness and winner") {
  const BidWeights w;
  const Vec2 ball{0, 0};
  const Pose r1{-1, 0, 0}, r2{-3, 0, 0};
  CHECK_FALSE(behind_ball(r1, ball, 1.0));
  CHECK(bid_fitness(r1, ball, 1.0, w) == doctest::Approx(1.0));
  CHECK(bid_fitness(r2, ball, 1.0, w) == doctest::Approx(3.0));
  std::map<int, Bid> bids{{1, {5, true, 1.0}}, {2, {5, true, 3.0}}};
  CHECK(bid_winner(bids) == 1);
  CHECK(bid_winner({{3, {5, true, 2.0}}}) == 3);
  CHECK(bid_winner({{4, {5, true, 2.0}}, {2, {5, true, 2.0}}}) == 2);
  CHECK_FALSE(bid_winner({{1, {5, false, 0.1}}}).has_value());
  CHECK(behind_ball(Pose{1, 0, kPi}, ball, 1.0));
  CHECK(bid_fitness(Pose{1, 0, kPi}, ball, 1.0, w) == doctest::Approx(1.0 + w.behind));
}

TEST_CASE("captain election") {
  const std::vector<int> prio{1, 2, 3, 4};
  CHECK(elect_captain({1, 2, 3, 4}, prio) == 1);
  CHECK(elect_captain({2, 3, 4}, prio) == 2);
  CHECK_THROWS_AS(elect_captain({}, prio), std::runtime_error);
}

TEST_CASE("role table rows") {
  const TacticTable table = make_run_config(json::object()).behavior.tactics;
  RoleAssignmentInput in;
  in.alive = {0, 1, 2, 3};
  in.ball_half = BallHalf::Opponent;
  in.goalkeeper_preference = {0, 1, 2, 3};
  const RoleAssignment ra = assign_roles(in, table);
  std::multiset<Role> got;
  for (auto& [id, r] : ra.roles) got.insert(r);
  CHECK(got == std::multiset<Role>{Role::Goalkeeper, Role::Defender, Role::Attacker, Role::Attacker});
  CHECK(ra.roles.at(0) == Role::Goalkeeper);

  RoleAssignmentInput one = in;
  one.alive = {2};
  const RoleAssignment solo = assign_roles(one, table);
  CHECK(solo.roles.size() == 1);
  CHECK(solo.roles.at(2) == Role::Goalkeeper);
}

TEST_CASE("fitter defender swaps with the attacker") {
  const TacticTable table = make_run_config(json::object()).behavior.tactics;
  RoleAssignmentInput in;
  in.alive = {0, 1, 2, 3};
  in.ball_half = BallHalf::Opponent;
  in.goalkeeper_preference = {0, 1, 2, 3};
  in.previous = {{0, Role::Goalkeeper}, {1, Role::Defender}, {2, Role::Attacker}, {3, Role::Attacker}};
  in.fitness = {{1, 0.5}, {2, 3.0}};
  in.swap_margin = 1.0;
  const RoleAssignment ra = assign_roles(in, table);
  CHECK(ra.swapped);
  CHECK(ra.roles.at(1) == Role::Attacker);
  CHECK(ra.roles.at(2) == Role::Defender);
  CHECK(ra.roles.at(3) == Role::Attacker);

  in.fitness = {{1, 2.5}, {2, 3.0}};
  const RoleAssignment keep = assign_roles(in, table);
  CHECK_FALSE(keep.swapped);
  CHECK(keep.roles.at(1) == Role::Defender);
}

TEST_CASE("local blackboard read back") {
  Blackboard bb(0);
  CHECK_FALSE(bb.write(Key::Role, 0, Role::Attacker, 1.5).has_value());
  const BbEntry* e = bb.read(Key::Role);
  REQUIRE(e);
  CHECK(std::get<Role>(e->value) == Role::Attacker);
  CHECK(e->timestamp == 1.5);
}

TEST_CASE("shared writes reach peers after the latency") {
  ChannelConfig cc;
  cc.latency = 0.05;
  Channel ch(2, cc, 1);
  Blackboard a(0), b(1);
  const auto up = a.write(Key::Heartbeat, 0, Heartbeat{7}, 1.0);
  REQUIRE(up);
  ch.broadcast(0, *up, 1.0);
  CHECK(ch.deliver(1, 1.0 + 0.049).empty());
  const auto got = ch.deliver(1, 1.05);
  REQUIRE(got.size() == 1);
  CHECK(got[0].arrival == doctest::Approx(1.05));
  CHECK(b.apply(std::get<BbUpdate>(got[0].payload)));
  CHECK(b.get<Heartbeat>(Key::Heartbeat)->tick == 7);
}

TEST_CASE("last writer wins identically everywhere") {
  const BbUpdate u1{Key::Roles, 0, {RoleTable{3, {{0, Role::Goalkeeper}}}, 2.0, 1}};
  const BbUpdate u2{Key::Roles, 0, {RoleTable{3, {{0, Role::Defender}}}, 2.0, 2}};
  const BbUpdate u3{Key::Roles, 0, {RoleTable{4, {{0, Role::Attacker}}}, 2.1, 3}};
  Blackboard x(0), y(1);
  x.apply(u1);
  x.apply(u2);
  y.apply(u2);
  y.apply(u1);
  CHECK(x.read(Key::Roles)->origin == 1);
  CHECK(y.read(Key::Roles)->origin == 1);
  CHECK(x.digest() == y.digest());
  x.apply(u3);
  y.apply(u3);
  CHECK(x.read(Key::Roles)->origin == 3);
  CHECK(x.digest() == y.digest());
  Blackboard local(0);
  CHECK_THROWS_AS(local.apply(BbUpdate{Key::Pose, 0, {PoseEstimate{}, 0.0, 1}}), ConfigError);
}

TEST_CASE("rule selection") {
  const BehaviorConfig bc = make_run_config(json::object()).behavior;
  const auto inst = bc.installed();
  CHECK(select_behavior(facts({}), Role::Attacker, bc.rules, inst).op == "standby");
  CHECK(select_behavior(facts({"ball_known", "bid_won"}), Role::Attacker, bc.rules, inst).op == "go");
  CHECK(select_behavior(facts({"ball_known"}), Role::Attacker, bc.rules, inst).op == "standby");
  CHECK(select_behavior(facts({"has_ball"}, {{"goal_dist", 2.0}}), Role::Attacker, bc.rules, inst).op == "score");
}

TEST_CASE("standby searches while the ball is unknown") {
  const BehaviorConfig bc = make_run_config(json::object()).behavior;
  OperatorInstance op(&bc.operators.at("standby"));
  CHECK(op.advance(facts({})) == "search");
  CHECK(op.advance(facts({"ball_known"})) == "hold_position");
}

TEST_CASE("score ends in a kick") {
  const BehaviorConfig bc = make_run_config(json::object()).behavior;
  OperatorInstance op(&bc.operators.at("score"));
  const Situation near = facts({"has_ball", "aligned_goal"}, {{"goal_dist", 2.0}});
  CHECK(op.advance(near) == "align_goal");
  CHECK(op.advance(near) == "kick");
  CHECK(op.advance(near).empty());
  CHECK(op.done());
}

TEST_CASE("new operators plug in by name") {
  json doc = make_run_config(json::object()).behavior.source;
  doc["operators"]["celebrate"] = {{"states", {{"spin", "hold_position"}}}, {"initial", "spin"}, {"arcs", json::array()}};
  doc["rules"]["Attacker"].insert(doc["rules"]["Attacker"].begin(), json{{"when", "kicked"}, {"then", "celebrate"}});
  const BehaviorConfig bc = parse_behavior_config(doc);
  const auto inst = bc.installed();
  CHECK(select_behavior(facts({"kicked"}), Role::Attacker, bc.rules, inst).op == "celebrate");
  CHECK(select_behavior(facts({"ball_known", "bid_won"}), Role::Attacker, bc.rules, inst).op == "go");

  RuleTable missing = parse_rule_table(json{{"Attacker", {{{"when", "true"}, {"then", "dance"}}}}});
  const Selection s = select_behavior(facts({}), Role::Attacker, missing, inst);
  CHECK(s.fallback);
  CHECK(s.op == "standby");
}

TEST_CASE("malformed operators and conditions are rejected") {
  const auto& tasks = primitive_tasks();
  CHECK_THROWS_AS(parse_operator("x", json{{"states", {{"a", "fly"}}}, {"initial", "a"}}, tasks), ConfigError);
  CHECK_THROWS_AS(parse_operator("x", json{{"states", {{"a", "idle"}, {"b", "idle"}}}, {"initial", "a"}}, tasks),
                  ConfigError);
  CHECK_THROWS_AS(Condition::parse("has_ball && wings"), ConfigError);
  CHECK_THROWS_AS(Condition::parse("goal_dist <"), ConfigError);
}

TEST_CASE("go drives at the ball") {
  StillTeam team;
  AgentOutput out;
  for (int t = 0; t < 60; ++t) {
    team.tick(0, t);
    out = team.tick(1, t);
  }
  CHECK(team.agents[1]->role() == Role::Attacker);
  CHECK(team.agents[1]->operator_name() == "go");
  CHECK(team.agents[1]->current_task() == "approach_ball");
  CHECK(out.drive.v > 0.0);
  CHECK(std::abs(out.drive.omega) < 0.05);
  CHECK(team.agents[0]->operator_name() != "go");
}

TEST_CASE("a sighting is on the blackboard before the decision") {
  StillTeam team;
  team.tick(0, 0);
  team.tick(1, 0);
  const GaussianEstimate* e = team.agents[1]->blackboard().get<GaussianEstimate>(Key::BallEstimate, 1);
  REQUIRE(e);
  CHECK(e->timestamp == 0.0);
  CHECK(team.agents[1]->situation().flags.at("ball_known"));
}

TEST_CASE("selection does not depend on operator execution") {
  StillTeam on, off;
  off.agents[1]->set_control_enabled(false);
  for (int t = 0; t < 200; ++t) {
    for (int i = 0; i < 2; ++i) {
      on.tick(i, t);
      off.tick(i, t);
    }
    CHECK(on.agents[1]->last_selection() == off.agents[1]->last_selection());
  }
}

TEST_CASE("identical seeds give identical blackboards") {
  StillTeam a, b;
  for (int t = 0; t < 200; ++t)
    for (int i = 0; i < 2; ++i) {
      a.tick(i, t);
      b.tick(i, t);
      CHECK(a.agents[i]->blackboard().digest() == b.agents[i]->blackboard().digest());
    }
}

TEST_CASE("captain fails over after a silent death") {
  StillTeam team;
  const int round = team.cfg.behavior.decision_period;
  int t = 0;
  for (; t < 50; ++t)
    for (int i = 0; i < 2; ++i) team.tick(i, t);
  CHECK(team.agents[0]->captain());
  CHECK_FALSE(team.agents[1]->captain());
  const int death = t;
  int took_over = -1;
  for (; t < 200 && took_over < 0; ++t) {
    team.tick(1, t);
    if (team.agents[1]->captain()) took_over = t;
  }
  REQUIRE(took_over >= 0);
  const double delay = (took_over - death) * team.cfg.dt - team.cfg.behavior.liveness;
  CHECK(delay <= round * team.cfg.dt + 1e-9);
}

TEST_CASE("passes succeed in an empty field") {
  const RunConfig cfg = make_run_config(json::object());
  int ok = 0;
  for (int s = 0; s < 100; ++s) ok += run_pass_trial(cfg, 1000 + s).success;
  CHECK(ok >= 80);
}

}  // TEST_SUITE
