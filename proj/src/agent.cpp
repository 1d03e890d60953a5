#include "socsim/agent.hpp"

#include <algorithm>
#include <cmath>

#include "socsim/error.hpp"

namespace socsim {

namespace {

constexpr double kTeamPoseMaxAge = 1.0;  // s a teammate pose stays usable
constexpr double kSonarObstacleRange = 2.5;
constexpr double kReceiveChaseRange = 1.5;

double get_number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("behavior: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::vector<int> get_ids(const nlohmann::json& j, const char* key) {
  std::vector<int> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) out.push_back(v.get<int>());
  return out;
}

}  // namespace

const std::set<std::string>& primitive_tasks() {
  static const std::set<std::string> t{"approach_ball", "dribble_to_goal", "align_goal",     "kick",
                                       "align_receiver", "kick_pass",      "hold_position",  "search",
                                       "goalie_position", "receive_position", "idle"};
  return t;
}

std::set<std::string> BehaviorConfig::installed() const {
  std::set<std::string> out;
  for (const auto& [name, fsa] : operators) out.insert(name);
  return out;
}

BehaviorConfig parse_behavior_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("behavior config must be an object");
  BehaviorConfig c;
  c.source = j;
  if (!j.contains("operators") || !j.at("operators").is_object())
    throw ConfigError("behavior: 'operators' object required");
  for (const auto& [name, body] : j.at("operators").items())
    c.operators.emplace(name, parse_operator(name, body, primitive_tasks()));
  for (const char* required : {"standby", "go", "dribble", "score"})
    if (!c.operators.count(required))
      throw ConfigError(std::string("behavior: operator '") + required + "' must be installed");

  if (!j.contains("rules")) throw ConfigError("behavior: 'rules' required");
  c.rules = parse_rule_table(j.at("rules"));
  if (j.contains("tactics")) c.tactics = parse_tactics(j.at("tactics"));

  if (j.contains("bid_weights")) {
    const auto& w = j.at("bid_weights");
    if (!w.is_array() || w.size() != 3) throw ConfigError("behavior: 'bid_weights' needs three numbers");
    c.weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
    if (c.weights.distance < 0 || c.weights.behind < 0 || c.weights.bearing < 0)
      throw ConfigError("behavior: bid weights must be non-negative");
  }
  c.swap_margin = get_number(j, "swap_margin", c.swap_margin);
  c.captain_priority = get_ids(j, "captain_priority");
  c.goalkeeper_preference = get_ids(j, "goalkeeper_preference");
  c.decision_period = static_cast<int>(get_number(j, "decision_period", c.decision_period));
  c.liveness = get_number(j, "liveness", c.liveness);
  c.sighting_window = get_number(j, "sighting_window", c.sighting_window);
  c.aligned_tol = get_number(j, "aligned_tol", c.aligned_tol);
  c.shoot_impulse = get_number(j, "shoot_impulse", c.shoot_impulse);
  if (c.decision_period < 1) throw ConfigError("behavior: decision_period must be >= 1");
  if (c.liveness <= 0.0) throw ConfigError("behavior: liveness must be positive");
  if (j.contains("pass")) {
    const auto& p = j.at("pass");
    c.pass.propose_timeout = get_number(p, "propose_timeout", c.pass.propose_timeout);
    c.pass.pass_timeout = get_number(p, "pass_timeout", c.pass.pass_timeout);
    c.pass.min_distance = get_number(p, "min_distance", c.pass.min_distance);
    c.pass.max_distance = get_number(p, "max_distance", c.pass.max_distance);
    c.pass.arrival_speed = get_number(p, "arrival_speed", c.pass.arrival_speed);
    c.pass.align_tol = get_number(p, "align_tol", c.pass.align_tol);
    if (c.pass.propose_timeout <= 0.0 || c.pass.pass_timeout <= c.pass.propose_timeout)
      throw ConfigError("behavior: pass timeouts must satisfy 0 < propose_timeout < pass_timeout");
  }
  return c;
}

RobotAgent::RobotAgent(int id, const TeamContext* ctx, std::uint64_t seed)
    : id_(id), ctx_(ctx), bb_(id), guide_(seed) {
  if (!ctx_ || !ctx_->field) throw ConfigError("agent: team context without a field");
  for (int i = 0; i < ctx_->team_size; ++i) {
    last_heard_[i] = 0.0;  // everyone starts on the pitch
    alive_.insert(i);
  }
  RoleAssignmentInput in;
  in.alive = alive_;
  in.goalkeeper_preference = ctx_->behavior.goalkeeper_preference;
  in.swap_margin = ctx_->behavior.swap_margin;
  auto initial = assign_roles(in, ctx_->behavior.tactics);
  if (auto it = initial.roles.find(id_); it != initial.roles.end()) role_ = it->second;
}

void RobotAgent::place(const Pose& p) {
  // Proposals sent before a placement belong to the previous play.
  placed_at_ = tick_ >= 0 ? now_ + 0.5 * ctx_->dt : -1e9;
  guide_.reset(p);
  last_estimate_ = {p, 1.0, 1.0, true};
  pose_trusted_ = true;
  if (commit_ && !is_terminal(commit_->state)) commit_->state = CommitmentState::Dropped;
  op_.reset();
  reselect_ = true;
}

std::string RobotAgent::fsa_state() const { return op_ ? op_->state() : std::string(); }

std::vector<AgentEvent> RobotAgent::take_events() {
  std::vector<AgentEvent> out;
  out.swap(events_);
  return out;
}

void RobotAgent::event(std::string kind, std::string detail) {
  events_.push_back({std::move(kind), std::move(detail)});
}

template <class F>
void RobotAgent::run_micro_agent(const char* name, F&& body, Channel& channel) {
  Staged st;
  const bool timed = static_cast<bool>(ctx_->budget.clock);
  const double t0 = timed ? ctx_->budget.clock() : 0.0;
  body(st);
  if (timed && ctx_->budget.clock() - t0 > ctx_->budget.budget) {
    event("overrun", name);
    return;
  }
  commit(st, channel);
}

void RobotAgent::commit(Staged& st, Channel& channel) {
  for (auto& [key, slot, value] : st.writes)
    if (auto update = bb_.write(key, slot, std::move(value), now_)) channel.broadcast(id_, *update, now_);
  for (auto& [to, msg] : st.messages) {
    if (to < 0) channel.broadcast(id_, msg, now_);
    else channel.send(id_, to, msg, now_);
  }
}

AgentOutput RobotAgent::tick(int tick, const Perception& in, Channel& channel) {
  tick_ = tick;
  now_ = tick * ctx_->dt;
  has_ball_ = in.has_ball;
  receive(channel);

  run_micro_agent("vision", [&](Staged& st) { vision(in, st); }, channel);
  run_micro_agent("fusion", [&](Staged& st) { fusion(st); }, channel);
  run_micro_agent("machine", [&](Staged& st) { machine(in, st); }, channel);

  if (!control_enabled_) return {};
  const bool timed = static_cast<bool>(ctx_->budget.clock);
  const double t0 = timed ? ctx_->budget.clock() : 0.0;
  AgentOutput out = control(in);
  if (timed && ctx_->budget.clock() - t0 > ctx_->budget.budget) {
    event("overrun", "control");
    AgentOutput held = last_out_;
    held.kick_impulse.reset();
    return held;
  }
  last_out_ = out;
  return out;
}

void RobotAgent::receive(Channel& channel) {
  for (const Message& m : channel.deliver(id_, now_)) {
    if (const auto* u = std::get_if<BbUpdate>(&m.payload)) {
      if (u->key == Key::Heartbeat)
        last_heard_[u->entry.origin] = std::max(last_heard_[u->entry.origin], u->entry.timestamp);
      bb_.apply(*u);
    } else if (const auto* pm = std::get_if<PassMessage>(&m.payload)) {
      on_pass_message(*pm, channel);
    }
  }
}

// ---------------------------------------------------------------- vision and fusion

void RobotAgent::vision(const Perception& in, Staged& st) {
  guide_.observe(std::nullopt, in.odometry);

  if (in.localize) {
    PoseEstimate prev = last_estimate_;
    if (auto p = guide_.pose()) prev.pose = *p;
    prev.trusted = false;
    const PoseEstimate res = localize(in.scan, *ctx_->field, in.goal, prev, ctx_->localizer);
    last_loc_ = LocalizationFrame{prev, res};
    last_estimate_ = res;
    pose_trusted_ = res.trusted;
    guide_.observe(res, Pose{});
    st.writes.emplace_back(Key::Pose, 0, res);
  }

  sonar_obstacles_.clear();
  if (in.sonar && guide_.pose()) {
    const Pose me = *guide_.pose();
    const double r = ctx_->limits.radius;
    for (int k = 0; k < kSonarBeams; ++k) {
      const double range = in.sonar->ranges[k];
      if (range >= kSonarObstacleRange) continue;
      const Vec2 dir = Vec2::unit(me.theta() + SonarScan::beam_angle(k));
      sonar_obstacles_.push_back({me.position() + dir * (range + r), r});
    }
  }

  if (!in.sightings.empty() && guide_.pose()) {
    PoseEstimate robot = last_estimate_;
    robot.pose = *guide_.pose();
    robot.trusted = pose_trusted_;
    for (const auto& obs : in.sightings) last_sighting_ = std::max(last_sighting_, obs.timestamp);
    GaussianEstimate own = fuse_local(in.sightings, robot, ctx_->fusion);
    own.source = id_;
    own_ball_ = own;
    st.writes.emplace_back(Key::BallEstimate, id_, own);
  }
}

void RobotAgent::fusion(Staged& st) {
  std::vector<GaussianEstimate> estimates;
  for (const auto& [slot, entry] : bb_.slots(Key::BallEstimate))
    if (const auto* g = std::get_if<GaussianEstimate>(&entry->value)) {
      GaussianEstimate e = *g;
      e.source = slot;
      estimates.push_back(e);
    }
  belief_ = fuse_view(id_, estimates, belief_, now_, ctx_->fusion);
  st.writes.emplace_back(Key::TeamBall, 0, belief_);
}

// ---------------------------------------------------------------- machine

void RobotAgent::machine(const Perception& in, Staged& st) {
  const auto& cfg = ctx_->behavior;
  st.writes.emplace_back(Key::Heartbeat, id_, Heartbeat{tick_});

  alive_.clear();
  alive_.insert(id_);
  for (const auto& [id, t] : last_heard_)
    if (id != id_ && now_ - t <= cfg.liveness + 1e-9) alive_.insert(id);

  std::vector<int> priority = cfg.captain_priority;
  if (priority.empty())
    for (int i = 0; i < ctx_->team_size; ++i) priority.push_back(i);
  const bool was_captain = captain_;
  captain_ = elect_captain(alive_, priority) == id_;
  if (captain_ && !was_captain && tick_ > 0) event("captain", "organizer enabled");

  const bool decision = tick_ % cfg.decision_period == 0;
  if (decision) {
    const int round = tick_ / cfg.decision_period;
    if (auto me = guide_.pose()) st.writes.emplace_back(Key::TeamPoses, id_, PoseEstimate{*me, last_estimate_.score,
                                                                                         last_estimate_.fit, pose_trusted_});

    // Winner of the previous round, from the bids every alive teammate sent for it.
    std::map<int, Bid> bids;
    if (own_bid_.round == round - 1) bids[id_] = own_bid_;
    for (const auto& [slot, entry] : bb_.slots(Key::Bids))
      if (const auto* b = std::get_if<Bid>(&entry->value); b && slot != id_ && b->round == round - 1) bids[slot] = *b;
    bool complete = true;
    for (int id : alive_)
      if (!bids.count(id)) complete = false;
    std::map<int, Bid> alive_bids;
    for (const auto& [id, b] : bids)
      if (alive_.count(id)) alive_bids[id] = b;
    const auto winner = bid_winner(alive_bids);
    bid_won_ = complete && winner && *winner == id_;

    Bid bid;
    bid.round = round;
    bid.sees_ball = own_ball_ && now_ - last_sighting_ <= cfg.sighting_window + 1e-9 && guide_.pose() &&
                    !(commit_ && commit_->kicker == id_ && kicked_ && !is_terminal(commit_->state));
    if (bid.sees_ball) bid.fitness = bid_fitness(*guide_.pose(), own_ball_->mean, ctx_->attack_sign, cfg.weights);
    own_bid_ = bid;
    st.writes.emplace_back(Key::Bids, id_, bid);

    if (captain_) {
      RoleAssignmentInput ra;
      ra.alive = alive_;
      if (belief_.status != BallStatus::Unknown)
        ra.ball_half = ctx_->attack_sign * belief_.estimate.mean.x < 0.0 ? BallHalf::Own : BallHalf::Opponent;
      if (const auto* prev = bb_.get<RoleTable>(Key::Roles)) ra.previous = prev->roles;
      for (const auto& [id, b] : alive_bids)
        if (b.sees_ball) ra.fitness[id] = b.fitness;
      ra.goalkeeper_preference = cfg.goalkeeper_preference;
      ra.swap_margin = cfg.swap_margin;
      const RoleAssignment assignment = assign_roles(ra, cfg.tactics);
      if (assignment.fallback) event("tactics_fallback", to_string(ra.ball_half));
      RoleTable table{round, assignment.roles};
      last_assignment_ = table;
      st.writes.emplace_back(Key::Roles, 0, table);
      role_ = table.roles.at(id_);
    } else if (const auto* t = bb_.get<RoleTable>(Key::Roles)) {
      if (auto it = t->roles.find(id_); it != t->roles.end()) role_ = it->second;
    }
    st.writes.emplace_back(Key::Role, 0, role_);
  }

  pass_timers(in, st);

  const Situation s = situation();
  if (decision) {
    const Selection sel = select_behavior(s, role_, cfg.rules, cfg.installed());
    selection_ = sel.op;
    fallback_ = sel.fallback;
    if (sel.fallback) event("fallback", "operator not installed");
  }
  if (decision || reselect_ || !op_ || op_->done()) select(s);
  reselect_ = false;

  if (op_name_ == "pass" && op_ && op_->state() == op_->fsa().initial &&
      (!commit_ || is_terminal(commit_->state)) && has_ball_)
    propose_pass(st);

  if (commit_) st.writes.emplace_back(Key::Commitments, 0, *commit_);
}

void RobotAgent::select(const Situation& s) {
  const auto& cfg = ctx_->behavior;
  const Selection sel = select_behavior(s, role_, cfg.rules, cfg.installed());
  if (sel.fallback && !fallback_) event("fallback", "operator not installed");
  if (op_ && !op_->done() && sel.op == op_name_) return;
  op_name_ = sel.op;
  op_ = std::make_unique<OperatorInstance>(&cfg.operators.at(op_name_));
}

// ---------------------------------------------------------------- pass protocol

void RobotAgent::send_pass(PassMessageType type, Staged& st) {
  const int peer = commit_->kicker == id_ ? commit_->receiver : commit_->kicker;
  st.messages.emplace_back(peer, PassMessage{type, *commit_});
  event(to_string(type), std::to_string(commit_->id));
}

void RobotAgent::on_pass_message(const PassMessage& m, Channel& channel) {
  const Commitment& c = m.commitment;
  const bool mine = commit_ && commit_->id == c.id;
  switch (m.type) {
    case PassMessageType::Propose: {
      const bool busy = commit_ && !is_terminal(commit_->state);
      PassMessage reply{PassMessageType::Accept, c};
      const double sent = c.deadline - ctx_->behavior.pass.pass_timeout;
      if (busy || role_ == Role::Goalkeeper || has_ball_ || now_ > c.deadline || sent < placed_at_) {
        reply.type = PassMessageType::Reject;
        reply.commitment.state = CommitmentState::Dropped;
        event("reject", std::to_string(c.id));
      } else {
        commit_ = c;
        commit_->state = CommitmentState::Active;
        reply.commitment = *commit_;
        reselect_ = true;
        event("accept", std::to_string(c.id));
      }
      channel.send(id_, c.kicker, reply, now_);
      break;
    }
    case PassMessageType::Accept:
      if (mine && commit_->state == CommitmentState::Proposed) {
        commit_->state = CommitmentState::Active;
        reselect_ = true;
      }
      break;
    case PassMessageType::Reject:
    case PassMessageType::Drop:
      if (mine && !is_terminal(commit_->state)) {
        commit_->state = CommitmentState::Dropped;
        reselect_ = true;
      }
      break;
    case PassMessageType::Done:
      if (mine && !is_terminal(commit_->state)) {
        commit_->state = CommitmentState::Done;
        reselect_ = true;
      }
      break;
  }
}

void RobotAgent::pass_timers(const Perception& in, Staged& st) {
  if (!commit_ || is_terminal(commit_->state)) return;
  const bool kicker = commit_->kicker == id_;
  auto end = [&](CommitmentState to, PassMessageType msg) {
    commit_->state = to;
    reselect_ = true;
    send_pass(msg, st);
  };
  if (now_ >= commit_->deadline - 1e-9) {
    end(CommitmentState::Dropped, PassMessageType::Drop);
  } else if (kicker && commit_->state == CommitmentState::Proposed && now_ >= propose_deadline_ - 1e-9) {
    end(CommitmentState::Dropped, PassMessageType::Drop);
  } else if (kicker && !kicked_ && !in.has_ball) {
    end(CommitmentState::Dropped, PassMessageType::Drop);
  } else if (!kicker && in.has_ball) {
    end(CommitmentState::Done, PassMessageType::Done);
  } else if (!kicker && role_ == Role::Goalkeeper) {
    end(CommitmentState::Dropped, PassMessageType::Drop);
  }
}

std::optional<int> RobotAgent::pick_receiver(Vec2* where) const {
  const auto me = guide_.pose();
  if (!me) return std::nullopt;
  const auto& p = ctx_->behavior.pass;
  const auto* roles = bb_.get<RoleTable>(Key::Roles);
  std::optional<int> best;
  double best_x = -1e300;
  for (const auto& [slot, entry] : bb_.slots(Key::TeamPoses)) {
    if (slot == id_ || !alive_.count(slot) || now_ - entry->timestamp > kTeamPoseMaxAge) continue;
    if (roles) {
      auto r = roles->roles.find(slot);
      if (r != roles->roles.end() && r->second == Role::Goalkeeper) continue;
    }
    const auto* pe = std::get_if<PoseEstimate>(&entry->value);
    if (!pe) continue;
    const double d = (pe->pose.position() - me->position()).norm();
    if (d < p.min_distance || d > p.max_distance) continue;
    const double fx = ctx_->attack_sign * pe->pose.x;
    if (fx < ctx_->attack_sign * me->x - 1.0) continue;
    if (fx > best_x) {
      best_x = fx;
      best = slot;
      if (where) *where = pe->pose.position();
    }
  }
  return best;
}

bool RobotAgent::propose_pass(Staged& st) {
  Vec2 where;
  const auto receiver = pick_receiver(&where);
  if (!receiver) return false;
  Commitment c;
  c.id = (static_cast<std::uint64_t>(id_ + 1) << 32) | ++commit_counter_;
  c.kicker = id_;
  c.receiver = *receiver;
  c.state = CommitmentState::Proposed;
  c.deadline = now_ + ctx_->behavior.pass.pass_timeout;
  c.reception = where;
  commit_ = c;
  kicked_ = false;
  propose_deadline_ = now_ + ctx_->behavior.pass.propose_timeout;
  send_pass(PassMessageType::Propose, st);
  return true;
}

// ---------------------------------------------------------------- situation

Vec2 RobotAgent::opponent_goal() const { return {ctx_->attack_sign * ctx_->field->length() / 2.0, 0.0}; }
Vec2 RobotAgent::own_goal() const { return {-ctx_->attack_sign * ctx_->field->length() / 2.0, 0.0}; }

std::optional<Vec2> RobotAgent::ball_position() const {
  if (belief_.status == BallStatus::Unknown) return std::nullopt;
  return belief_.estimate.mean;
}

Situation RobotAgent::situation() const {
  Situation s;
  auto& f = s.flags;
  auto& n = s.numbers;
  const auto ball = ball_position();
  const auto me = guide_.pose();
  const double sign = ctx_->attack_sign;

  f["ball_known"] = ball.has_value();
  f["ball_visible"] = own_ball_ && now_ - last_sighting_ <= ctx_->behavior.sighting_window + 1e-9;
  f["has_ball"] = has_ball_;
  f["bid_won"] = bid_won_;
  f["captain"] = captain_;
  const bool live = commit_ && !is_terminal(commit_->state);
  f["pass_kicker"] = live && commit_->kicker == id_;
  f["pass_receiver"] = live && commit_->receiver == id_ && commit_->state == CommitmentState::Active;
  f["pass_active"] = live && commit_->state == CommitmentState::Active;
  f["pass_proposed"] = live && commit_->state == CommitmentState::Proposed;
  f["kicked"] = live && commit_->kicker == id_ && kicked_;
  f["ball_own_half"] = ball && sign * ball->x < 0.0;
  f["ball_opp_half"] = ball && sign * ball->x >= 0.0;
  f["ball_in_own_area"] = ball && sign * ball->x < -ctx_->field->length() / 2.0 + 1.25 && std::abs(ball->y) < 2.0;
  f["receiver_available"] = pick_receiver(nullptr).has_value();
  f["aligned_goal"] = me && std::abs(me->bearing_to(opponent_goal())) < ctx_->behavior.aligned_tol;
  f["aligned_receiver"] = me && live && std::abs(me->bearing_to(commit_->reception)) < ctx_->behavior.pass.align_tol;

  if (me) {
    n["goal_dist"] = (opponent_goal() - me->position()).norm();
    n["own_goal_dist"] = (own_goal() - me->position()).norm();
    n["x"] = sign * me->x;
    if (ball) n["ball_dist"] = (*ball - me->position()).norm();
  }
  if (ball) n["ball_x"] = sign * ball->x;
  return s;
}

// ---------------------------------------------------------------- control

std::vector<Obstacle> RobotAgent::obstacles(std::optional<Vec2> exclude_near) const {
  std::vector<Obstacle> out = sonar_obstacles_;
  const double r = ctx_->limits.radius;
  for (const auto& [slot, entry] : bb_.slots(Key::TeamPoses)) {
    if (slot == id_ || !alive_.count(slot) || now_ - entry->timestamp > kTeamPoseMaxAge) continue;
    if (const auto* pe = std::get_if<PoseEstimate>(&entry->value)) out.push_back({pe->pose.position(), r});
  }
  if (exclude_near) {
    std::erase_if(out, [&](const Obstacle& o) {
      return (o.center - *exclude_near).norm() - o.radius < r + 0.3;
    });
  }
  return out;
}

Pose RobotAgent::home_position() const {
  const double sign = ctx_->attack_sign;
  const double side = id_ % 2 == 0 ? 1.0 : -1.0;
  Vec2 home;
  switch (role_) {
    case Role::Goalkeeper: home = {-5.4, 0.0}; break;
    case Role::Defender: home = {-3.0, 1.0 * side}; break;
    case Role::Attacker: home = {1.0, 1.5 * side}; break;
    case Role::FullPlayer: home = {-1.0, 1.5 * side}; break;
  }
  home = home * sign;
  if (const auto ball = ball_position()) {
    home += (*ball - home) * 0.3;
    return {home, (*ball - home).angle()};
  }
  return {home, sign > 0 ? 0.0 : kPi};
}

AgentOutput RobotAgent::drive_to(const Pose& target, GuideMode mode, const Perception& in,
                                 std::optional<Vec2> exclude_near) {
  const auto obs = obstacles(exclude_near);
  const GuideOutput g = guide_.command(in.v, target, mode, obs, ctx_->guide, now_);
  AgentOutput out;
  if (g.standby) return out;
  out.drive = {g.cmd.v_cmd, g.cmd.omega_cmd};
  return out;
}

AgentOutput RobotAgent::control(const Perception& in) {
  task_.clear();
  if (!op_ || op_->done()) return {};
  task_ = op_->advance(situation());
  if (task_.empty()) return {};
  return execute(task_, in);
}

AgentOutput RobotAgent::execute(const std::string& task, const Perception& in) {
  const auto me = guide_.pose();
  const auto ball = ball_position();
  if (!me) return {};
  const double hold = hold_distance(ctx_->limits, ctx_->ball);

  if (task == "idle") return {};
  if (task == "search") return {{0.0, 1.0}, std::nullopt};
  if (task == "approach_ball") {
    if (!ball) return {{0.0, 1.0}, std::nullopt};
    return drive_to({*ball, (*ball - me->position()).angle()}, GuideMode::Free, in, *ball);
  }
  if (task == "dribble_to_goal" || task == "align_goal") {
    const Vec2 goal = opponent_goal();
    return drive_to({goal, (goal - me->position()).angle()}, GuideMode::Dribble, in);
  }
  if (task == "align_receiver") {
    if (!commit_) return {};
    const Vec2 r = commit_->reception;
    return drive_to({r, (r - me->position()).angle()}, GuideMode::Dribble, in, r);
  }
  if (task == "kick") {
    AgentOutput out;
    out.kick_impulse = ctx_->behavior.shoot_impulse;
    return out;
  }
  if (task == "kick_pass") {
    AgentOutput out;
    if (!commit_) return out;
    const Vec2 ball_at = me->to_field({hold, 0.0});
    const double d = std::max(0.0, (commit_->reception - ball_at).norm() - hold);
    const double speed = ctx_->behavior.pass.arrival_speed + ctx_->ball.friction * d;
    out.kick_impulse = std::min(ctx_->ball.max_impulse, ctx_->ball.mass * speed);
    kicked_ = true;
    return out;
  }
  if (task == "hold_position") return drive_to(home_position(), GuideMode::Free, in);
  if (task == "goalie_position") {
    const double sign = ctx_->attack_sign;
    const double y = ball ? std::clamp(0.5 * ball->y, -0.8, 0.8) : 0.0;
    const Vec2 spot{own_goal().x + sign * 0.5, y};
    const double heading = ball ? (*ball - spot).angle() : (sign > 0 ? 0.0 : kPi);
    return drive_to({spot, heading}, GuideMode::Free, in);
  }
  if (task == "receive_position") {
    if (ball && (*ball - me->position()).norm() < kReceiveChaseRange)
      return drive_to({*ball, (*ball - me->position()).angle()}, GuideMode::Free, in, *ball);
    const Vec2 spot = commit_ ? commit_->reception : me->position();
    const double heading = ball ? (*ball - spot).angle() : me->theta();
    return drive_to({spot, heading}, GuideMode::Free, in, ball);
  }
  throw ConfigError("unknown primitive task '" + task + "'");
}

}  // namespace socsim
