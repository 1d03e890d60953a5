#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "socsim/blackboard.hpp"
#include "socsim/fusion.hpp"
#include "socsim/localizer.hpp"
#include "socsim/navigation.hpp"
#include "socsim/rules.hpp"
#include "socsim/sim.hpp"
#include "socsim/team.hpp"

namespace socsim {

struct PassConfig {
  double propose_timeout = 0.3;  // s to wait for accept/reject
  double pass_timeout = 4.0;     // s from proposal to the shared deadline
  double min_distance = 1.5;
  double max_distance = 5.0;
  double arrival_speed = 1.2;    // m/s the ball should keep when it reaches the receiver
  double align_tol = 0.06;       // rad
};

/// Everything the behavior layer reads from configuration files.
struct BehaviorConfig {
  RuleTable rules;
  std::map<std::string, OperatorFSA> operators;
  TacticTable tactics;
  BidWeights weights;
  double swap_margin = 1.0;
  std::vector<int> captain_priority;       // team-local ids; empty means 0..n-1
  std::vector<int> goalkeeper_preference;  // empty means 0..n-1
  int decision_period = 10;                // control ticks per decision round
  double liveness = 0.3;                   // s without a heartbeat before a teammate counts as dead
  double sighting_window = 0.2;            // s a camera sighting counts as "seeing the ball"
  double aligned_tol = 0.1;                // rad, facing the goal
  double shoot_impulse = 2.7;
  PassConfig pass;
  nlohmann::json source;  // the document this was parsed from

  std::set<std::string> installed() const;
};

/// Primitive tasks operators may name.
const std::set<std::string>& primitive_tasks();

/// Throws ConfigError on any malformed section.
BehaviorConfig parse_behavior_config(const nlohmann::json& j);

/// Optional time budget per micro-agent. `clock` returns seconds; when set, a micro-agent
/// that runs longer than `budget` has its writes discarded for that tick.
struct TickBudget {
  std::function<double()> clock;
  double budget = 0.0;
};

/// Immutable per-team context shared by the team's agents.
struct TeamContext {
  const FieldModel* field = nullptr;
  int team_size = 0;
  double attack_sign = 1.0;  // +1 attacks the goal at +x
  double dt = 0.01;
  BehaviorConfig behavior;
  GuideParams guide;
  FusionConfig fusion;
  LocalizerConfig localizer;
  BallPhysics ball;
  RobotLimits limits;
  TickBudget budget;
};

/// Sensor inputs of one control tick.
struct Perception {
  Pose odometry;  // body-frame motion over the last tick
  double v = 0.0;
  bool has_ball = false;
  std::vector<BallObservation> sightings;
  bool localize = false;
  std::vector<TransitionPixel> scan;
  std::optional<GoalObservation> goal;
  std::optional<SonarScan> sonar;
};

struct AgentOutput {
  DriveCommand drive;
  std::optional<double> kick_impulse;
};

/// Input and output of one localization frame, for the match log and replay.
struct LocalizationFrame {
  PoseEstimate prev;
  PoseEstimate result;
};

struct AgentEvent {
  std::string kind;
  std::string detail;
};

/// One robot's software stack: Vision, Fusion, Machine and Control micro-agents sharing a
/// blackboard, run in that order once per control tick.
class RobotAgent {
 public:
  RobotAgent(int id, const TeamContext* ctx, std::uint64_t seed);

  AgentOutput tick(int tick, const Perception& in, Channel& channel);

  /// Known placement (kickoff); also resets the dead-reckoned pose.
  void place(const Pose& p);

  int id() const { return id_; }
  Role role() const { return role_; }
  bool captain() const { return captain_; }
  bool bid_won() const { return bid_won_; }
  const std::string& operator_name() const { return op_name_; }
  std::string fsa_state() const;
  bool operator_running() const { return op_ && !op_->done(); }
  const std::optional<Commitment>& commitment() const { return commit_; }
  const std::set<int>& alive_view() const { return alive_; }
  const std::optional<RoleTable>& last_assignment() const { return last_assignment_; }
  const std::optional<LocalizationFrame>& last_localization() const { return last_loc_; }
  std::optional<Pose> believed_pose() const { return guide_.pose(); }
  const BallBelief& ball_belief() const { return belief_; }
  const Blackboard& blackboard() const { return bb_; }
  const std::string& current_task() const { return task_; }
  /// Rule-table output of the latest decision round, independent of operator execution.
  const std::string& last_selection() const { return selection_; }
  bool selection_fallback() const { return fallback_; }

  /// Events since the previous call (overruns, fallbacks, protocol steps).
  std::vector<AgentEvent> take_events();

  /// Situation as Machine and Control see it now; for tests and traces.
  Situation situation() const;

  void set_control_enabled(bool on) { control_enabled_ = on; }

 private:
  struct Staged {
    std::vector<std::tuple<Key, int, BbValue>> writes;
    std::vector<std::pair<int, PassMessage>> messages;  // -1 broadcasts
  };

  template <class F>
  void run_micro_agent(const char* name, F&& body, Channel& channel);
  void commit(Staged& st, Channel& channel);

  void vision(const Perception& in, Staged& st);
  void fusion(Staged& st);
  void machine(const Perception& in, Staged& st);
  AgentOutput control(const Perception& in);

  void receive(Channel& channel);
  void on_pass_message(const PassMessage& m, Channel& channel);
  void send_pass(PassMessageType type, Staged& st);
  void pass_timers(const Perception& in, Staged& st);
  bool propose_pass(Staged& st);
  std::optional<int> pick_receiver(Vec2* where) const;

  void select(const Situation& s);
  AgentOutput execute(const std::string& task, const Perception& in);
  AgentOutput drive_to(const Pose& target, GuideMode mode, const Perception& in,
                       std::optional<Vec2> exclude_near = std::nullopt);

  Vec2 opponent_goal() const;
  Vec2 own_goal() const;
  Pose home_position() const;
  std::optional<Vec2> ball_position() const;
  std::vector<Obstacle> obstacles(std::optional<Vec2> exclude_near) const;
  void event(std::string kind, std::string detail = {});

  int id_;
  const TeamContext* ctx_;
  Blackboard bb_;
  Guide guide_;

  int tick_ = -1;
  double now_ = 0.0;
  double placed_at_ = -1e9;
  bool control_enabled_ = true;
  bool has_ball_ = false;
  std::vector<Obstacle> sonar_obstacles_;
  AgentOutput last_out_;

  // Vision / fusion state.
  PoseEstimate last_estimate_;
  bool pose_trusted_ = false;
  double last_sighting_ = -1e9;
  std::optional<GaussianEstimate> own_ball_;
  BallBelief belief_;
  std::optional<LocalizationFrame> last_loc_;

  // Organization.
  std::map<int, double> last_heard_;
  std::set<int> alive_;
  bool captain_ = false;
  bool bid_won_ = false;
  Bid own_bid_;
  Role role_ = Role::FullPlayer;
  std::optional<RoleTable> last_assignment_;

  // Operators.
  std::unique_ptr<OperatorInstance> op_;
  std::string op_name_ = "standby";
  std::string task_;
  std::string selection_ = "standby";
  bool fallback_ = false;
  bool reselect_ = true;

  // Pass commitment.
  std::optional<Commitment> commit_;
  double propose_deadline_ = 0.0;
  bool kicked_ = false;
  std::uint32_t commit_counter_ = 0;

  std::vector<AgentEvent> events_;
};

}  // namespace socsim
