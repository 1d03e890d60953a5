#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "socsim/blackboard.hpp"

namespace socsim {

struct BidWeights {
  double distance = 1.0;
  double behind = 2.0;
  double bearing = 0.5;
};

/// True when the robot lies strictly between the ball and the opponent goal along x.
bool behind_ball(const Pose& robot, Vec2 ball, double attack_sign);

/// Lower is better: distance to the ball, a penalty for standing between the ball and the
/// opponent goal, and the turn needed to face the ball.
double bid_fitness(const Pose& robot, Vec2 ball, double attack_sign, const BidWeights& w);

/// Minimum fitness among seeing robots, ties to the lower id; nullopt when nobody sees the ball.
std::optional<int> bid_winner(const std::map<int, Bid>& bids);

/// First alive id in priority order. Throws std::runtime_error ("team down") when none is alive.
int elect_captain(const std::set<int>& alive, const std::vector<int>& priority);

enum class BallHalf { Own, Opponent, Unknown };

const char* to_string(BallHalf h);

/// Tactic rows keyed by ball half and number of alive robots.
struct TacticTable {
  std::map<BallHalf, std::map<int, std::vector<Role>>> rows;
};

TacticTable parse_tactics(const nlohmann::json& j);

struct RoleAssignmentInput {
  std::set<int> alive;
  BallHalf ball_half = BallHalf::Unknown;
  std::map<int, Role> previous;
  std::map<int, double> fitness;  // current bid fitness of robots that see the ball
  std::vector<int> goalkeeper_preference;
  double swap_margin = 1.0;
};

struct RoleAssignment {
  std::map<int, Role> roles;
  bool fallback = false;  // the table had no row for this situation
  bool swapped = false;
};

/// Goalkeeper from the preference list, remaining roles from the tactic row with sticky
/// reuse of previous roles, then at most one Defender/Attacker exchange per round.
RoleAssignment assign_roles(const RoleAssignmentInput& in, const TacticTable& table);

}  // namespace socsim
