#include "socsim/team.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "socsim/error.hpp"

namespace socsim {

bool behind_ball(const Pose& robot, Vec2 ball, double attack_sign) {
  return attack_sign * robot.x > attack_sign * ball.x;
}

double bid_fitness(const Pose& robot, Vec2 ball, double attack_sign, const BidWeights& w) {
  const double dist = (ball - robot.position()).norm();
  const double behind = behind_ball(robot, ball, attack_sign) ? 1.0 : 0.0;
  const double bearing = std::abs(robot.bearing_to(ball));
  return w.distance * dist + w.behind * behind + w.bearing * bearing;
}

std::optional<int> bid_winner(const std::map<int, Bid>& bids) {
  std::optional<int> best;
  double best_f = 0.0;
  for (const auto& [id, b] : bids) {
    if (!b.sees_ball) continue;
    if (!best || b.fitness < best_f) {
      best = id;
      best_f = b.fitness;
    }
  }
  return best;
}

int elect_captain(const std::set<int>& alive, const std::vector<int>& priority) {
  for (int id : priority)
    if (alive.count(id)) return id;
  throw std::runtime_error("team down: no alive robot in the captain list");
}

const char* to_string(BallHalf h) {
  switch (h) {
    case BallHalf::Own: return "own";
    case BallHalf::Opponent: return "opponent";
    case BallHalf::Unknown: return "unknown";
  }
  return "?";
}

TacticTable parse_tactics(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("tactics must be an object keyed by ball half");
  TacticTable t;
  for (const auto& [half_name, rows] : j.items()) {
    BallHalf half;
    if (half_name == "own") half = BallHalf::Own;
    else if (half_name == "opponent") half = BallHalf::Opponent;
    else if (half_name == "unknown") half = BallHalf::Unknown;
    else throw ConfigError("tactics: unknown ball half '" + half_name + "'");
    for (const auto& [count, roles] : rows.items()) {
      const int n = std::stoi(count);
      std::vector<Role> row;
      for (const auto& r : roles) row.push_back(role_from_string(r.get<std::string>()));
      if (static_cast<int>(row.size()) != n)
        throw ConfigError("tactics: row " + half_name + "/" + count + " has the wrong length");
      if (std::count(row.begin(), row.end(), Role::Goalkeeper) != 1)
        throw ConfigError("tactics: row " + half_name + "/" + count + " needs exactly one Goalkeeper");
      t.rows[half][n] = std::move(row);
    }
  }
  return t;
}

RoleAssignment assign_roles(const RoleAssignmentInput& in, const TacticTable& table) {
  RoleAssignment out;
  if (in.alive.empty()) return out;
  const int n = static_cast<int>(in.alive.size());

  std::vector<Role> row;
  auto half = table.rows.find(in.ball_half);
  if (half != table.rows.end()) {
    auto r = half->second.find(n);
    if (r != half->second.end()) row = r->second;
  }
  if (row.empty()) {
    out.fallback = true;
    row.assign(n, Role::FullPlayer);
    row[0] = Role::Goalkeeper;
  }

  int keeper = -1;
  for (int id : in.goalkeeper_preference)
    if (in.alive.count(id)) {
      keeper = id;
      break;
    }
  if (keeper < 0) keeper = *in.alive.begin();
  out.roles[keeper] = Role::Goalkeeper;

  std::vector<Role> needed;
  bool keeper_dropped = false;
  for (Role r : row) {
    if (r == Role::Goalkeeper && !keeper_dropped) {
      keeper_dropped = true;
      continue;
    }
    needed.push_back(r == Role::Goalkeeper ? Role::FullPlayer : r);
  }

  std::vector<int> pending;
  for (int id : in.alive) {
    if (id == keeper) continue;
    auto prev = in.previous.find(id);
    if (prev != in.previous.end()) {
      auto slot = std::find(needed.begin(), needed.end(), prev->second);
      if (slot != needed.end()) {
        out.roles[id] = prev->second;
        needed.erase(slot);
        continue;
      }
    }
    pending.push_back(id);
  }
  for (std::size_t i = 0; i < pending.size(); ++i) out.roles[pending[i]] = needed[i];

  // Exchange the best-placed Defender with the worst-placed Attacker when clearly better.
  int best_def = -1, worst_att = -1;
  for (const auto& [id, role] : out.roles) {
    auto f = in.fitness.find(id);
    if (f == in.fitness.end()) continue;
    if (role == Role::Defender && (best_def < 0 || f->second < in.fitness.at(best_def))) best_def = id;
    if (role == Role::Attacker && (worst_att < 0 || f->second > in.fitness.at(worst_att))) worst_att = id;
  }
  if (best_def >= 0 && worst_att >= 0 &&
      in.fitness.at(best_def) + in.swap_margin < in.fitness.at(worst_att)) {
    out.roles[best_def] = Role::Attacker;
    out.roles[worst_att] = Role::Defender;
    out.swapped = true;
  }
  return out;
}

}  // namespace socsim
