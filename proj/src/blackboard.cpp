#include "socsim/blackboard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "socsim/error.hpp"

namespace socsim {

const char* to_string(Role r) {
  switch (r) {
    case Role::Goalkeeper: return "Goalkeeper";
    case Role::Defender: return "Defender";
    case Role::Attacker: return "Attacker";
    case Role::FullPlayer: return "FullPlayer";
  }
  return "?";
}

Role role_from_string(const std::string& s) {
  if (s == "Goalkeeper") return Role::Goalkeeper;
  if (s == "Defender") return Role::Defender;
  if (s == "Attacker") return Role::Attacker;
  if (s == "FullPlayer") return Role::FullPlayer;
  throw ConfigError("unknown role '" + s + "'");
}

const char* to_string(CommitmentState s) {
  switch (s) {
    case CommitmentState::Proposed: return "proposed";
    case CommitmentState::Active: return "active";
    case CommitmentState::Done: return "done";
    case CommitmentState::Dropped: return "dropped";
  }
  return "?";
}

const char* to_string(Key k) {
  switch (k) {
    case Key::Pose: return "pose";
    case Key::TeamPoses: return "team_poses";
    case Key::BallEstimate: return "ball_estimate";
    case Key::TeamBall: return "team_ball";
    case Key::Role: return "role";
    case Key::Roles: return "roles";
    case Key::Commitments: return "commitments";
    case Key::GameEvents: return "game_events";
    case Key::Bids: return "bids";
    case Key::Heartbeat: return "heartbeat";
  }
  return "?";
}

const char* to_string(PassMessageType t) {
  switch (t) {
    case PassMessageType::Propose: return "propose";
    case PassMessageType::Accept: return "accept";
    case PassMessageType::Reject: return "reject";
    case PassMessageType::Drop: return "drop";
    case PassMessageType::Done: return "done";
  }
  return "?";
}

bool supersedes(const BbEntry& incoming, const BbEntry& current) {
  if (incoming.origin == current.origin) return incoming.timestamp >= current.timestamp;
  if (incoming.timestamp != current.timestamp) return incoming.timestamp > current.timestamp;
  return incoming.origin < current.origin;
}

std::map<Key, Locality> default_registry() {
  return {{Key::Pose, Locality::Local},          {Key::TeamPoses, Locality::TeamShared},
          {Key::BallEstimate, Locality::TeamShared}, {Key::TeamBall, Locality::Local},
          {Key::Role, Locality::Local},          {Key::Roles, Locality::TeamShared},
          {Key::Commitments, Locality::Local},   {Key::GameEvents, Locality::TeamShared},
          {Key::Bids, Locality::TeamShared},     {Key::Heartbeat, Locality::TeamShared}};
}

Blackboard::Blackboard(int owner, std::map<Key, Locality> registry)
    : owner_(owner), registry_(std::move(registry)) {}

Locality Blackboard::locality(Key key) const {
  auto it = registry_.find(key);
  if (it == registry_.end()) throw ConfigError(std::string("blackboard key not registered: ") + to_string(key));
  return it->second;
}

std::optional<BbUpdate> Blackboard::write(Key key, int slot, BbValue value, double now) {
  const Locality loc = locality(key);
  BbEntry e{std::move(value), now, owner_};
  auto& cur = entries_[{key, slot}];
  cur = e;
  if (loc == Locality::TeamShared) return BbUpdate{key, slot, std::move(e)};
  return std::nullopt;
}

bool Blackboard::apply(const BbUpdate& u) {
  if (locality(u.key) != Locality::TeamShared) throw ConfigError("remote write to a local-only key");
  auto it = entries_.find({u.key, u.slot});
  if (it == entries_.end()) {
    entries_.emplace(std::make_pair(u.key, u.slot), u.entry);
    return true;
  }
  if (!supersedes(u.entry, it->second)) return false;
  it->second = u.entry;
  return true;
}

const BbEntry* Blackboard::read(Key key, int slot) const {
  locality(key);
  auto it = entries_.find({key, slot});
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::pair<int, const BbEntry*>> Blackboard::slots(Key key) const {
  locality(key);
  std::vector<std::pair<int, const BbEntry*>> out;
  for (auto it = entries_.lower_bound({key, std::numeric_limits<int>::min()});
       it != entries_.end() && it->first.first == key; ++it)
    out.emplace_back(it->first.second, &it->second);
  return out;
}

namespace {

struct Hasher {
  std::uint64_t h = 0xcbf29ce484222325ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x00000100000001b3ull;
    }
  }
  void num(double d) { bytes(&d, sizeof d); }
  void num(std::int64_t i) { bytes(&i, sizeof i); }
  void num(int i) { num(static_cast<std::int64_t>(i)); }
  void num(std::uint64_t i) { bytes(&i, sizeof i); }
  void num(bool b) { num(static_cast<std::int64_t>(b)); }

  void operator()(const PoseEstimate& p) {
    num(p.pose.x); num(p.pose.y); num(p.pose.theta()); num(p.score); num(p.fit); num(p.trusted);
  }
  void operator()(const GaussianEstimate& g) {
    num(g.mean.x); num(g.mean.y);
    num(g.cov(0, 0)); num(g.cov(0, 1)); num(g.cov(1, 1));
    num(g.timestamp); num(g.source); num(g.regularized);
  }
  void operator()(const BallBelief& b) {
    num(static_cast<int>(b.status));
    (*this)(b.estimate);
    (*this)(b.last_fresh);
  }
  void operator()(Role r) { num(static_cast<int>(r)); }
  void operator()(const RoleTable& t) {
    num(t.round);
    for (const auto& [id, r] : t.roles) { num(id); num(static_cast<int>(r)); }
  }
  void operator()(const Commitment& c) {
    num(c.id); num(c.kicker); num(c.receiver); num(static_cast<int>(c.state));
    num(c.deadline); num(c.reception.x); num(c.reception.y);
  }
  void operator()(const Bid& b) { num(b.round); num(b.sees_ball); num(b.fitness); }
  void operator()(const Heartbeat& h) { num(h.tick); }
  void operator()(const std::string& s) { bytes(s.data(), s.size()); }
};

}  // namespace

std::uint64_t Blackboard::digest() const {
  Hasher hs;
  for (const auto& [k, e] : entries_) {
    hs.num(static_cast<int>(k.first));
    hs.num(k.second);
    hs.num(e.timestamp);
    hs.num(e.origin);
    hs.num(static_cast<int>(e.value.index()));
    std::visit(hs, e.value);
  }
  return hs.h;
}

Channel::Channel(int robots, ChannelConfig cfg, std::uint64_t seed) : robots_(robots), cfg_(cfg), rng_(seed) {
  if (cfg_.latency < 0.0 || cfg_.jitter < 0.0 || cfg_.loss < 0.0 || cfg_.loss > 1.0)
    throw ConfigError("channel: latency/jitter must be >= 0 and loss in [0, 1]");
}

void Channel::enqueue(int from, int to, const Payload& payload, double now) {
  Message m;
  m.from = from;
  m.to = to;
  m.sent = now;
  m.seq = seq_++;
  m.payload = payload;
  const double extra = cfg_.jitter > 0.0 ? rng_.uniform(0.0, cfg_.jitter) : 0.0;
  m.arrival = now + cfg_.latency + extra;
  if (cfg_.loss > 0.0 && rng_.bernoulli(cfg_.loss)) {
    ++lost_;
    if (const auto* pm = std::get_if<PassMessage>(&payload)) lost_commitments_.push_back(pm->commitment.id);
    return;
  }
  pending_.push_back(std::move(m));
}

void Channel::send(int from, int to, Payload payload, double now) {
  if (to < 0 || to >= robots_ || to == from) return;
  enqueue(from, to, payload, now);
}

void Channel::broadcast(int from, Payload payload, double now) {
  for (int to = 0; to < robots_; ++to)
    if (to != from) enqueue(from, to, payload, now);
}

std::vector<Message> Channel::deliver(int to, double now) {
  std::vector<Message> out;
  auto keep = pending_.begin();
  for (auto it = pending_.begin(); it != pending_.end(); ++it) {
    if (it->to == to && it->arrival <= now + 1e-9) {
      out.push_back(std::move(*it));
    } else {
      if (keep != it) *keep = std::move(*it);
      ++keep;
    }
  }
  pending_.erase(keep, pending_.end());
  std::sort(out.begin(), out.end(), [](const Message& a, const Message& b) {
    return a.arrival != b.arrival ? a.arrival < b.arrival : a.seq < b.seq;
  });
  return out;
}

bool Channel::lost_for(std::uint64_t id) const {
  return std::find(lost_commitments_.begin(), lost_commitments_.end(), id) != lost_commitments_.end();
}

}  // namespace socsim
