#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "socsim/fusion.hpp"
#include "socsim/localizer.hpp"
#include "socsim/random.hpp"

namespace socsim {

enum class Role { Goalkeeper, Defender, Attacker, FullPlayer };

const char* to_string(Role r);
Role role_from_string(const std::string& s);  // throws ConfigError

enum class CommitmentState { Proposed, Active, Done, Dropped };

const char* to_string(CommitmentState s);

inline bool is_terminal(CommitmentState s) {
  return s == CommitmentState::Done || s == CommitmentState::Dropped;
}

/// One party's record of a kicker/receiver pass agreement.
struct Commitment {
  std::uint64_t id = 0;
  int kicker = -1;
  int receiver = -1;
  CommitmentState state = CommitmentState::Proposed;
  double deadline = 0.0;  // absolute, shared by both parties
  Vec2 reception;         // where the receiver expects the ball
};

struct Bid {
  int round = -1;
  bool sees_ball = false;
  double fitness = 0.0;
};

/// Roles decided by the captain for one assignment round.
struct RoleTable {
  int round = -1;
  std::map<int, Role> roles;
};

struct Heartbeat {
  int tick = 0;
};

using BbValue = std::variant<PoseEstimate, GaussianEstimate, BallBelief, Role, RoleTable, Commitment, Bid,
                             Heartbeat, std::string>;

enum class Key { Pose, TeamPoses, BallEstimate, TeamBall, Role, Roles, Commitments, GameEvents, Bids, Heartbeat };

const char* to_string(Key k);

enum class Locality { Local, TeamShared };

struct BbEntry {
  BbValue value;
  double timestamp = 0.0;
  int origin = -1;
};

/// Replicated write of a team-shared entry.
struct BbUpdate {
  Key key;
  int slot = 0;
  BbEntry entry;
};

/// Last writer wins: later timestamp, ties to the lower origin id; an origin may always
/// overwrite its own entry at the same or a later time.
bool supersedes(const BbEntry& incoming, const BbEntry& current);

/// Key registry with the default locality of every key.
std::map<Key, Locality> default_registry();

/// Per-robot store of typed, timestamped entries addressed by (key, slot).
class Blackboard {
 public:
  Blackboard(int owner, std::map<Key, Locality> registry = default_registry());

  /// Writes locally. Team-shared writes also return the update to broadcast.
  std::optional<BbUpdate> write(Key key, int slot, BbValue value, double now);

  /// Applies a peer's update; returns true when it replaced the stored entry.
  bool apply(const BbUpdate& update);

  const BbEntry* read(Key key, int slot = 0) const;

  template <class T>
  const T* get(Key key, int slot = 0) const {
    const BbEntry* e = read(key, slot);
    return e ? std::get_if<T>(&e->value) : nullptr;
  }

  /// All slots of a key, in slot order.
  std::vector<std::pair<int, const BbEntry*>> slots(Key key) const;

  Locality locality(Key key) const;  // throws ConfigError for unregistered keys
  int owner() const { return owner_; }

  /// FNV-1a digest of the canonical contents, for determinism checks.
  std::uint64_t digest() const;

 private:
  int owner_;
  std::map<Key, Locality> registry_;
  std::map<std::pair<Key, int>, BbEntry> entries_;
};

enum class PassMessageType { Propose, Accept, Reject, Drop, Done };

const char* to_string(PassMessageType t);

struct PassMessage {
  PassMessageType type = PassMessageType::Propose;
  Commitment commitment;
};

using Payload = std::variant<BbUpdate, PassMessage>;

struct Message {
  int from = -1;
  int to = -1;
  double sent = 0.0;
  double arrival = 0.0;
  std::uint64_t seq = 0;
  Payload payload;
};

struct ChannelConfig {
  double latency = 0.02;  // s
  double jitter = 0.0;    // s, uniform extra delay
  double loss = 0.0;      // per-recipient drop probability
};

/// Simulated team radio. Delivery is ordered by arrival time, then by send order.
class Channel {
 public:
  Channel(int robots, ChannelConfig cfg, std::uint64_t seed);

  void send(int from, int to, Payload payload, double now);
  void broadcast(int from, Payload payload, double now);

  /// Messages for `to` that have arrived by `now`, removed from the channel.
  std::vector<Message> deliver(int to, double now);

  /// Messages still travelling, for protocol audits.
  const std::vector<Message>& in_flight() const { return pending_; }
  /// Ids of commitments that have lost at least one message.
  bool lost_for(std::uint64_t commitment_id) const;
  std::uint64_t lost_count() const { return lost_; }
  std::uint64_t sent_count() const { return seq_; }

  int robots() const { return robots_; }
  const ChannelConfig& config() const { return cfg_; }

 private:
  void enqueue(int from, int to, const Payload& payload, double now);

  int robots_;
  ChannelConfig cfg_;
  Rng rng_;
  std::uint64_t seq_ = 0;
  std::uint64_t lost_ = 0;
  std::vector<Message> pending_;
  std::vector<std::uint64_t> lost_commitments_;
};

}  // namespace socsim
