// SPDX-License-Identifier: MIT
// Lightweight collectives: comm plans, faked groups, rendezvous, allreduce.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/runtime.hpp"
#include "ftsim/transport.hpp"
#include "ftsim/wire.hpp"

namespace ftsim::lccl {

// Endpoint kind reserved for the per-node collective plane.  Ring traffic
// between node agents lives on its own endpoint so that tag-addressed
// receives never compete with a control-plane recv_any loop: an endpoint
// is used either with tagged receives or with recv_any, never both.
inline constexpr std::uint8_t kRingKind = 255;

// Error for operations outside a context's fixed peer set.
struct PlanError : net::ProtocolError {
  using net::ProtocolError::ProtocolError;
};

// ---- communication plan ------------------------------------------------
//
// Each role talks to at most four fixed peers: its neighbours on the
// data-parallel ring and the adjacent pipeline stages.  Everything the
// training loop needs (gradient reduction, activation exchange, state
// backup) is expressible over these links, which keeps connection state
// per worker constant no matter how large the job is.

struct CommPlan {
  std::optional<Role> dp_prev;
  std::optional<Role> dp_next;
  std::optional<Role> pp_prev;
  std::optional<Role> pp_next;

  // Distinct peers in the order above (a two-replica ring has one
  // data-parallel neighbour, not two).
  std::vector<Role> peers() const;
  bool is_peer(const Role& r) const;
};

CommPlan comm_plan(const Role& role, const ClusterSpec& spec);

// Number of distinct remote *nodes* among a role's peers.  Never exceeds
// four by construction; tests assert it stays that way.
std::size_t cross_node_peer_count(const Role& role, const ClusterSpec& spec);

// ---- faked groups ------------------------------------------------------
//
// A collective group is described by its ordered member list alone; no
// group-wide channel setup ever happens.  The member list is partitioned
// into contiguous per-node segments.  Reduction inside a segment is a
// memory operation on the host agent, and only segment leaders take part
// in the inter-node ring.

struct GroupSegment {
  std::uint32_t node = 0;
  std::uint32_t first = 0;  // index into members
  std::uint32_t count = 0;
};

struct FakeGroup {
  std::vector<Role> members;           // collective order
  std::vector<GroupSegment> segments;  // contiguous runs of one node
  std::uint64_t key = 0;               // stable identity, from the members
};

// Throws net::SetupError if members are empty or revisit a node after
// leaving it (segments must be genuine runs for the ring to be a ring).
FakeGroup make_group(const std::vector<Role>& members,
                     const ClusterSpec& spec);

// The data-parallel lane of `role`: replicas 0..d-1 of its (pp, tp) slice.
FakeGroup dp_group(const Role& role, const ClusterSpec& spec);

// ---- rendezvous --------------------------------------------------------
//
// Address resolution is a table of slots versioned by epoch.  Every role
// writes its own slot exactly once per epoch and polls only the slots of
// its plan peers, so a worker whose peers are ready proceeds even while
// unrelated ranks are still absent.  A failover opens a fresh epoch and
// the table forgets the previous one wholesale.

class RendezvousTable {
 public:
  // Epochs must strictly increase; opening clears all slots.
  void open_epoch(std::uint64_t epoch);
  bool opened() const { return opened_; }
  std::uint64_t epoch() const { return epoch_; }

  bool has(std::uint64_t epoch, const Role& role) const;
  // Second write for the same (epoch, role) is a protocol error, as is a
  // write against any epoch other than the open one.
  void write(std::uint64_t epoch, const Role& role,
             const wire::PeerLocation& where);
  // All-or-nothing: locations in `want` order once every one is present.
  std::optional<std::vector<wire::PeerLocation>> lookup(
      std::uint64_t epoch, const std::vector<Role>& want) const;

  std::size_t size() const { return slots_.size(); }

 private:
  bool opened_ = false;
  std::uint64_t epoch_ = 0;
  std::map<Role, wire::PeerLocation> slots_;
};

// How a context reaches the table.  The in-process implementation below
// suits unit tests; the cluster harness routes the same exchange through
// control messages to the controller.
class RendezvousClient {
 public:
  virtual ~RendezvousClient() = default;
  // Writes `self` (first call only) and blocks until every role in `want`
  // has a slot.  Returned locations follow `want` order.
  virtual rt::Task<std::vector<wire::PeerLocation>> exchange(
      std::uint64_t epoch, const wire::PeerLocation& self,
      const std::vector<Role>& want, rt::LifeToken& tok) = 0;
};

class TableRendezvous : public RendezvousClient {
 public:
  TableRendezvous(rt::Executor& exec, RendezvousTable& table,
                  rt::Nanos poll = rt::kSecond / 10)
      : exec_(exec), table_(table), poll_(poll) {}

  rt::Task<std::vector<wire::PeerLocation>> exchange(
      std::uint64_t epoch, const wire::PeerLocation& self,
      const std::vector<Role>& want, rt::LifeToken& tok) override;

 private:
  rt::Executor& exec_;
  RendezvousTable& table_;
  rt::Nanos poll_;
};

// ---- per-node collective state -----------------------------------------
//
// One instance per node, shared by every worker context on it.  Owns the
// ring endpoint, the lazily opened agent-to-agent ring channels (the lower
// node id opens; the higher side learns the channel from its accept loop)
// and the deposit boards where same-node members meet for a collective.

class CommContext;

class AgentShared {
 public:
  AgentShared(rt::Executor& exec, net::Network& net, std::uint32_t node,
              const net::LinkModel& link);

  // Spawns the ring accept loop on `tok` (the node's lifetime).
  void start(rt::LifeToken& tok);

  rt::Executor& exec() { return exec_; }
  net::Network& network() { return net_; }
  std::uint32_t node() const { return node_; }
  const net::LinkModel& link() const { return link_; }

  // Duplex ring channel to a peer node, opening or awaiting it as the id
  // order dictates.  Cached; both directions of a pair share one channel.
  rt::Task<net::Channel*> ring_channel(std::uint32_t peer_node,
                                       rt::LifeToken& tok);

  // Recovery hooks: drop cached state that refers to a lost node or a torn
  // epoch.  Waiters for a forgotten node are failed with SetupError.
  void forget_node(std::uint32_t node);
  void clear_boards();

 private:
  friend class CommContext;

  struct BoardKey {
    std::uint64_t group = 0;
    std::uint64_t epoch = 0;
    std::uint64_t seq = 0;
    auto operator<=>(const BoardKey&) const = default;
  };
  // Meeting point of the same-node members of one collective call.
  struct Board {
    char dtype = 0;  // 'u' or 'f'
    std::size_t expected = 0;
    std::size_t deposited = 0;
    std::size_t consumed = 0;
    std::vector<std::uint64_t> u;
    std::vector<double> f;
    rt::Promise<rt::Unit> full;  // resolved by the last depositor
    std::vector<rt::Promise<rt::Unit>> waiters;  // one per parked member
  };

  rt::Task<void> accept_loop(rt::LifeToken& tok);

  rt::Executor& exec_;
  net::Network& net_;
  std::uint32_t node_;
  net::LinkModel link_;
  net::Endpoint* ring_ep_ = nullptr;
  std::map<std::uint32_t, net::Channel*> ring_;
  std::map<std::uint32_t, std::vector<rt::Promise<net::Channel*>>> pending_;
  std::map<BoardKey, Board> boards_;
};

// ---- per-worker communication context ----------------------------------
//
// Initialisation is two-staged.  Construction is cheap and synchronous:
// it pins the role, epoch and endpoint so state loading can start at once.
// `establish` performs the blocking part (rendezvous plus peer channels)
// and is meant to be spawned in the background; collectives gate on its
// completion rather than on construction.

class CommContext {
 public:
  CommContext(AgentShared& agent, const Role& role, const ClusterSpec& spec,
              std::uint64_t epoch, std::uint16_t local_rank);

  const Role& role() const { return role_; }
  std::uint64_t epoch() const { return epoch_; }
  const CommPlan& plan() const { return plan_; }
  rt::LifeToken& token() { return tok_; }
  net::EndpointId endpoint_id() const { return self_ep_; }
  wire::PeerLocation location() const;

  // Stage two: resolve peers, open or accept the per-peer channels, then
  // open the ready gate.  Runs until done or interrupted.
  rt::Task<void> establish(RendezvousClient& rdv);
  bool ready() const { return gate_.is_open(); }
  rt::Task<void> wait_ready();

  // Allreduce over a faked group this role belongs to.  Integer lanes are
  // exact (wrapping sums); floating lanes are reduced in deterministic
  // deposit and ring order.  Blocks until stage two has finished.
  rt::Task<std::vector<std::uint64_t>> allreduce(
      const FakeGroup& g, std::vector<std::uint64_t> data);
  rt::Task<std::vector<double>> allreduce(const FakeGroup& g,
                                          std::vector<double> data);

  // Point-to-point with a plan peer.  Non-peers raise PlanError.  The
  // returned handle resolves when the last chunk lands.
  rt::Task<net::SendHandle> p2p_send(const Role& peer, std::uint64_t tag,
                                     std::vector<std::uint8_t> payload,
                                     net::Priority pri = net::Priority::Train);
  rt::Task<net::Message> p2p_recv(const Role& peer, std::uint64_t tag);

  // Wakes every operation blocked on this context with net::Interrupted
  // carrying `info` and poisons the context; all later calls fail the same
  // way until a fresh context replaces this one.
  void interrupt_all(const net::InterruptInfo& info);
  bool poisoned() const { return poisoned_; }

 private:
  void check_usable() const;
  rt::Task<net::Channel*> peer_channel(const Role& peer);

  template <class T>
  rt::Task<std::vector<T>> allreduce_impl(const FakeGroup& g,
                                          std::vector<T> data, char dtype);
  template <class T>
  rt::Task<void> ring_reduce(const FakeGroup& g, std::size_t seg_idx,
                             std::uint64_t tag, std::vector<T>& acc);

  AgentShared& agent_;
  Role role_;
  ClusterSpec spec_;
  std::uint64_t epoch_;
  std::uint16_t local_rank_;
  net::EndpointId self_ep_;
  net::Endpoint* ep_ = nullptr;
  CommPlan plan_;
  rt::LifeToken tok_;
  rt::Gate gate_;
  bool poisoned_ = false;
  net::InterruptInfo poison_info_;
  std::map<Role, net::Channel*> chans_;
  std::map<std::uint64_t, std::uint64_t> seq_;  // per group key
};

}  // namespace ftsim::lccl
