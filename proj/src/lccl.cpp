// SPDX-License-Identifier: MIT

#include "ftsim/lccl.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <string>
#include <type_traits>
#include <utility>

#include "ftsim/hash.hpp"

namespace ftsim::lccl {

namespace {

std::uint8_t worker_kind(std::uint16_t local_rank) {
  const unsigned k = 3u + local_rank;
  if (k >= kRingKind)
    throw net::SetupError("local rank too large for an endpoint kind");
  return static_cast<std::uint8_t>(k);
}

// Lane elements travel as little-endian 64-bit words; doubles keep their
// bit pattern.
std::uint64_t to_word(std::uint64_t v) { return v; }
std::uint64_t to_word(double v) { return std::bit_cast<std::uint64_t>(v); }
void from_word(std::uint64_t w, std::uint64_t& out) { out = w; }
void from_word(std::uint64_t w, double& out) {
  out = std::bit_cast<double>(w);
}

template <class T>
std::vector<std::uint8_t> pack_lane(const std::vector<T>& v, std::size_t lo,
                                    std::size_t hi) {
  std::vector<std::uint8_t> out;
  out.reserve((hi - lo) * 8);
  for (std::size_t i = lo; i < hi; ++i) {
    std::uint64_t w = to_word(v[i]);
    for (int b = 0; b < 8; ++b)
      out.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
  }
  return out;
}

template <class T>
std::vector<T> unpack_lane(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 8 != 0)
    throw net::ProtocolError("ring chunk is not word-aligned");
  std::vector<T> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t w = 0;
    for (int b = 0; b < 8; ++b)
      w |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    from_word(w, out[i]);
  }
  return out;
}

void accumulate(std::uint64_t& into, std::uint64_t v) { into += v; }
void accumulate(double& into, double v) { into += v; }

}  // namespace

// ---- communication plan ------------------------------------------------

std::vector<Role> CommPlan::peers() const {
  std::vector<Role> out;
  auto add = [&](const std::optional<Role>& r) {
    if (r && std::find(out.begin(), out.end(), *r) == out.end())
      out.push_back(*r);
  };
  add(dp_prev);
  add(dp_next);
  add(pp_prev);
  add(pp_next);
  return out;
}

bool CommPlan::is_peer(const Role& r) const {
  return (dp_prev && *dp_prev == r) || (dp_next && *dp_next == r) ||
         (pp_prev && *pp_prev == r) || (pp_next && *pp_next == r);
}

CommPlan comm_plan(const Role& role, const ClusterSpec& spec) {
  CommPlan p;
  if (spec.data_parallel > 1) {
    p.dp_prev = dp_predecessor(role, spec);
    p.dp_next = dp_neighbor(role, spec);
  }
  if (role.pp > 0) p.pp_prev = Role{role.dp, std::uint16_t(role.pp - 1), role.tp};
  if (role.pp + 1u < spec.pipeline_parallel)
    p.pp_next = Role{role.dp, std::uint16_t(role.pp + 1), role.tp};
  return p;
}

std::size_t cross_node_peer_count(const Role& role, const ClusterSpec& spec) {
  const auto self = node_of(role, spec);
  std::set<std::uint32_t> nodes;
  for (const auto& r : comm_plan(role, spec).peers()) {
    const auto n = node_of(r, spec);
    if (n != self) nodes.insert(n);
  }
  return nodes.size();
}

// ---- faked groups ------------------------------------------------------

FakeGroup make_group(const std::vector<Role>& members,
                     const ClusterSpec& spec) {
  if (members.empty()) throw net::SetupError("collective group is empty");
  FakeGroup g;
  g.members = members;
  std::set<Role> dedup;
  std::set<std::uint32_t> closed;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!dedup.insert(members[i]).second)
      throw net::SetupError("duplicate group member " + members[i].str());
    const auto n = node_of(members[i], spec);
    if (!g.segments.empty() && g.segments.back().node == n) {
      ++g.segments.back().count;
      continue;
    }
    if (!closed.insert(n).second)
      throw net::SetupError("group revisits node " + std::to_string(n) +
                            "; members must be node-contiguous");
    g.segments.push_back({n, static_cast<std::uint32_t>(i), 1});
  }
  HashIn h;
  h.str("group");
  for (const auto& r : members) h.u16(r.dp).u16(r.pp).u16(r.tp);
  g.key = fold64(h.digest());
  return g;
}

FakeGroup dp_group(const Role& role, const ClusterSpec& spec) {
  std::vector<Role> members;
  members.reserve(spec.data_parallel);
  for (std::uint32_t i = 0; i < spec.data_parallel; ++i)
    members.push_back(Role{static_cast<std::uint16_t>(i), role.pp, role.tp});
  return make_group(members, spec);
}

// ---- rendezvous --------------------------------------------------------

void RendezvousTable::open_epoch(std::uint64_t epoch) {
  if (opened_ && epoch <= epoch_)
    throw net::ProtocolError("rendezvous epoch must increase");
  opened_ = true;
  epoch_ = epoch;
  slots_.clear();
}

bool RendezvousTable::has(std::uint64_t epoch, const Role& role) const {
  return opened_ && epoch == epoch_ && slots_.count(role) != 0;
}

void RendezvousTable::write(std::uint64_t epoch, const Role& role,
                            const wire::PeerLocation& where) {
  if (!opened_ || epoch != epoch_)
    throw net::ProtocolError("rendezvous write against a stale epoch");
  if (!slots_.emplace(role, where).second)
    throw net::ProtocolError("duplicate rendezvous write for " + role.str());
}

std::optional<std::vector<wire::PeerLocation>> RendezvousTable::lookup(
    std::uint64_t epoch, const std::vector<Role>& want) const {
  if (!opened_ || epoch != epoch_)
    throw net::ProtocolError("rendezvous lookup against a stale epoch");
  std::vector<wire::PeerLocation> out;
  out.reserve(want.size());
  for (const auto& r : want) {
    auto it = slots_.find(r);
    if (it == slots_.end()) return std::nullopt;
    out.push_back(it->second);
  }
  return out;
}

rt::Task<std::vector<wire::PeerLocation>> TableRendezvous::exchange(
    std::uint64_t epoch, const wire::PeerLocation& self,
    const std::vector<Role>& want, rt::LifeToken& tok) {
  if (!table_.has(epoch, self.role)) table_.write(epoch, self.role, self);
  for (;;) {
    if (auto got = table_.lookup(epoch, want)) co_return std::move(*got);
    co_await rt::sleep_for(exec_, tok, poll_);
  }
}

// ---- per-node collective state -----------------------------------------

AgentShared::AgentShared(rt::Executor& exec, net::Network& net,
                         std::uint32_t node, const net::LinkModel& link)
    : exec_(exec), net_(net), node_(node), link_(link) {
  ring_ep_ = &net_.register_endpoint({node_, kRingKind});
}

void AgentShared::start(rt::LifeToken& tok) {
  // Deferred so the loop assigns the executor before the first suspension;
  // this makes start() safe to call before the loop runs.
  exec_.post([this, &tok] { rt::spawn(accept_loop(tok)); });
}

rt::Task<void> AgentShared::accept_loop(rt::LifeToken& tok) {
  for (;;) {
    net::Channel* ch = nullptr;
    try {
      ch = co_await ring_ep_->accept(tok);
    } catch (const net::Interrupted&) {
      continue;  // an epoch teardown does not end the agent
    }
    const auto peer = ch->remote().node;
    ring_[peer] = ch;
    auto w = pending_.find(peer);
    if (w != pending_.end()) {
      auto ps = std::move(w->second);
      pending_.erase(w);
      for (auto& p : ps) p.set_value(ch);
    }
  }
}

rt::Task<net::Channel*> AgentShared::ring_channel(std::uint32_t peer_node,
                                                  rt::LifeToken& tok) {
  if (auto it = ring_.find(peer_node); it != ring_.end())
    co_return it->second;
  if (peer_node == node_)
    throw net::SetupError("ring channel to the local node");
  if (node_ < peer_node) {
    auto* ch =
        net_.open_channel(ring_ep_->id(), {peer_node, kRingKind}, link_);
    ring_.emplace(peer_node, ch);
    co_return ch;
  }
  rt::Promise<net::Channel*> p;
  pending_[peer_node].push_back(p);
  co_return co_await rt::guarded(tok, p);
}

void AgentShared::forget_node(std::uint32_t node) {
  ring_.erase(node);
  auto it = pending_.find(node);
  if (it == pending_.end()) return;
  auto ps = std::move(it->second);
  pending_.erase(it);
  for (auto& p : ps)
    p.set_exception(
        std::make_exception_ptr(net::SetupError("ring peer node lost")));
}

void AgentShared::clear_boards() { boards_.clear(); }

// ---- per-worker communication context ----------------------------------

CommContext::CommContext(AgentShared& agent, const Role& role,
                         const ClusterSpec& spec, std::uint64_t epoch,
                         std::uint16_t local_rank)
    : agent_(agent),
      role_(role),
      spec_(spec),
      epoch_(epoch),
      local_rank_(local_rank),
      plan_(comm_plan(role, spec)) {
  if (node_of(role, spec) != agent.node())
    throw net::SetupError("role " + role.str() + " is not placed on node " +
                          std::to_string(agent.node()));
  self_ep_ = {agent.node(), worker_kind(local_rank)};
  ep_ = &agent.network().register_endpoint(self_ep_);
}

wire::PeerLocation CommContext::location() const {
  return {role_, agent_.node(), local_rank_};
}

void CommContext::check_usable() const {
  if (poisoned_) throw net::Interrupted{poison_info_};
  tok_.check();
}

rt::Task<void> CommContext::wait_ready() {
  check_usable();
  if (!gate_.is_open()) co_await gate_.wait(tok_);
  check_usable();
}

rt::Task<void> CommContext::establish(RendezvousClient& rdv) {
  try {
    const auto want = plan_.peers();
    const auto locs = co_await rdv.exchange(epoch_, location(), want, tok_);
    std::map<net::EndpointId, Role> expecting;  // peers that open towards us
    for (std::size_t i = 0; i < want.size(); ++i) {
      const net::EndpointId pe{locs[i].node, worker_kind(locs[i].local_rank)};
      if (self_ep_ < pe) {
        chans_[want[i]] =
            agent_.network().open_channel(self_ep_, pe, agent_.link());
      } else {
        expecting.emplace(pe, want[i]);
      }
    }
    while (!expecting.empty()) {
      auto* ch = co_await ep_->accept(tok_);
      auto it = expecting.find(ch->remote());
      if (it == expecting.end()) continue;  // stray open; not ours to use
      chans_[it->second] = ch;
      expecting.erase(it);
    }
    gate_.open();
  } catch (const net::Interrupted&) {
    // context torn down while connecting; the gate stays shut
  }
}

rt::Task<net::SendHandle> CommContext::p2p_send(
    const Role& peer, std::uint64_t tag, std::vector<std::uint8_t> payload,
    net::Priority pri) {
  check_usable();
  if (!plan_.is_peer(peer))
    throw PlanError("p2p send to " + peer.str() + ": not a comm-plan peer");
  co_await wait_ready();
  auto* ch = chans_.at(peer);
  net::Message m;
  m.priority = pri;
  m.source = self_ep_;
  m.dest = ch->remote();
  m.tag = tag;
  m.payload = std::move(payload);
  co_return ch->send(std::move(m));
}

rt::Task<net::Message> CommContext::p2p_recv(const Role& peer,
                                             std::uint64_t tag) {
  check_usable();
  if (!plan_.is_peer(peer))
    throw PlanError("p2p recv from " + peer.str() + ": not a comm-plan peer");
  co_await wait_ready();
  co_return co_await chans_.at(peer)->recv(tag, tok_);
}

void CommContext::interrupt_all(const net::InterruptInfo& info) {
  if (poisoned_) return;
  poisoned_ = true;
  poison_info_ = info;
  tok_.kill(std::make_exception_ptr(net::Interrupted{info}));
}

rt::Task<std::vector<std::uint64_t>> CommContext::allreduce(
    const FakeGroup& g, std::vector<std::uint64_t> data) {
  return allreduce_impl<std::uint64_t>(g, std::move(data), 'u');
}

rt::Task<std::vector<double>> CommContext::allreduce(const FakeGroup& g,
                                                     std::vector<double> data) {
  return allreduce_impl<double>(g, std::move(data), 'f');
}

template <class T>
rt::Task<std::vector<T>> CommContext::allreduce_impl(const FakeGroup& g,
                                                     std::vector<T> data,
                                                     char dtype) {
  auto board_lane = [](AgentShared::Board& b) -> std::vector<T>& {
    if constexpr (std::is_same_v<T, std::uint64_t>)
      return b.u;
    else
      return b.f;
  };
  check_usable();
  co_await wait_ready();

  // Locate this role inside the group and its node segment.
  std::size_t seg_idx = g.segments.size();
  std::size_t leader_member = 0;
  for (std::size_t s = 0; s < g.segments.size(); ++s) {
    const auto& seg = g.segments[s];
    for (std::uint32_t i = 0; i < seg.count; ++i) {
      if (g.members[seg.first + i] == role_) {
        seg_idx = s;
        leader_member = seg.first;
      }
    }
  }
  if (seg_idx == g.segments.size())
    throw PlanError("allreduce: " + role_.str() + " is not a group member");
  if (g.segments[seg_idx].node != agent_.node())
    throw net::SetupError("allreduce: group places " + role_.str() +
                          " on another node");

  const std::uint64_t seq = seq_[g.key]++;
  const AgentShared::BoardKey bk{g.key, epoch_, seq};
  auto& board = agent_.boards_[bk];
  auto& acc = board_lane(board);
  if (board.deposited == 0) {
    board.dtype = dtype;
    board.expected = g.segments[seg_idx].count;
    acc = std::move(data);
  } else {
    if (board.dtype != dtype)
      throw net::ProtocolError("allreduce: element type mismatch in group");
    if (acc.size() != data.size())
      throw net::ProtocolError("allreduce: payload length mismatch in group");
    for (std::size_t i = 0; i < acc.size(); ++i) accumulate(acc[i], data[i]);
  }
  ++board.deposited;
  const bool leader = g.members[leader_member] == role_;
  // Park before signalling: the leader must find every waiter registered
  // when it resumes.
  rt::Promise<rt::Unit> mine;
  if (!leader) board.waiters.push_back(mine);
  if (board.deposited == board.expected) board.full.set_value(rt::Unit{});

  if (leader) {
    co_await rt::guarded(tok_, board.full);
    // References into the board survive suspensions (map nodes are stable)
    // but a teardown can drop the board; re-find before every use.
    auto it = agent_.boards_.find(bk);
    if (it == agent_.boards_.end())
      throw net::ProtocolError("allreduce: collective state discarded");
    if (g.segments.size() > 1) {
      const std::uint64_t tag = fold64(
          HashIn().str("ring").u64(g.key).u64(epoch_).u64(seq).digest());
      auto work = board_lane(it->second);  // ring works on a copy
      co_await ring_reduce<T>(g, seg_idx, tag, work);
      it = agent_.boards_.find(bk);
      if (it == agent_.boards_.end())
        throw net::ProtocolError("allreduce: collective state discarded");
      board_lane(it->second) = std::move(work);
    }
    // set_value may resume a waiter inline and that waiter may erase the
    // board; detach the list first.
    auto ws = std::move(it->second.waiters);
    it->second.waiters.clear();
    for (auto& w : ws) w.set_value(rt::Unit{});
  } else {
    co_await rt::guarded(tok_, mine);
  }

  auto it = agent_.boards_.find(bk);
  if (it == agent_.boards_.end())
    throw net::ProtocolError("allreduce: collective state discarded");
  std::vector<T> out = board_lane(it->second);
  if (++it->second.consumed == it->second.expected) agent_.boards_.erase(it);
  co_return out;
}

// Inter-node phase: a 2(k-1)-step ring over the segment leaders' host
// agents.  Chunk c of an L-element lane is [cL/k, (c+1)L/k); short lanes
// leave some chunks empty, which travel as zero-byte messages.
template <class T>
rt::Task<void> CommContext::ring_reduce(const FakeGroup& g,
                                        std::size_t seg_idx, std::uint64_t tag,
                                        std::vector<T>& acc) {
  const std::size_t k = g.segments.size();
  const std::size_t s = seg_idx;
  const std::size_t L = acc.size();
  auto lo = [&](std::size_t c) { return c * L / k; };
  auto hi = [&](std::size_t c) { return (c + 1) * L / k; };
  auto idx = [&](std::size_t base, std::size_t t) {
    return (base + 2 * k - t) % k;
  };

  const auto next_node = g.segments[(s + 1) % k].node;
  const auto prev_node = g.segments[(s + k - 1) % k].node;
  net::Channel* to_next = co_await agent_.ring_channel(next_node, tok_);
  net::Channel* from_prev = co_await agent_.ring_channel(prev_node, tok_);

  auto send_chunk = [&](std::size_t c) {
    net::Message m;
    m.priority = net::Priority::Train;
    m.source = {agent_.node(), kRingKind};
    m.dest = {next_node, kRingKind};
    m.tag = tag;
    m.payload = pack_lane(acc, lo(c), hi(c));
    (void)to_next->send(std::move(m));  // per-(channel, tag) order holds
  };
  auto recv_chunk = [&](std::size_t c) -> rt::Task<std::vector<T>> {
    auto m = co_await from_prev->recv(tag, tok_);
    auto vals = unpack_lane<T>(m.payload);
    if (vals.size() != hi(c) - lo(c))
      throw net::ProtocolError("ring chunk length mismatch");
    co_return vals;
  };

  for (std::size_t t = 0; t + 1 < k; ++t) {  // reduce-scatter
    send_chunk(idx(s, t));
    const auto c = idx(s, t + 1);
    auto vals = co_await recv_chunk(c);
    for (std::size_t i = 0; i < vals.size(); ++i)
      accumulate(acc[lo(c) + i], vals[i]);
  }
  for (std::size_t t = 0; t + 1 < k; ++t) {  // allgather
    send_chunk(idx(s + 1, t));
    const auto c = idx(s, t);
    auto vals = co_await recv_chunk(c);
    std::copy(vals.begin(), vals.end(), acc.begin() + lo(c));
  }
}

}  // namespace ftsim::lccl
