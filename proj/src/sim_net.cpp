// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/sim_net.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ftsim::net {
namespace detail {

class SimChannelEnd;

struct Stream {
  std::shared_ptr<SimChannelState> chan;
  bool from_a = false;
  Message msg;
  std::uint64_t sent = 0;
  rt::Promise<rt::Unit> done;
  bool aborted = false;
  bool released = false;
  Priority pri = Priority::Train;
};

class SimChannelEnd final : public Channel {
 public:
  SimChannelEnd() = default;
  void init(SimNetwork* net, SimChannelState* st, bool is_a) {
    net_ = net;
    st_ = st;
    is_a_ = is_a;
  }
  SendHandle send(Message m) override;
  rt::Task<Message> recv(std::uint64_t tag, rt::LifeToken& tok) override;
  void close() override;
  EndpointId local() const override;
  EndpointId remote() const override;
  bool closed() const override;

 private:
  SimNetwork* net_ = nullptr;
  SimChannelState* st_ = nullptr;
  bool is_a_ = false;
};

struct SimChannelState {
  SimNetwork* net = nullptr;
  EndpointId a, b;
  LinkModel link;
  bool closed = false;
  SimChannelEnd end_a, end_b;
  // Head of each queue is the stream active at the NIC; later messages of
  // the same priority wait so per-channel delivery order is FIFO.
  std::deque<std::shared_ptr<Stream>> pend[2][2];  // [end a=0,b=1][pri]

  std::shared_ptr<SimChannelState> self;  // cleared on close
  EndpointId side(bool is_a) const { return is_a ? a : b; }
};

struct QueuedMsg {
  Channel* chan;
  Message msg;
};

struct TagWaiter {
  Channel* chan;
  std::uint64_t tag;
  rt::Promise<Message> p;
};

struct NodeNic {
  std::uint32_t node = 0;
  double bw = 0;
  bool alive = true;
  bool transmitting = false;
  std::deque<std::shared_ptr<Stream>> rr[2];  // round-robin, per priority
  LinkStats tx, rx;
  std::uint32_t train_out = 0;  // unfinished TRAIN transfers leaving
  std::uint32_t train_in = 0;   // unfinished TRAIN transfers arriving
  std::vector<rt::Promise<rt::Unit>> idle_waiters[2];  // [Direction]

  void wake_idle(Direction d) {
    auto ws = std::move(idle_waiters[static_cast<int>(d)]);
    idle_waiters[static_cast<int>(d)].clear();
    for (auto& p : ws) p.set_value(rt::Unit{});
  }
};

class SimEndpoint final : public Endpoint {
 public:
  SimEndpoint(SimNetwork* net, EndpointId id) : net_(net), id_(id) {}

  EndpointId id() const override { return id_; }

  rt::Task<Channel*> accept(rt::LifeToken& tok) override {
    tok.check();
    if (!accept_queue_.empty()) {
      Channel* c = accept_queue_.front();
      accept_queue_.pop_front();
      co_return c;
    }
    rt::Promise<Channel*> p;
    accept_waiters_.push_back(p);
    co_return co_await rt::guarded(tok, p);
  }

  rt::Task<std::pair<Channel*, Message>> recv_any(rt::LifeToken& tok) override {
    tok.check();
    if (!inbox_.empty()) {
      QueuedMsg q = std::move(inbox_.front());
      inbox_.pop_front();
      co_return std::pair<Channel*, Message>{q.chan, std::move(q.msg)};
    }
    rt::Promise<std::pair<Channel*, Message>> p;
    any_waiters_.push_back(p);
    co_return co_await rt::guarded(tok, p);
  }

  void interrupt(const InterruptInfo& info) override {
    auto e = std::make_exception_ptr(Interrupted{info});
    auto tags = std::move(tag_waiters_);
    tag_waiters_.clear();
    for (auto& w : tags) w.p.set_exception(e);
    auto anys = std::move(any_waiters_);
    any_waiters_.clear();
    for (auto& p : anys) p.set_exception(e);
    auto accs = std::move(accept_waiters_);
    accept_waiters_.clear();
    for (auto& p : accs) p.set_exception(e);
  }

  void on_message(Channel* via, Message m) {
    for (auto it = tag_waiters_.begin(); it != tag_waiters_.end();) {
      if (it->p.done()) {  // cancelled waiter, drop lazily
        it = tag_waiters_.erase(it);
        continue;
      }
      if (it->chan == via && it->tag == m.tag) {
        auto p = it->p;
        tag_waiters_.erase(it);
        p.set_value(std::move(m));
        return;
      }
      ++it;
    }
    while (!any_waiters_.empty()) {
      auto p = any_waiters_.front();
      any_waiters_.pop_front();
      if (p.done()) continue;
      p.set_value(std::pair<Channel*, Message>{via, std::move(m)});
      return;
    }
    inbox_.push_back(QueuedMsg{via, std::move(m)});
  }

  void on_accept(Channel* c) {
    while (!accept_waiters_.empty()) {
      auto p = accept_waiters_.front();
      accept_waiters_.pop_front();
      if (p.done()) continue;
      p.set_value(std::move(c));
      return;
    }
    accept_queue_.push_back(c);
  }

  bool take_queued(Channel* chan, std::uint64_t tag, Message& out) {
    for (auto it = inbox_.begin(); it != inbox_.end(); ++it) {
      if (it->chan == chan && it->msg.tag == tag) {
        out = std::move(it->msg);
        inbox_.erase(it);
        return true;
      }
    }
    return false;
  }

  void park_tag_waiter(Channel* chan, std::uint64_t tag,
                       rt::Promise<Message> p) {
    tag_waiters_.push_back(TagWaiter{chan, tag, std::move(p)});
  }

  void drop_channel(Channel* chan) {
    auto e = std::make_exception_ptr(ChannelClosed{});
    for (auto it = tag_waiters_.begin(); it != tag_waiters_.end();) {
      if (it->chan == chan) {
        it->p.set_exception(e);
        it = tag_waiters_.erase(it);
      } else {
        ++it;
      }
    }
    inbox_.erase(std::remove_if(inbox_.begin(), inbox_.end(),
                                [chan](const QueuedMsg& q) {
                                  return q.chan == chan;
                                }),
                 inbox_.end());
    accept_queue_.erase(
        std::remove(accept_queue_.begin(), accept_queue_.end(), chan),
        accept_queue_.end());
  }

 private:
  SimNetwork* net_;
  EndpointId id_;
  std::deque<QueuedMsg> inbox_;
  std::deque<TagWaiter> tag_waiters_;
  std::deque<rt::Promise<std::pair<Channel*, Message>>> any_waiters_;
  std::deque<Channel*> accept_queue_;
  std::deque<rt::Promise<Channel*>> accept_waiters_;
};

}  // namespace detail

using detail::NodeNic;
using detail::SimChannelEnd;
using detail::SimChannelState;
using detail::SimEndpoint;
using detail::Stream;

namespace {

rt::Nanos chunk_time(std::uint64_t bytes, double bw) {
  if (bytes == 0) return 0;
  return static_cast<rt::Nanos>(
      std::ceil(static_cast<double>(bytes) * 1e9 / bw));
}

rt::Nanos latency_ns(const LinkModel& l) { return rt::from_seconds(l.latency_s); }

int pidx(Priority p) { return p == Priority::Train ? 0 : 1; }

}  // namespace

SimNetwork::SimNetwork(rt::SimLoop& loop, LinkModel default_link)
    : loop_(loop), default_link_(default_link) {}

SimNetwork::~SimNetwork() = default;

void SimNetwork::add_node(std::uint32_t node) {
  add_node(node, default_link_.bandwidth);
}

void SimNetwork::add_node(std::uint32_t node, double nic_bw) {
  auto it = nodes_.find(node);
  if (it != nodes_.end()) return;
  auto n = std::make_unique<NodeNic>();
  n->node = node;
  n->bw = nic_bw;
  nodes_.emplace(node, std::move(n));
}

bool SimNetwork::has_node(std::uint32_t node) const {
  return nodes_.count(node) != 0;
}

NodeNic& SimNetwork::nic(std::uint32_t node) {
  auto it = nodes_.find(node);
  assert(it != nodes_.end());
  return *it->second;
}

const NodeNic* SimNetwork::find_nic(std::uint32_t node) const {
  auto it = nodes_.find(node);
  return it == nodes_.end() ? nullptr : it->second.get();
}

Endpoint& SimNetwork::register_endpoint(EndpointId id) {
  add_node(id.node);
  auto it = endpoints_.find(id);
  if (it != endpoints_.end()) return *it->second;
  auto ep = std::make_unique<SimEndpoint>(this, id);
  auto& ref = *ep;
  endpoints_.emplace(id, std::move(ep));
  return ref;
}

Channel* SimNetwork::open_channel(EndpointId from, EndpointId to,
                                  const LinkModel& link) {
  if (!endpoints_.count(from))
    throw SetupError("open_channel: unknown endpoint " + from.str());
  if (!endpoints_.count(to))
    throw SetupError("open_channel: unknown endpoint " + to.str());
  auto st = std::make_shared<SimChannelState>();
  st->net = this;
  st->a = from;
  st->b = to;
  st->link = link;
  st->end_a.init(this, st.get(), true);
  st->end_b.init(this, st.get(), false);
  st->self = st;
  channels_.push_back(st);
  endpoints_.at(to)->on_accept(&st->end_b);
  return &st->end_a;
}

std::pair<Channel*, Channel*> SimNetwork::open_pair(EndpointId a, EndpointId b,
                                                    const LinkModel& link) {
  if (!endpoints_.count(a))
    throw SetupError("open_pair: unknown endpoint " + a.str());
  if (!endpoints_.count(b))
    throw SetupError("open_pair: unknown endpoint " + b.str());
  auto st = std::make_shared<SimChannelState>();
  st->net = this;
  st->a = a;
  st->b = b;
  st->link = link;
  st->end_a.init(this, st.get(), true);
  st->end_b.init(this, st.get(), false);
  st->self = st;
  channels_.push_back(st);
  return {&st->end_a, &st->end_b};
}

void SimNetwork::release_stream(Stream& s, std::exception_ptr err) {
  if (s.released) return;
  s.released = true;
  if (s.pri == Priority::Train) {
    const auto src = s.chan->side(s.from_a);
    const auto dest = s.chan->side(!s.from_a);
    if (auto* txn = const_cast<NodeNic*>(find_nic(src.node));
        txn && txn->train_out > 0 && --txn->train_out == 0)
      txn->wake_idle(Direction::Egress);
    if (auto* rxn = const_cast<NodeNic*>(find_nic(dest.node));
        rxn && rxn->train_in > 0 && --rxn->train_in == 0)
      rxn->wake_idle(Direction::Ingress);
  }
  if (err)
    s.done.set_exception(err);
  else
    s.done.set_value(rt::Unit{});
}

SendHandle SimChannelEnd::send(Message m) {
  auto* st = st_;
  if (st->closed) throw ChannelClosed{};
  m.source = st->side(is_a_);
  m.dest = st->side(!is_a_);
  auto& net = *net_;
  auto& tx = net.nic(m.source.node);
  if (!tx.alive) throw rt::OperationKilled{};

  if (m.priority == Priority::Ctrl) {
    if (m.payload.size() > kCtrlMessageLimit)
      throw ProtocolError("CTRL message exceeds 64 KiB: " +
                          std::to_string(m.payload.size()) + " bytes");
    rt::Promise<rt::Unit> done;
    tx.tx.bytes_ctrl += m.payload.size();
    auto keep = st->self;
    const bool from_a = is_a_;
    net.loop().post_after(
        latency_ns(st->link),
        [&net, keep, from_a, done, msg = std::move(m)]() mutable {
          if (keep->closed) {
            done.set_exception(std::make_exception_ptr(ChannelClosed{}));
            return;
          }
          net.deliver(keep, from_a, std::move(msg));
          done.set_value(rt::Unit{});
        });
    return SendHandle(done);
  }

  auto s = std::make_shared<Stream>();
  s->chan = st->self;
  s->from_a = is_a_;
  s->pri = m.priority;
  s->msg = std::move(m);
  if (s->pri == Priority::Train) {
    ++tx.train_out;
    auto& rxn = net.nic(s->msg.dest.node);
    ++rxn.train_in;
  }
  auto& fifo = st->pend[is_a_ ? 0 : 1][pidx(s->pri)];
  fifo.push_back(s);
  if (fifo.size() == 1) {
    tx.rr[pidx(s->pri)].push_back(s);
    net.pump(tx);
  }
  return SendHandle(s->done);
}

void SimNetwork::deliver(std::shared_ptr<SimChannelState> st, bool from_a,
                         Message m) {
  if (st->closed) return;
  const EndpointId dest = st->side(!from_a);
  auto* rxn = const_cast<NodeNic*>(find_nic(dest.node));
  if (!rxn || !rxn->alive) return;  // fail-stop: dropped on arrival
  switch (m.priority) {
    case Priority::Train: rxn->rx.bytes_train += m.payload.size(); break;
    case Priority::State: rxn->rx.bytes_state += m.payload.size(); break;
    case Priority::Ctrl: rxn->rx.bytes_ctrl += m.payload.size(); break;
  }
  auto it = endpoints_.find(dest);
  if (it == endpoints_.end()) return;
  Channel* via = from_a ? static_cast<Channel*>(&st->end_b)
                        : static_cast<Channel*>(&st->end_a);
  static_cast<SimEndpoint*>(it->second.get())->on_message(via, std::move(m));
}

void SimNetwork::pump(NodeNic& n) {
  if (n.transmitting || !n.alive) return;
  std::shared_ptr<Stream> s;
  for (int pri = 0; pri < 2 && !s; ++pri) {
    auto& rr = n.rr[pri];
    while (!rr.empty()) {
      auto cand = rr.front();
      rr.pop_front();
      if (cand->aborted || cand->released) continue;
      s = cand;
      break;
    }
  }
  if (!s) return;

  const std::uint64_t remaining = s->msg.payload.size() - s->sent;
  const std::uint64_t bytes =
      std::min<std::uint64_t>(remaining, s->chan->link.chunk_bytes);
  const rt::Nanos ct = chunk_time(bytes, n.bw);
  n.transmitting = true;
  n.tx.busy_ns += ct;
  ++n.tx.chunks;
  loop_.post_after(ct, [this, &n, s, bytes] {
    n.transmitting = false;
    if (!n.alive) return;  // killed mid-chunk; rr was purged
    if (!s->aborted) {
      if (s->pri == Priority::Train)
        n.tx.bytes_train += bytes;
      else
        n.tx.bytes_state += bytes;
      s->sent += bytes;
      const bool last = s->sent >= s->msg.payload.size();
      auto st = s->chan;
      if (!last) {
        n.rr[pidx(s->pri)].push_back(s);
      } else {
        auto& fifo = st->pend[s->from_a ? 0 : 1][pidx(s->pri)];
        if (!fifo.empty() && fifo.front() == s) {
          fifo.pop_front();
          if (!fifo.empty()) n.rr[pidx(s->pri)].push_back(fifo.front());
        }
      }
      const bool from_a = s->from_a;
      if (last) {
        loop_.post_after(latency_ns(st->link), [this, s, from_a] {
          if (s->aborted) return;
          release_stream(*s, nullptr);
          deliver(s->chan, from_a, std::move(s->msg));
        });
      }
    }
    pump(n);
  });
}

rt::Task<Message> SimChannelEnd::recv(std::uint64_t tag, rt::LifeToken& tok) {
  tok.check();
  if (st_->closed) throw ChannelClosed{};
  auto& ep = static_cast<SimEndpoint&>(
      net_->register_endpoint(st_->side(is_a_)));
  Message out;
  if (ep.take_queued(this, tag, out)) co_return out;
  rt::Promise<Message> p;
  ep.park_tag_waiter(this, tag, p);
  co_return co_await rt::guarded(tok, p);
}

void SimChannelEnd::close() {
  auto* st = st_;
  if (st->closed) return;
  st->closed = true;
  auto closed_err = std::make_exception_ptr(ChannelClosed{});
  for (int end = 0; end < 2; ++end) {
    for (int pri = 0; pri < 2; ++pri) {
      for (auto& s : st->pend[end][pri]) {
        s->aborted = true;
        net_->release_stream(*s, closed_err);
      }
      st->pend[end][pri].clear();
    }
  }
  for (auto side : {st->a, st->b}) {
    auto it = net_->endpoints_.find(side);
    if (it == net_->endpoints_.end()) continue;
    auto* ep = static_cast<SimEndpoint*>(it->second.get());
    ep->drop_channel(&st->end_a);
    ep->drop_channel(&st->end_b);
  }
  st->self.reset();  // channel object stays alive in channels_
}

EndpointId SimChannelEnd::local() const { return st_->side(is_a_); }
EndpointId SimChannelEnd::remote() const { return st_->side(!is_a_); }
bool SimChannelEnd::closed() const { return st_->closed; }

bool SimNetwork::link_idle(std::uint32_t node, Direction d) const {
  const auto* n = find_nic(node);
  if (!n) return true;
  return d == Direction::Egress ? n->train_out == 0 : n->train_in == 0;
}

rt::Task<void> SimNetwork::wait_train_idle(std::uint32_t node, Direction d,
                                           rt::LifeToken& tok) {
  tok.check();
  if (link_idle(node, d)) co_return;
  auto& n = nic(node);
  rt::Promise<rt::Unit> p;
  n.idle_waiters[static_cast<int>(d)].push_back(p);
  co_await rt::guarded(tok, p);
}

void SimNetwork::kill_node(std::uint32_t node) {
  auto* n = const_cast<NodeNic*>(find_nic(node));
  if (!n || !n->alive) return;
  n->alive = false;
  auto killed = std::make_exception_ptr(rt::OperationKilled{});
  for (int pri = 0; pri < 2; ++pri) n->rr[pri].clear();
  for (auto& st : channels_) {
    if (!st || st->closed) continue;
    for (int end = 0; end < 2; ++end) {
      if (st->side(end == 0).node != node) continue;
      for (int pri = 0; pri < 2; ++pri) {
        for (auto& s : st->pend[end][pri]) {
          s->aborted = true;
          release_stream(*s, killed);
        }
        st->pend[end][pri].clear();
      }
    }
  }
}

bool SimNetwork::node_alive(std::uint32_t node) const {
  const auto* n = find_nic(node);
  return n && n->alive;
}

void SimNetwork::revive_node(std::uint32_t node) {
  auto it = nodes_.find(node);
  if (it == nodes_.end()) {
    add_node(node);
    return;
  }
  for (auto& st : channels_) {
    if (!st || st->closed) continue;
    if (st->a.node != node && st->b.node != node) continue;
    st->end_a.close();
  }
  for (auto eit = endpoints_.begin(); eit != endpoints_.end();) {
    if (eit->first.node == node)
      eit = endpoints_.erase(eit);
    else
      ++eit;
  }
  auto& n = *it->second;
  n.alive = true;
  n.transmitting = false;
  n.train_out = 0;
  n.train_in = 0;
  for (auto& q : n.rr) q.clear();
  for (auto& w : n.idle_waiters) w.clear();
  n.tx = {};
  n.rx = {};
}

LinkStats SimNetwork::stats(std::uint32_t node, Direction d) const {
  const auto* n = find_nic(node);
  if (!n) return {};
  LinkStats s = d == Direction::Egress ? n->tx : n->rx;
  if (d == Direction::Egress) s.idle_ns = loop_.now() - s.busy_ns;
  return s;
}

}  // namespace ftsim::net
