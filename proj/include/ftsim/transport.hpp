// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Message transport shared by the simulated and the socket backend.
//
// Traffic classes: TRAIN (activations, gradients) preempts STATE (backup
// streams, restores) at chunk granularity; a STATE chunk already on the
// wire is never cut, so TRAIN waits at most one chunk transmission.  CTRL
// (small control messages, <= 64 KiB) rides a dedicated path and only pays
// propagation latency.
//
// The simulated backend schedules egress only: each node's NIC serializes
// outgoing chunks, round-robin across same-priority streams; ingress is not
// a modeled resource (every in-scope pattern is egress- or server-bound).
// Statistics and the one-chunk priority-inversion bound are exact in that
// model.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/runtime.hpp"

namespace ftsim::net {

enum class Priority : std::uint8_t { Train = 0, State = 1, Ctrl = 2 };
enum class Direction : std::uint8_t { Egress = 0, Ingress = 1 };

constexpr std::uint64_t kCtrlMessageLimit = 64 * 1024;

struct EndpointId {
  std::uint32_t node = 0;
  // 0 = node agent, 1 = controller, 2 = data server, >= 3 free for tests.
  std::uint8_t kind = 0;

  auto operator<=>(const EndpointId&) const = default;
  std::string str() const {
    return "n" + std::to_string(node) + "k" + std::to_string(kind);
  }
};

struct LinkModel {
  double bandwidth = 25e9;          // bytes/s at the node egress
  double latency_s = 25e-6;         // per-chunk propagation delay
  std::uint32_t chunk_bytes = 1 << 20;
};

struct Message {
  Priority priority = Priority::Train;
  EndpointId source;
  EndpointId dest;
  std::uint64_t tag = 0;
  std::optional<TID> tid;
  std::vector<std::uint8_t> payload;
};

struct LinkStats {
  rt::Nanos busy_ns = 0;  // egress transmission time (0 on ingress)
  rt::Nanos idle_ns = 0;  // filled at query time: elapsed - busy
  std::uint64_t bytes_train = 0;
  std::uint64_t bytes_state = 0;
  std::uint64_t bytes_ctrl = 0;
  std::uint64_t chunks = 0;

  std::uint64_t data_bytes() const { return bytes_train + bytes_state; }
};

struct InterruptInfo {
  std::uint64_t epoch = 0;
  std::uint64_t notice_id = 0;
  std::uint8_t reason = 0;
  std::vector<std::uint32_t> failed_nodes;
};

struct Interrupted : std::runtime_error {
  InterruptInfo info;
  explicit Interrupted(InterruptInfo i)
      : std::runtime_error("blocking operation interrupted"),
        info(std::move(i)) {}
};

struct ChannelClosed : std::runtime_error {
  ChannelClosed() : std::runtime_error("channel closed") {}
};

struct SetupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Completion handle of a send: resolved when the final chunk reaches the
// destination (or fails).  Copyable; at most one awaiter.
class SendHandle {
 public:
  SendHandle() = default;
  explicit SendHandle(rt::Promise<rt::Unit> p) : p_(std::move(p)) {}
  bool done() const { return p_.done(); }
  rt::Task<void> wait(rt::LifeToken& tok) const {
    co_await rt::guarded(tok, p_);
  }
  rt::Promise<rt::Unit> promise() const { return p_; }

 private:
  rt::Promise<rt::Unit> p_;
};

class Channel {
 public:
  virtual ~Channel() = default;
  // Enqueues the message and returns immediately; the handle resolves on
  // delivery.  Throws ProtocolError for CTRL payloads over the size cap and
  // ChannelClosed after close().
  virtual SendHandle send(Message m) = 0;
  // Blocks until a message with this tag arrives on this channel.  Raising
  // an interrupt on the owning endpoint aborts the wait with Interrupted.
  virtual rt::Task<Message> recv(std::uint64_t tag, rt::LifeToken& tok) = 0;
  virtual void close() = 0;
  virtual EndpointId local() const = 0;
  virtual EndpointId remote() const = 0;
  virtual bool closed() const = 0;
};

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual EndpointId id() const = 0;
  // Next channel opened towards this endpoint.
  virtual rt::Task<Channel*> accept(rt::LifeToken& tok) = 0;
  // Next message on any of this endpoint's channels, arrival order.  A
  // tag-parked recv on the target channel wins over recv_any.
  virtual rt::Task<std::pair<Channel*, Message>> recv_any(
      rt::LifeToken& tok) = 0;
  // Wakes every blocked recv/recv_any/accept on this endpoint with
  // Interrupted carrying `info`.  Queued messages are not discarded.
  virtual void interrupt(const InterruptInfo& info) = 0;
};

class Network {
 public:
  virtual ~Network() = default;
  virtual Endpoint& register_endpoint(EndpointId id) = 0;
  // Opens a duplex channel; returns the caller's end.  The remote end is
  // handed to the peer's accept queue.  Unknown endpoints raise SetupError.
  virtual Channel* open_channel(EndpointId from, EndpointId to,
                                const LinkModel& link) = 0;
  // True when no TRAIN transfer touches this node in the given direction.
  virtual bool link_idle(std::uint32_t node, Direction d) const = 0;
};

}  // namespace ftsim::net
