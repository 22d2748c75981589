// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <map>
#include <memory>

#include "ftsim/transport.hpp"

namespace ftsim::net {

class SimNetwork;

namespace detail {
struct SimChannelState;
struct NodeNic;
struct Stream;
class SimEndpoint;
class SimChannelEnd;
}  // namespace detail

// Deterministic virtual-time network.  All endpoints share the owning
// SimLoop; nodes must be added before endpoints are registered on them.
class SimNetwork final : public Network {
 public:
  SimNetwork(rt::SimLoop& loop, LinkModel default_link);
  ~SimNetwork() override;

  void add_node(std::uint32_t node);
  void add_node(std::uint32_t node, double nic_bw);
  bool has_node(std::uint32_t node) const;

  Endpoint& register_endpoint(EndpointId id) override;
  Channel* open_channel(EndpointId from, EndpointId to,
                        const LinkModel& link) override;
  // Both ends at once, for wiring code that owns the two sides anyway.
  std::pair<Channel*, Channel*> open_pair(EndpointId a, EndpointId b,
                                          const LinkModel& link);

  bool link_idle(std::uint32_t node, Direction d) const override;
  // Resolves when the node's TRAIN occupancy in `d` drops to zero (or now,
  // if already idle).
  rt::Task<void> wait_train_idle(std::uint32_t node, Direction d,
                                 rt::LifeToken& tok);

  // Fail-stop: queued egress is dropped, future deliveries to the node
  // vanish on arrival, the node never transmits again.  Undetectable to
  // peers except through silence.
  void kill_node(std::uint32_t node);
  bool node_alive(std::uint32_t node) const;
  // Brings a node id back into service for a substitute pod: closes every
  // channel that still touches the id, discards its endpoints, and resets
  // the NIC, so the next incarnation starts with a clean slate while
  // survivors see ChannelClosed instead of silence on stale handles.
  void revive_node(std::uint32_t node);

  LinkStats stats(std::uint32_t node, Direction d) const;
  const LinkModel& default_link() const { return default_link_; }
  rt::SimLoop& loop() { return loop_; }

 private:
  friend struct detail::SimChannelState;
  friend class detail::SimEndpoint;
  friend class detail::SimChannelEnd;

  detail::NodeNic& nic(std::uint32_t node);
  const detail::NodeNic* find_nic(std::uint32_t node) const;
  void pump(detail::NodeNic& n);
  void deliver(std::shared_ptr<detail::SimChannelState> st, bool from_a,
               Message m);
  // Terminal accounting of one transfer; safe to call more than once.
  void release_stream(detail::Stream& s, std::exception_ptr err);

  rt::SimLoop& loop_;
  LinkModel default_link_;
  std::map<std::uint32_t, std::unique_ptr<detail::NodeNic>> nodes_;
  std::map<EndpointId, std::unique_ptr<detail::SimEndpoint>> endpoints_;
  std::vector<std::shared_ptr<detail::SimChannelState>> channels_;
};

}  // namespace ftsim::net
