// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ftsim {

// Logical position of a worker in the 3D parallel layout.  Data-parallel
// replicas of the same model shard share (pp, tp) and differ in dp.
struct Role {
  std::uint16_t dp = 0;
  std::uint16_t pp = 0;
  std::uint16_t tp = 0;

  auto operator<=>(const Role&) const = default;
  std::string str() const;  // "d0p1t2", used in storage paths and logs
};

// Physical slot a role is scheduled onto.
struct WorkerId {
  std::uint32_t node_id = 0;
  std::uint16_t local_rank = 0;

  auto operator<=>(const WorkerId&) const = default;
};

// Transfer / data identifier: names one worker-iteration.  Ordering is by
// (iteration, role) so ledgers and buffers drain oldest-first.
struct TID {
  Role role;
  std::uint64_t iteration = 0;

  friend bool operator==(const TID&, const TID&) = default;
  friend auto operator<=>(const TID& a, const TID& b) {
    if (auto c = a.iteration <=> b.iteration; c != 0) return c;
    return a.role <=> b.role;
  }
  std::string str() const;  // "d0p1t2@42"
};

// Static description of a job and the hardware it runs on.  Rates are in
// base SI units (bytes/s, FLOP/s); the two lifetimes are in hours, matching
// how operators quote them.
struct ClusterSpec {
  std::uint32_t num_nodes = 1;
  std::uint32_t gpus_per_node = 8;

  // Parallelism degrees; data_parallel * pipeline_parallel * tensor_parallel
  // must equal num_nodes * gpus_per_node.
  std::uint32_t data_parallel = 1;
  std::uint32_t pipeline_parallel = 1;
  std::uint32_t tensor_parallel = 1;

  double gpu_mtbf_hours = 80000.0;   // mean time between failures of one GPU
  double nic_bw = 25e9;              // per-node NIC bandwidth, bytes/s
  double disk_bw = 2.5e9;            // persistent storage bandwidth, bytes/s
  double compute_flops = 82.6e12;    // achievable per-GPU compute, FLOP/s

  std::uint32_t seq_len = 2048;      // tokens per sample
  std::uint32_t batch_size = 256;    // samples per device per iteration
  std::uint64_t params_per_device = 1'000'000'000;  // model shard size

  double ckpt_interval_hours = 0.5;  // interval-based checkpoint period
  std::uint32_t preload_depth = 10;  // iterations of data kept ahead
  bool distributed_optimizer = false;

  std::uint32_t world_size() const { return num_nodes * gpus_per_node; }
};

// Layout: tensor rank varies fastest, then pipeline stage, then data-parallel
// replica.  Nodes are filled in global-index order.
Role role_of(std::uint32_t global_index, const ClusterSpec& spec);
std::uint32_t index_of(const Role& role, const ClusterSpec& spec);
WorkerId placement_of(const Role& role, const ClusterSpec& spec);
std::uint32_t node_of(const Role& role, const ClusterSpec& spec);

// Successor on the data-parallel ring (same pp/tp, dp+1 mod d).
Role dp_neighbor(const Role& role, const ClusterSpec& spec);
// Predecessor on the data-parallel ring.
Role dp_predecessor(const Role& role, const ClusterSpec& spec);

// Identifier of the (pp, tp) slice a role's DP ring lives in.
inline std::uint32_t dp_group_of(const Role& r, const ClusterSpec& spec) {
  return static_cast<std::uint32_t>(r.pp) * spec.tensor_parallel + r.tp;
}

// Structural validation.  Violations are returned as data, one human-readable
// string each; an empty vector means the spec is usable.
std::vector<std::string> validate_spec(const ClusterSpec& spec);

// Per-worker training state at some iteration.  `iteration` counts completed
// optimizer updates, i.e. the index of the next iteration to execute.
// Two optimizer versions are retained so a one-step rollback never needs
// storage.
struct VersionedBlob {
  std::uint64_t iteration = 0;
  std::vector<std::uint8_t> blob;
};

struct StateBundle {
  std::vector<std::uint8_t> weights;
  VersionedBlob optimizer_current;
  VersionedBlob optimizer_previous;
  std::uint64_t iteration = 0;
};

}  // namespace ftsim

template <>
struct std::hash<ftsim::Role> {
  std::size_t operator()(const ftsim::Role& r) const noexcept {
    return (std::size_t{r.dp} << 32) ^ (std::size_t{r.pp} << 16) ^ r.tp;
  }
};
