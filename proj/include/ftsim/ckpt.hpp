// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Checkpoint engine.
//
// Redundancy analysis trims per-iteration protection down to the state that
// exists nowhere else: model weights are replicated across the data-parallel
// ring, and the shared (non-distributed) optimizer is too, so per-iteration
// backups carry only the optimizer shard when it is sharded, the whole
// optimizer when the ring is a single worker, and nothing at all when every
// kind is replicated.  Weights never count as unique payload: the fp32
// master copy inside the optimizer state subsumes them.
//
// Continuous protection then layers three mechanisms:
//   - per-iteration host snapshots streamed to the next worker on the
//     data-parallel ring (two versions retained at both ends),
//   - lazy persistence of the replicated kinds by ring rank 0, ordered only
//     when a failure actually happens,
//   - rare full checkpoints of everything to the persistent store, covering
//     the corner cases the ring cannot (adjacent-pair loss, d = 1).
//
// This module holds the pure machinery: the plan, the two-version buffers,
// and validated restore assembly.  Message movement and orchestration live
// with the harness.

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/storage.hpp"

namespace ftsim::ckpt {

struct UniquenessPlan {
  bool weights_redundant = false;
  bool optimizer_redundant = false;
  std::uint64_t unique_bytes_per_device = 0;  // per-iteration backup payload
};

UniquenessPlan razor(const ClusterSpec& spec);

inline std::uint64_t unique_state_bytes(const UniquenessPlan& p) {
  return p.unique_bytes_per_device;
}

// Kinds ring rank 0 persists on a backup order: exactly the replicated ones.
struct LazyKinds {
  bool weights = false;
  bool optimizer = false;
};
LazyKinds lazy_kinds(const UniquenessPlan& plan);

// Snapshot payload larger than the pre-sized host buffer.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Backup target outside the two retained versions.
struct VersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A restore source is missing or fails validation.
struct RestoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Which retained version serves a backup at `target`: 0 the current one,
// 1 the previous.  Throws VersionError outside the two-version window.
int version_for_target(std::uint64_t held_iteration, std::uint64_t target);

// True when a full checkpoint is due at this iteration boundary.
inline bool fallback_due(std::uint64_t iteration, std::uint64_t interval) {
  return interval != 0 && iteration % interval == 0;
}

// Host-side unique-state snapshots: the two most recent iterations, framed
// and ready to stream.  Capacity is fixed up front from the plan; a larger
// payload is a configuration error, never a resize.
class HostSnapshots {
 public:
  HostSnapshots(Role role, std::uint64_t capacity_bytes);

  // Frame unique state for an iteration, evicting the older retained one.
  void take(std::uint64_t iteration, const void* unique, std::size_t len);
  void take(std::uint64_t iteration, const std::vector<std::uint8_t>& unique);

  // Framed blob for a retained iteration; nullptr once evicted.
  const std::vector<std::uint8_t>* framed(std::uint64_t iteration) const;
  std::optional<std::uint64_t> newest() const;
  std::optional<std::uint64_t> previous() const;
  Role role() const { return role_; }
  std::uint64_t capacity() const { return capacity_; }

 private:
  Role role_;
  std::uint64_t capacity_;
  std::deque<std::pair<std::uint64_t, std::vector<std::uint8_t>>> kept_;
};

// Receiving side of the ring stream: one worker's host agent holds the two
// most recent snapshots of its ring predecessor.
class NeighborBuffer {
 public:
  explicit NeighborBuffer(Role origin) : origin_(origin) {}

  // Validates framing, checksum and origin before accepting.
  void store(std::vector<std::uint8_t> framed);

  const std::vector<std::uint8_t>* framed_at(std::uint64_t iteration) const;
  std::optional<std::uint64_t> newest() const;
  Role origin() const { return origin_; }
  void clear() { kept_.clear(); }

 private:
  Role origin_;
  std::deque<std::pair<std::uint64_t, std::vector<std::uint8_t>>> kept_;
};

// Framed inputs to a ring-based restore.  All pieces are header-framed so
// identity and integrity are checked against the requesting role and target.
struct RestorePieces {
  // Unique state (optimizer kind, header role == the failed role), from the
  // neighbor buffer or a lazy backup.  Ignored when the plan has no unique
  // bytes.
  const std::vector<std::uint8_t>* unique = nullptr;
  // Replicated weights from a live ring peer (same pp/tp, any dp).
  const std::vector<std::uint8_t>* weights = nullptr;
  // Replicated optimizer from a live ring peer, when the plan calls for it.
  const std::vector<std::uint8_t>* optimizer = nullptr;
};

// Reassembles the failed worker's state at `target`, validating every piece.
// Throws RestoreError on a missing or invalid piece; the caller escalates
// to the full checkpoint path.
StateBundle assemble_restore(const Role& who, std::uint64_t target,
                             const UniquenessPlan& plan,
                             const RestorePieces& pieces);

// Reads both kinds for `who` from the persistent store.
StateBundle restore_from_fallback(const store::Storage& storage,
                                  const Role& who, std::uint64_t iteration);

}  // namespace ftsim::ckpt
