// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic synthetic training state.
//
// Real model math is out of scope; what the harness needs is state whose
// value at any iteration is a pure function of (seed, role, consumed data)
// so that a restored worker can be checked bit for bit against an
// independent replay.  State lives as 32-byte digests plus a size; blob
// bytes are expanded from the digest only where bytes actually move
// (backups, persistence, restores).
//
// The recurrence, per (pp, tp) group:
//   weights[0]   = H("W0", seed, pp, tp)
//   opt[0]       = H("O0", seed, pp, tp)                  shared optimizer
//   opt[0]       = H("O0", seed, dp, pp, tp)              distributed
//   grad lane j  = sum over the dp ring of
//                    mix(base(dp) + j*PHI) + mix(data_fold(dp, n) + j*PHI)
//   g[n]         = H(lanes as little-endian u64s)
//   weights[n+1] = H("W", weights[n], g[n])
//   opt[n+1]     = H("O", opt[n], g[n])
// where base(dp) = fold64(H("C", seed, dp, pp, tp, n)) and data_fold is the
// wrapped sum of item_fold over the indices the dp column consumed at n.
// Lane addition wraps mod 2^64, so the ring-allreduce result is identical
// to a plain sum in any order.

#include <cstdint>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/hash.hpp"

namespace ftsim::evo {

constexpr std::size_t kGradLanes = 8;

// Blob sizes.  Weights are modeled at 2 bytes per parameter; the Adam
// optimizer at 12, sharded across the ring when distributed.
std::uint64_t weights_bytes(const ClusterSpec& spec);
std::uint64_t optimizer_bytes(const ClusterSpec& spec);

Digest weights_init(std::uint64_t seed, const Role& r);
Digest optimizer_init(std::uint64_t seed, const Role& r, bool distributed);

Digest weights_next(const Digest& w, const Digest& grad);
Digest optimizer_next(const Digest& o, const Digest& grad);

// One worker's additive share of the group gradient.
std::vector<std::uint64_t> grad_contribution(std::uint64_t seed, const Role& r,
                                             std::uint64_t iteration,
                                             std::uint64_t data_fold);
Digest grad_digest(const std::vector<std::uint64_t>& lanes);

// Deterministic blob expansion (splitmix64 stream over the folded digest).
std::vector<std::uint8_t> expand(const Digest& d, std::uint64_t bytes);

// A full state blob is its digest followed by the expansion filling the
// remaining bytes.  A worker restoring from transferred or persisted bytes
// recovers the digest from the prefix; the tail keeps the blob bulk honest,
// and any byte of it is checkable against the prefix.
std::vector<std::uint8_t> materialize(const Digest& d, std::uint64_t bytes);
Digest digest_of_blob(const std::vector<std::uint8_t>& blob);
// Full consistency check: blob == materialize(prefix digest, size).
bool blob_is_sound(const std::vector<std::uint8_t>& blob);

// Synthetic training data: item `index` under `data_seed` is item_bytes of
// expanded H("D", data_seed, index).
Digest data_item_digest(std::uint64_t data_seed, std::uint64_t index);
std::vector<std::uint8_t> data_item(std::uint64_t data_seed,
                                    std::uint64_t index,
                                    std::uint32_t item_bytes);
// Wrapped-sum fold of one item's leading bytes; the per-column data_fold is
// the wrapped sum of this over its index range.
std::uint64_t item_fold(const std::vector<std::uint8_t>& item);

std::uint64_t mix64(std::uint64_t x);

}  // namespace ftsim::evo
