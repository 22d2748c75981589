// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/ckpt.hpp"

#include <string>

#include "ftsim/evolution.hpp"

namespace ftsim::ckpt {

using store::BlobKind;

UniquenessPlan razor(const ClusterSpec& spec) {
  UniquenessPlan p;
  p.weights_redundant = spec.data_parallel > 1;
  p.optimizer_redundant =
      spec.data_parallel > 1 && !spec.distributed_optimizer;
  p.unique_bytes_per_device =
      p.optimizer_redundant ? 0 : evo::optimizer_bytes(spec);
  return p;
}

LazyKinds lazy_kinds(const UniquenessPlan& plan) {
  return LazyKinds{plan.weights_redundant, plan.optimizer_redundant};
}

int version_for_target(std::uint64_t held_iteration, std::uint64_t target) {
  if (held_iteration == target) return 0;
  if (held_iteration == target + 1) return 1;
  throw VersionError("backup target " + std::to_string(target) +
                     " outside the retained window ending at " +
                     std::to_string(held_iteration));
}

HostSnapshots::HostSnapshots(Role role, std::uint64_t capacity_bytes)
    : role_(role), capacity_(capacity_bytes) {}

void HostSnapshots::take(std::uint64_t iteration, const void* unique,
                         std::size_t len) {
  if (len > capacity_)
    throw ConfigError("snapshot payload " + std::to_string(len) +
                      " exceeds the host buffer of " +
                      std::to_string(capacity_) + " bytes");
  auto framed =
      store::pack_blob(role_, iteration, BlobKind::Optimizer, unique, len);
  for (auto& [it, blob] : kept_)
    if (it == iteration) {
      blob = std::move(framed);
      return;
    }
  kept_.emplace_back(iteration, std::move(framed));
  while (kept_.size() > 2) kept_.pop_front();
}

void HostSnapshots::take(std::uint64_t iteration,
                         const std::vector<std::uint8_t>& unique) {
  take(iteration, unique.data(), unique.size());
}

const std::vector<std::uint8_t>* HostSnapshots::framed(
    std::uint64_t iteration) const {
  for (const auto& [it, blob] : kept_)
    if (it == iteration) return &blob;
  return nullptr;
}

std::optional<std::uint64_t> HostSnapshots::newest() const {
  if (kept_.empty()) return std::nullopt;
  return kept_.back().first;
}

std::optional<std::uint64_t> HostSnapshots::previous() const {
  if (kept_.size() < 2) return std::nullopt;
  return kept_[kept_.size() - 2].first;
}

void NeighborBuffer::store(std::vector<std::uint8_t> framed) {
  const auto u = store::unpack_blob(framed);  // throws CorruptSnapshot
  if (u.info.role != origin_)
    throw store::CorruptSnapshot("snapshot from " + u.info.role.str() +
                                 " offered to the buffer for " +
                                 origin_.str());
  if (u.info.kind != BlobKind::Optimizer)
    throw store::CorruptSnapshot("ring stream carries optimizer state only");
  // Replace in place if this iteration is already held.
  for (auto& [it, blob] : kept_)
    if (it == u.info.iteration) {
      blob = std::move(framed);
      return;
    }
  kept_.emplace_back(u.info.iteration, std::move(framed));
  while (kept_.size() > 2) kept_.pop_front();
}

const std::vector<std::uint8_t>* NeighborBuffer::framed_at(
    std::uint64_t iteration) const {
  for (const auto& [it, blob] : kept_)
    if (it == iteration) return &blob;
  return nullptr;
}

std::optional<std::uint64_t> NeighborBuffer::newest() const {
  if (kept_.empty()) return std::nullopt;
  return kept_.back().first;
}

namespace {

// Unpack one framed piece and check identity.  `match_dp` distinguishes the
// failed worker's own state from a replica peer's copy.
store::UnpackedBlob checked(const std::vector<std::uint8_t>* piece,
                            const char* what, const Role& who,
                            std::uint64_t target, BlobKind kind,
                            bool match_dp) {
  if (!piece) throw RestoreError(std::string(what) + " source missing");
  store::UnpackedBlob u;
  try {
    u = store::unpack_blob(*piece);
  } catch (const store::CorruptSnapshot& e) {
    throw RestoreError(std::string(what) + " source invalid: " + e.what());
  }
  if (u.info.kind != kind)
    throw RestoreError(std::string(what) + " source has the wrong kind");
  if (u.info.iteration != target)
    throw RestoreError(std::string(what) + " source is at iteration " +
                       std::to_string(u.info.iteration) + ", want " +
                       std::to_string(target));
  const bool role_ok = match_dp
                           ? u.info.role == who
                           : (u.info.role.pp == who.pp &&
                              u.info.role.tp == who.tp);
  if (!role_ok)
    throw RestoreError(std::string(what) + " source is for " +
                       u.info.role.str() + ", want " + who.str());
  return u;
}

}  // namespace

StateBundle assemble_restore(const Role& who, std::uint64_t target,
                             const UniquenessPlan& plan,
                             const RestorePieces& pieces) {
  if (!plan.weights_redundant)
    throw RestoreError(
        "no replica holds this state; only the full checkpoint path applies");

  StateBundle out;
  out.iteration = target;

  auto w = checked(pieces.weights, "weights", who, target, BlobKind::Weights,
                   /*match_dp=*/false);
  out.weights = std::move(w.payload);

  if (plan.optimizer_redundant) {
    auto o = checked(pieces.optimizer, "optimizer", who, target,
                     BlobKind::Optimizer, /*match_dp=*/false);
    out.optimizer_current = {target, std::move(o.payload)};
  } else {
    auto o = checked(pieces.unique, "unique-state", who, target,
                     BlobKind::Optimizer, /*match_dp=*/true);
    out.optimizer_current = {target, std::move(o.payload)};
  }
  // The previous version is gone with the worker; it repopulates on the
  // first update after resume.
  out.optimizer_previous = {target, {}};
  return out;
}

StateBundle restore_from_fallback(const store::Storage& storage,
                                  const Role& who, std::uint64_t iteration) {
  auto w = storage.get(who, iteration, BlobKind::Weights);
  auto o = storage.get(who, iteration, BlobKind::Optimizer);
  if (!w || !o)
    throw RestoreError("full checkpoint for " + who.str() + " at " +
                       std::to_string(iteration) + " is missing or invalid");
  StateBundle out;
  out.iteration = iteration;
  out.weights = std::move(*w);
  out.optimizer_current = {iteration, std::move(*o)};
  out.optimizer_previous = {iteration, {}};
  return out;
}

}  // namespace ftsim::ckpt
