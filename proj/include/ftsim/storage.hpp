// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Snapshot framing and the persistent blob store.
//
// Every state blob that leaves a worker (neighbor backups, lazy backups,
// periodic full checkpoints) travels and lands as a 32-byte header plus raw
// payload.  The header is fixed little-endian; the version byte pins that
// layout so files are bit-exact across platforms.
//
//   offset  size  field
//        0     4  magic "SNP1"
//        4     1  format version
//        5     1  blob kind (0 weights, 1 optimizer)
//        6     2  role.dp       (LE)
//        8     2  role.pp
//       10     2  role.tp
//       12     8  iteration
//       20     4  payload length
//       24     8  FNV-1a 64 checksum of the payload
//
// On disk a store is a directory per job with one object per blob:
// `<job>/<iteration>/<role>.<kind>`.  Writes are atomic, temp file then
// rename, so a crash mid-write never damages an existing object.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/domain.hpp"

namespace ftsim::store {

enum class BlobKind : std::uint8_t { Weights = 0, Optimizer = 1 };

const char* kind_name(BlobKind k);  // "weights" / "optimizer"

constexpr std::uint32_t kMagic = 0x31504E53u;  // "SNP1" in file order
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::size_t kHeaderBytes = 32;

struct BlobInfo {
  Role role;
  std::uint64_t iteration = 0;
  BlobKind kind = BlobKind::Weights;
  std::uint32_t payload_len = 0;
  std::uint64_t checksum = 0;
};

// Raised when a snapshot fails structural or checksum validation.
struct CorruptSnapshot : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Header + payload, ready to send or persist.
std::vector<std::uint8_t> pack_blob(const Role& role, std::uint64_t iteration,
                                    BlobKind kind, const void* payload,
                                    std::size_t len);
std::vector<std::uint8_t> pack_blob(const Role& role, std::uint64_t iteration,
                                    BlobKind kind,
                                    const std::vector<std::uint8_t>& payload);

// Header fields only; validates magic/version/length bounds, not checksum.
BlobInfo parse_header(const void* data, std::size_t len);

struct UnpackedBlob {
  BlobInfo info;
  std::vector<std::uint8_t> payload;
};

// Full validation including the payload checksum.
UnpackedBlob unpack_blob(const std::vector<std::uint8_t>& framed);

// Persistent store interface.  Designed so a remote object store could sit
// behind it; the local-filesystem backend below is the one that ships.
class Storage {
 public:
  virtual ~Storage() = default;

  // Atomically persist one framed blob.
  virtual void put(const Role& role, std::uint64_t iteration, BlobKind kind,
                   const std::vector<std::uint8_t>& payload) = 0;

  // Payload if present and valid; nullopt when absent or unreadable.
  virtual std::optional<std::vector<std::uint8_t>> get(const Role& role,
                                                       std::uint64_t iteration,
                                                       BlobKind kind) const = 0;

  virtual bool has(const Role& role, std::uint64_t iteration,
                   BlobKind kind) const = 0;

  // Iterations with at least one object, ascending.
  virtual std::vector<std::uint64_t> iterations() const = 0;

  // Drop everything older than `iteration`.
  virtual void prune_before(std::uint64_t iteration) = 0;

  // True when every role in the spec has both kinds present and valid.
  bool has_complete(const ClusterSpec& spec, std::uint64_t iteration) const;

  // Newest iteration that passes has_complete.
  std::optional<std::uint64_t> latest_complete(const ClusterSpec& spec) const;
};

class FsStorage final : public Storage {
 public:
  FsStorage(std::filesystem::path root, std::string job);

  void put(const Role& role, std::uint64_t iteration, BlobKind kind,
           const std::vector<std::uint8_t>& payload) override;
  std::optional<std::vector<std::uint8_t>> get(const Role& role,
                                               std::uint64_t iteration,
                                               BlobKind kind) const override;
  bool has(const Role& role, std::uint64_t iteration,
           BlobKind kind) const override;
  std::vector<std::uint64_t> iterations() const override;
  void prune_before(std::uint64_t iteration) override;

  // Crash simulation: leave a truncated temp file and skip the rename, as a
  // process dying mid-write would.
  void put_torn(const Role& role, std::uint64_t iteration, BlobKind kind,
                const std::vector<std::uint8_t>& payload);

  std::filesystem::path file_of(const Role& role, std::uint64_t iteration,
                                BlobKind kind) const;
  const std::filesystem::path& job_dir() const { return job_dir_; }

 private:
  std::filesystem::path job_dir_;
};

}  // namespace ftsim::store
