// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Preloading data loader, pure parts.
//
// The controller publishes one four-number index formula per training epoch
// (see wire::IndexAssign); every worker derives its own per-iteration index
// window from it, so index distribution costs one broadcast, not a message
// per iteration.  Worker `column` (its global role index) at iteration n owns
//
//   [ base + (n - start) * columns * per_column + column * per_column,
//     + per_column )
//
// and windows never overlap across workers or iterations.  A worker's data
// for one iteration is per_column samples of 4 * seq_len bytes each,
// fetched in one piece and buffered until the iteration consumes it.
//
// The fetch loop itself lives with the harness (it needs the network); this
// module holds the geometry, the byte-capped buffer, and the data server.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/wire.hpp"

namespace ftsim::data {

// One worker-iteration's slice of the global sample index space.
struct IndexWindow {
  std::uint64_t first = 0;
  std::uint32_t count = 0;

  bool operator==(const IndexWindow&) const = default;
};

IndexWindow window_of(const wire::IndexAssign& a, std::uint32_t column,
                      std::uint64_t iteration);

// Bytes of one sample and of one worker-iteration blob (4 bytes per token).
std::uint32_t sample_bytes(const ClusterSpec& spec);
std::uint64_t iteration_data_bytes(const ClusterSpec& spec);

// Byte-capacity-capped TID-ordered buffer.  Consumption evicts.
class PreloadBuffer {
 public:
  explicit PreloadBuffer(std::uint64_t capacity) : capacity_(capacity) {}

  bool fits(std::uint64_t more_bytes) const {
    return bytes_ + more_bytes <= capacity_;
  }
  // Throws std::logic_error on duplicate TID or capacity overflow; callers
  // gate on fits() first.
  void insert(const TID& tid, std::vector<std::uint8_t> blob);
  std::optional<std::vector<std::uint8_t>> take(const TID& tid);
  bool has(const TID& tid) const { return entries_.count(tid) != 0; }
  std::optional<TID> oldest() const;

  std::uint64_t bytes() const { return bytes_; }
  std::uint64_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::uint64_t capacity_;
  std::uint64_t bytes_ = 0;
  std::map<TID, std::vector<std::uint8_t>> entries_;
};

// Serves sample blobs by global index.  Synthetic mode derives every sample
// from (seed, index); file-backed mode reads fixed-length records from a
// flat file with a 16-byte header (magic, version, record length).
class DataServerStub {
 public:
  explicit DataServerStub(std::uint64_t seed);
  explicit DataServerStub(const std::filesystem::path& record_file);

  bool synthetic() const { return file_.empty(); }
  std::uint64_t seed() const { return seed_; }

  // One sample.  Synthetic mode honours any size; file-backed mode requires
  // `bytes` == the file's record length and `index` < record count.
  std::vector<std::uint8_t> sample(std::uint64_t index,
                                   std::uint32_t bytes) const;
  // A window's samples concatenated, the unit the preloader fetches.
  std::vector<std::uint8_t> fetch(const IndexWindow& w,
                                  std::uint32_t bytes_per_sample) const;

  std::uint64_t record_len() const { return record_len_; }
  std::uint64_t record_count() const { return record_count_; }

  static void write_record_file(
      const std::filesystem::path& path,
      const std::vector<std::vector<std::uint8_t>>& records);

 private:
  std::uint64_t seed_ = 0;
  std::filesystem::path file_;
  std::uint64_t record_len_ = 0;
  std::uint64_t record_count_ = 0;
};

// Wrapped sum of per-sample folds over a fetched blob; the quantity a
// worker's gradient derives from the data it consumed.
std::uint64_t fold_of_blob(const std::vector<std::uint8_t>& blob,
                           std::uint32_t bytes_per_sample);
// Same value straight from the synthetic generator, without materializing
// sample bodies.  Replay oracles use this.
std::uint64_t window_fold(std::uint64_t seed, const IndexWindow& w);

}  // namespace ftsim::data
