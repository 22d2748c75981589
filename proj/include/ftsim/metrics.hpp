// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run metrics: a JSONL event stream plus one summary document.
//
// Both outputs are schema-versioned and deterministic: keys are emitted
// in sorted order and every recorded quantity is simulated time or
// byte-exact content, never wall-clock, so two runs of the same scenario
// and seed produce byte-identical files.  Wall-clock measurements (for
// example controller sweep cost) belong in tests and benchmarks, not
// here.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ftsim/runtime.hpp"

namespace ftsim::metrics {

inline constexpr int kSchemaVersion = 1;

// One failover, dissected.  All fields are simulated nanoseconds.  The
// total is measured wall-to-wall (failure instant to the moment training
// resumes), not summed from the parts: when bring-up stages overlap the
// total is smaller than the sum, and that difference is the point.
struct RecoveryBreakdown {
  rt::Nanos detection = 0;       // failure instant -> declared by controller
  rt::Nanos pod_creation = 0;
  rt::Nanos dependency_install = 0;
  rt::Nanos network_init = 0;    // slowest worker: peer channels ready
  rt::Nanos state_loading = 0;   // slowest worker: state restored
  rt::Nanos total = 0;           // failure instant -> resume broadcast
};

struct RecoveryReport {
  std::uint64_t notice_id = 0;
  std::string restore;                  // "ring", "fallback" or "none"
  std::uint64_t resume_iteration = 0;
  std::uint64_t rollback_iterations = 0;  // consistent frontier lost to restore
  RecoveryBreakdown breakdown;
};

// Egress traffic of one node, split by priority class.
struct LinkUsage {
  std::uint32_t node = 0;
  std::uint64_t tx_train = 0;
  std::uint64_t tx_state = 0;
  std::uint64_t tx_ctrl = 0;
  rt::Nanos busy_ns = 0;
};

struct RunMetrics {
  std::string mode;
  std::uint64_t seed = 0;
  double time_compression = 1.0;

  std::uint64_t target_iterations = 0;
  std::uint64_t iterations_done = 0;  // consistent frontier at shutdown
  bool completed = false;             // frontier reached the target
  std::string failure;                // nonempty when the run was unrecoverable

  rt::Nanos sim_duration = 0;

  // Sums over every (worker, iteration) pair.
  std::uint64_t iteration_count = 0;
  rt::Nanos iteration_ns_total = 0;
  rt::Nanos data_stall_ns_total = 0;
  rt::Nanos ckpt_stall_ns_total = 0;  // synchronous persistence only

  std::uint64_t backup_bytes = 0;     // ring backup payloads handed to the NIC
  std::uint64_t fallback_rounds = 0;  // completed full-checkpoint rounds
  std::uint64_t heartbeats = 0;
  std::uint64_t sweeps = 0;

  std::vector<RecoveryReport> recoveries;
  std::vector<LinkUsage> links;
};

// Serialise with sorted keys.  The summary carries the schema version and
// derived means alongside the raw counters.
nlohmann::json to_json(const RunMetrics& m);

// Two-space indented document plus trailing newline.
void write_summary(std::ostream& out, const RunMetrics& m);

// Parse a summary document back; throws std::runtime_error on schema
// mismatch or malformed input.  Only the raw counters round-trip.
RunMetrics read_summary(std::istream& in);

// The event stream.  One JSON object per line, sorted keys; the first
// line is a schema header.  A null stream discards events.
class Sink {
 public:
  explicit Sink(std::ostream* events = nullptr) : out_(events) {}

  void header(std::string_view mode, std::uint64_t seed);
  void event(rt::Nanos at, std::string_view kind, nlohmann::json fields);

 private:
  std::ostream* out_;
};

}  // namespace ftsim::metrics
