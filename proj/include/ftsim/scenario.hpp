// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario files: cluster shape, mode knobs, link model and an event
// timeline in one small text format.
//
// The format is a strict subset of TOML: `[section]` headers, one
// `key = value` per line, `#` comments, `[[events]]` for the timeline.
// Values are integers, floats, booleans, double-quoted strings and flat
// integer arrays.  Unknown sections or keys are errors, not warnings; a
// typo in a knob silently reverting to a default has burned enough
// experiments that strictness is worth the friction.
//
//   [cluster]   keys map 1:1 onto ClusterSpec fields
//   [mode]      keys map 1:1 onto ModeConfig fields
//   [links]     keys map 1:1 onto net::LinkModel fields
//   [[events]]  one table per timeline event
//
// When the [links] section is omitted the link bandwidth follows
// cluster.nic_bw so the simulated fabric matches the analytic one.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/transport.hpp"

namespace ftsim::scenario {

// Parse failure; the message carries the offending line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EventKind : std::uint8_t {
  WorkerCrash,    // one worker process dies, its pod stays up
  NodeCrash,      // a pod disappears without warning
  NodePairCrash,  // two pods disappear at the same instant
  HealthyRestart, // planned full restart, nothing is lost
};

const char* kind_name(EventKind k);

// A timeline entry.  Exactly one of the two triggers is set: an iteration
// trigger fires once every targeted worker has completed that iteration, a
// time trigger fires at an absolute simulated time.  All failures are
// fail-stop: a crashed target falls silent at once and never acts again.
struct ScenarioEvent {
  EventKind kind = EventKind::NodeCrash;
  std::optional<std::uint64_t> at_iteration;
  std::optional<double> at_seconds;
  std::vector<std::uint32_t> nodes;  // pod targets (node_crash, pair)
  std::optional<Role> role;          // worker target (worker_crash)
};

// Failover behaviour knobs.  `name` selects the mechanism set and each
// baseline replaces exactly one mechanism of the fast path, so A/B runs
// isolate a single variable:
//
//   fast                heartbeat detection, ring restore, overlapped
//                       substitute bring-up
//   baseline_timeout    detection by communication timeout only; serial
//                       bring-up with measured cold-start pod delays
//   baseline_sync_ckpt  no ring backups; training stalls for a periodic
//                       synchronous full checkpoint; restore from the
//                       last completed round
struct ModeConfig {
  std::string name = "fast";

  double heartbeat_interval_s = 1.0;
  std::uint32_t miss_threshold = 3;
  double baseline_timeout_s = 600.0;

  // Substitute bring-up delays.  Defaults depend on the mode: warm pools
  // make creation cheap and preinstalled images make dependency setup
  // free, while the cold path pays both in full.
  double pod_creation_s = 7.0;
  double dependency_install_s = 0.0;

  std::uint64_t fallback_interval = 500;  // full checkpoint period, 0 = off
  std::uint64_t target_iterations = 0;    // required, > 0
  double time_compression = 1.0;          // divides modelled compute delays
  std::uint64_t seed = 1;
  bool checkpointing = true;       // all state persistence on/off
  std::uint64_t sync_ckpt_interval = 100;  // baseline_sync_ckpt period

  // Control-plane stress shape: this many registration-and-heartbeat
  // senders and no training workers at all.  The run lasts run_seconds of
  // simulated time instead of a target iteration count.
  std::uint64_t synthetic_senders = 0;
  double run_seconds = 0.0;
};

struct Scenario {
  ClusterSpec cluster;
  ModeConfig mode;
  net::LinkModel links;
  std::vector<ScenarioEvent> events;
};

// "d1p0t2" -> Role{1, 0, 2}.  Inverse of Role::str().
Role parse_role(std::string_view text);

// Parse scenario text.  Structural problems (bad syntax, unknown keys,
// wrong value types) throw ParseError; semantic problems are left to
// validate() so a caller can report them all at once.
Scenario parse_scenario(std::string_view text);

// Read and parse a file.  Throws ParseError, with the path in the
// message, when the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);

// Semantic checks: cluster shape, mode knobs, event targets.  Returns
// human-readable problems, empty when the scenario is runnable.
std::vector<std::string> validate(const Scenario& sc);

}  // namespace ftsim::scenario
