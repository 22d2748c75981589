// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The simulated cluster: controller process, node agents, workers, data
// server and failure injection wired together over the virtual-time
// network.  One call runs a scenario to completion and returns metrics
// plus each worker's final state, so tests can hold the outcome against
// an independently computed replica.
//
// Everything inside is deterministic: a scenario and a seed fix the whole
// run, including the metrics byte stream.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ftsim/evolution.hpp"
#include "ftsim/metrics.hpp"
#include "ftsim/runtime.hpp"
#include "ftsim/scenario.hpp"

namespace ftsim::world {

// Simulated node ids of the control and data planes, far outside any
// compute-node range.
inline constexpr std::uint32_t kCtrlNode = 0xFFFFFF00u;
inline constexpr std::uint32_t kDataNode = 0xFFFFFF01u;

// One worker's state when the simulation stopped.
struct WorkerFinal {
  Role role;
  std::uint64_t iteration = 0;
  evo::Digest weights{};
  evo::Digest optimizer{};
};

struct RunResult {
  bool ok = false;      // ran to its configured end without a fatal error
  std::string error;    // what went wrong when !ok
  metrics::RunMetrics metrics;
  std::vector<WorkerFinal> finals;  // sorted by role
};

// Runs one scenario.  `storage_dir` backs the persistent checkpoint
// store (cleared at start so reruns are independent); `sink` may be null.
// `horizon` caps simulated time; 0 picks a generous bound from the
// scenario.  A run that exceeds the horizon or hits an unrecoverable
// restore error returns ok = false.
RunResult run_scenario(const scenario::Scenario& sc,
                       const std::filesystem::path& storage_dir,
                       metrics::Sink* sink = nullptr,
                       rt::Nanos horizon = 0);

}  // namespace ftsim::world
