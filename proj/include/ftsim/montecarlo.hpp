// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace ftsim::analytics {

struct McResult {
  double estimate = 0;
  double std_error = 0;
  std::uint64_t recovered = 0;
  std::uint64_t trials = 0;
};

// Monte Carlo estimate of the ring-recoverability probability: every trial
// draws an independent per-machine failure over the window and counts the
// configuration recoverable when at most one machine failed or no two failed
// machines sit adjacently on the cyclic backup ring.
//
// Each trial owns a counter-derived RNG stream, so the estimate depends only
// on (n, p, trials, seed): the parallel and the serial path produce the same
// recovered count bit for bit, regardless of thread count.
McResult mc_recovery(std::uint32_t n, double hours, double gpu_mtbf_hours,
                     std::uint64_t trials, std::uint64_t seed);

// Serial reference implementation, kept for testing the parallel kernel.
McResult mc_recovery_serial(std::uint32_t n, double hours,
                            double gpu_mtbf_hours, std::uint64_t trials,
                            std::uint64_t seed);

// Test hook: same estimator with the per-machine failure probability forced.
McResult mc_recovery_with_p(std::uint32_t n, double p, std::uint64_t trials,
                            std::uint64_t seed);
McResult mc_recovery_with_p_serial(std::uint32_t n, double p,
                                   std::uint64_t trials, std::uint64_t seed);

}  // namespace ftsim::analytics
