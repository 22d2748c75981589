// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/montecarlo.hpp"

#include <cmath>
#include <cstdint>

namespace ftsim::analytics {
namespace {

// splitmix64; one independent stream per trial.
struct TrialRng {
  std::uint64_t x;
  std::uint64_t next() {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// One trial: stream the ring once, tracking only the previous draw and the
// first draw (for the wrap-around pair).
bool trial_recoverable(std::uint32_t n, double p, TrialRng& rng) {
  std::uint32_t failed = 0;
  bool first = false, prev = false, adjacent = false;
  for (std::uint32_t i = 0; i < n; ++i) {
    const bool f = rng.uniform() < p;
    if (f) ++failed;
    if (i == 0)
      first = f;
    else if (prev && f)
      adjacent = true;
    prev = f;
  }
  if (n > 1 && prev && first) adjacent = true;
  return failed <= 1 || !adjacent;
}

McResult summarize(std::uint64_t recovered, std::uint64_t trials) {
  McResult r;
  r.recovered = recovered;
  r.trials = trials;
  r.estimate = trials ? double(recovered) / double(trials) : 0.0;
  r.std_error =
      trials ? std::sqrt(r.estimate * (1.0 - r.estimate) / double(trials))
             : 0.0;
  return r;
}

}  // namespace

McResult mc_recovery_with_p(std::uint32_t n, double p, std::uint64_t trials,
                            std::uint64_t seed) {
  std::uint64_t recovered = 0;
#pragma omp parallel for reduction(+ : recovered) schedule(static)
  for (std::int64_t i = 0; i < std::int64_t(trials); ++i) {
    TrialRng rng{mix64(seed + 0x9E3779B97F4A7C15ull * (std::uint64_t(i) + 1))};
    recovered += trial_recoverable(n, p, rng) ? 1 : 0;
  }
  return summarize(recovered, trials);
}

McResult mc_recovery_with_p_serial(std::uint32_t n, double p,
                                   std::uint64_t trials, std::uint64_t seed) {
  std::uint64_t recovered = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    TrialRng rng{mix64(seed + 0x9E3779B97F4A7C15ull * (i + 1))};
    recovered += trial_recoverable(n, p, rng) ? 1 : 0;
  }
  return summarize(recovered, trials);
}

namespace {
double machine_failure_prob(double hours, double gpu_mtbf_hours) {
  return -std::expm1(-8.0 * hours / gpu_mtbf_hours);
}
}  // namespace

McResult mc_recovery(std::uint32_t n, double hours, double gpu_mtbf_hours,
                     std::uint64_t trials, std::uint64_t seed) {
  return mc_recovery_with_p(n, machine_failure_prob(hours, gpu_mtbf_hours),
                            trials, seed);
}

McResult mc_recovery_serial(std::uint32_t n, double hours,
                            double gpu_mtbf_hours, std::uint64_t trials,
                            std::uint64_t seed) {
  return mc_recovery_with_p_serial(
      n, machine_failure_prob(hours, gpu_mtbf_hours), trials, seed);
}

}  // namespace ftsim::analytics
