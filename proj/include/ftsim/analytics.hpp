// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Closed-form cost and reliability models for failover-aware training.
// Conventions: the transfer/compute formulas work in seconds; the failure
// and recovery probabilities work in hours (operators quote MTBF and job
// horizons in hours).  Converters are at the bottom.

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include "ftsim/domain.hpp"

namespace ftsim::analytics {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::rational<BigInt>;

struct ComputeTime {
  double forward_s = 0;
  double backward_s = 0;
  double total_s = 0;  // forward + gradient sync window + backward
};

// Per-iteration compute window of one device: forward 2*s*b*phi/C,
// backward 4*s*b*phi/C.
ComputeTime compute_time(const ClusterSpec& spec);

// Interval checkpoint of the full replica state through host memory to disk:
// 16*phi*(V+I)/(V*I) seconds.
double ckpt_time_full(double params, double nic_bw, double disk_bw);

// Shaved per-iteration checkpoint: only the non-redundant optimizer state
// crosses the NIC, 12*phi/V seconds.
double ckpt_time_razor(double params, double nic_bw);

// Free checkpointing ratio s*b*V/(2*C).  At or above 1 the shaved backup
// fits inside one compute window and per-iteration checkpointing is free.
double fcr(double seq_len, double batch_size, double nic_bw,
           double compute_flops);
double fcr(const ClusterSpec& spec);

struct MfuLossBreakdown {
  double ckpt = 0;      // T_ckpt / (T_i + T_ckpt)
  double recover = 0;   // MTTR / (MTBF + MTTR)
  double rollback = 0;  // (T_i / 2) / (MTBF + MTTR)
  double total = 0;
};

// All arguments in hours.
MfuLossBreakdown mfu_loss(double ckpt_time_h, double ckpt_interval_h,
                          double mttr_h, double mtbf_h);

// Probability that a cluster of `gpus` accelerators sees at least one
// failure within `hours`, each unit failing independently with MTBF
// `gpu_mtbf_hours`:  1 - exp(-gpus * hours / mtbf).
double cluster_failure_probability(double gpus, double hours,
                                   double gpu_mtbf_hours);

// Probability that k simultaneous machine failures out of n machines on a
// cyclic backup ring leave the job recoverable, i.e. no failed machine's
// ring successor also failed.  Defined as 1 for k <= 1; for k >= 2 it is
// [C(n-k,k) + C(n-k-1,k-1)] / C(n,k).
double recovery_prob(std::uint32_t n, std::uint32_t k);

// Same quantity as an exact rational (used where bit-for-bit agreement with
// an enumeration matters; cost grows with n, fine into the thousands).
Rational recovery_prob_exact(std::uint32_t n, std::uint32_t k);

// Probability that exactly k of n machines fail within `hours`, with
// per-machine failure rate 8/gpu_mtbf_hours (eight accelerators per host).
double failure_prob(std::uint32_t n, std::uint32_t k, double hours,
                    double gpu_mtbf_hours);

struct ReliabilityTerm {
  std::uint32_t k = 0;
  double p_exact_k = 0;    // probability of exactly k machine failures
  double p_recover_k = 0;  // recoverability given k failures
};

struct ReliabilityResult {
  double p_recover = 0;  // sum over k of p_exact_k * p_recover_k
  std::vector<ReliabilityTerm> terms;
  double truncated_mass = 0;  // unaccounted tail, < 1e-15 by construction
};

// Overall probability that the job survives any failures arriving in a
// window of `hours` via the neighboring-redundancy path.  The sum over k
// stops once the remaining binomial mass drops below 1e-15.
ReliabilityResult overall_recovery_prob(std::uint32_t n, double hours,
                                        double gpu_mtbf_hours);

// Data kept ahead of the consumers, bytes: min(4*s*b*k, 6*s*b*phi*V/C).
std::uint64_t preload_buffer_bytes(const ClusterSpec& spec);

// Bytes of state only this worker holds (weights + optimizer accounted at
// 12 bytes per parameter): 12*phi/d with a distributed optimizer across
// d > 1 replicas, 12*phi for a single replica, 0 when a peer replica holds
// a full copy.
std::uint64_t unique_state_bytes(const ClusterSpec& spec);

inline double hours_to_seconds(double h) { return h * 3600.0; }
inline double seconds_to_hours(double s) { return s / 3600.0; }

// Exact binomial coefficient; C(n, r) = 0 for r > n (and r < 0 overloads
// are avoided by unsigned arguments).
BigInt binomial(std::uint32_t n, std::uint32_t r);

}  // namespace ftsim::analytics
