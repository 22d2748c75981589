// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/analytics.hpp"

#include <cmath>
#include <stdexcept>

namespace ftsim::analytics {

ComputeTime compute_time(const ClusterSpec& spec) {
  const double sb = static_cast<double>(spec.seq_len) * spec.batch_size;
  const double phi = static_cast<double>(spec.params_per_device);
  ComputeTime t;
  t.forward_s = 2.0 * sb * phi / spec.compute_flops;
  t.backward_s = 4.0 * sb * phi / spec.compute_flops;
  t.total_s = t.forward_s + t.backward_s;
  return t;
}

double ckpt_time_full(double params, double nic_bw, double disk_bw) {
  return 16.0 * params * (nic_bw + disk_bw) / (nic_bw * disk_bw);
}

double ckpt_time_razor(double params, double nic_bw) {
  return 12.0 * params / nic_bw;
}

double fcr(double seq_len, double batch_size, double nic_bw,
           double compute_flops) {
  return seq_len * batch_size * nic_bw / (2.0 * compute_flops);
}

double fcr(const ClusterSpec& spec) {
  return fcr(spec.seq_len, spec.batch_size, spec.nic_bw, spec.compute_flops);
}

MfuLossBreakdown mfu_loss(double ckpt_time_h, double ckpt_interval_h,
                          double mttr_h, double mtbf_h) {
  MfuLossBreakdown m;
  m.ckpt = ckpt_time_h / (ckpt_interval_h + ckpt_time_h);
  m.recover = mttr_h / (mtbf_h + mttr_h);
  m.rollback = (ckpt_interval_h / 2.0) / (mtbf_h + mttr_h);
  m.total = m.ckpt + m.recover + m.rollback;
  return m;
}

double cluster_failure_probability(double gpus, double hours,
                                   double gpu_mtbf_hours) {
  return 1.0 - std::exp(-gpus * hours / gpu_mtbf_hours);
}

BigInt binomial(std::uint32_t n, std::uint32_t r) {
  if (r > n) return 0;
  if (r > n - r) r = n - r;
  BigInt acc = 1;
  for (std::uint32_t i = 1; i <= r; ++i) {
    acc *= n - r + i;
    acc /= i;  // exact at every step: acc is C(n-r+i, i)
  }
  return acc;
}

Rational recovery_prob_exact(std::uint32_t n, std::uint32_t k) {
  if (k > n)
    throw std::out_of_range("recovery_prob: k exceeds machine count");
  if (n == 0) throw std::out_of_range("recovery_prob: empty ring");
  if (k <= 1) return Rational(1);
  BigInt num = binomial(n - k, k);
  if (n > k) num += binomial(n - k - 1, k - 1);  // n - k - 1 would wrap at k = n
  return Rational(num, binomial(n, k));
}

namespace {

double log_binomial(std::uint32_t n, std::uint32_t r) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(r) + 1.0) -
         std::lgamma(double(n - r) + 1.0);
}

}  // namespace

double recovery_prob(std::uint32_t n, std::uint32_t k) {
  if (k > n)
    throw std::out_of_range("recovery_prob: k exceeds machine count");
  if (n == 0) throw std::out_of_range("recovery_prob: empty ring");
  if (k <= 1) return 1.0;
  const double log_denom = log_binomial(n, k);
  double p = 0.0;
  if (n - k >= k) p += std::exp(log_binomial(n - k, k) - log_denom);
  if (n - k >= 1 && n - k - 1 >= k - 1)
    p += std::exp(log_binomial(n - k - 1, k - 1) - log_denom);
  return p;
}

double failure_prob(std::uint32_t n, std::uint32_t k, double hours,
                    double gpu_mtbf_hours) {
  if (k > n) throw std::out_of_range("failure_prob: k exceeds machine count");
  const double rate = 8.0 / gpu_mtbf_hours;  // per-machine failure rate
  const double log_q1 = -rate * hours;       // log P(one machine survives)
  const double p1 = -std::expm1(log_q1);     // P(one machine fails)
  if (p1 <= 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(log_binomial(n, k) + double(k) * std::log(p1) +
                  double(n - k) * log_q1);
}

ReliabilityResult overall_recovery_prob(std::uint32_t n, double hours,
                                        double gpu_mtbf_hours) {
  ReliabilityResult r;
  // The binomial terms come from the recurrence
  //   P(k+1) = P(k) * (n-k)/(k+1) * p/q,   P(0) = q^n,
  // in extended precision: unlike per-term lgamma evaluation, the partial
  // sums then actually reach 1 to ~1e-18, so the 1e-15 truncation
  // criterion is meaningful.
  const long double rate = 8.0L / gpu_mtbf_hours;
  const long double log_q1 = -rate * hours;
  const long double p1 = -std::expm1(log_q1);
  const long double q1 = std::exp(log_q1);
  long double term = std::exp(static_cast<long double>(n) * log_q1);
  long double cumulative = 0.0L;
  for (std::uint32_t k = 0; k <= n; ++k) {
    ReliabilityTerm t;
    t.k = k;
    t.p_exact_k = static_cast<double>(term);
    t.p_recover_k = recovery_prob(n, k);
    r.p_recover += t.p_exact_k * t.p_recover_k;
    cumulative += term;
    r.terms.push_back(t);
    if (1.0L - cumulative < 1e-15L) break;
    if (q1 > 0.0L)
      term *= static_cast<long double>(n - k) / (k + 1) * (p1 / q1);
    else
      term = 0.0L;  // certain failure of every machine
  }
  r.truncated_mass = std::max(0.0, static_cast<double>(1.0L - cumulative));
  return r;
}

std::uint64_t preload_buffer_bytes(const ClusterSpec& spec) {
  const double sb = static_cast<double>(spec.seq_len) * spec.batch_size;
  const double by_depth = 4.0 * sb * spec.preload_depth;
  const double by_window = 6.0 * sb *
                           static_cast<double>(spec.params_per_device) *
                           spec.nic_bw / spec.compute_flops;
  return static_cast<std::uint64_t>(std::min(by_depth, by_window));
}

std::uint64_t unique_state_bytes(const ClusterSpec& spec) {
  const std::uint64_t full = 12ull * spec.params_per_device;
  if (spec.data_parallel == 1) return full;
  if (!spec.distributed_optimizer) return 0;  // a peer replica holds a copy
  return (full + spec.data_parallel - 1) / spec.data_parallel;
}

}  // namespace ftsim::analytics
