// SPDX-License-Identifier: MIT
//
// Closed-form model checks. Expected values here are frozen from hand
// evaluation of the formulas; the ring-recovery oracle enumerates subsets
// directly and never calls the library code it is checking.
#include <doctest.h>

#include <ftsim/analytics.hpp>
#include <ftsim/domain.hpp>
#include <ftsim/montecarlo.hpp>

#include <cmath>
#include <cstdint>
#include <random>

using namespace ftsim;
using namespace ftsim::analytics;

namespace {

ClusterSpec paper_scale_spec() {
  ClusterSpec cs;
  cs.num_nodes = 100;
  cs.gpus_per_node = 8;
  cs.data_parallel = 100;
  cs.pipeline_parallel = 8;
  cs.tensor_parallel = 1;
  cs.seq_len = 2048;
  cs.batch_size = 256;
  cs.params_per_device = 1e9;
  cs.compute_flops = 82.6e12;
  cs.nic_bw = 25e9;
  cs.disk_bw = 2.5e9;
  return cs;
}

// Counts k-subsets of an N-cycle with no two members cyclically adjacent,
// by direct bitmask enumeration. Independent of the closed form under test.
struct RingCounts {
  std::vector<BigInt> recoverable;  // index k
  std::vector<BigInt> total;        // index k
};

RingCounts enumerate_ring(int n) {
  RingCounts rc;
  rc.recoverable.assign(n + 1, BigInt(0));
  rc.total.assign(n + 1, BigInt(0));
  const std::uint32_t full = (n == 32) ? 0xFFFFFFFFu : ((1u << n) - 1u);
  for (std::uint32_t mask = 0;; ++mask) {
    int k = __builtin_popcount(mask);
    rc.total[k] += 1;
    std::uint32_t rot = ((mask >> 1) | (mask << (n - 1))) & full;
    bool adjacent = (mask & rot) != 0;
    if (k <= 1 || !adjacent) rc.recoverable[k] += 1;
    if (mask == full) break;
  }
  return rc;
}

}  // namespace

TEST_CASE("iteration compute time at the reference configuration") {
  ClusterSpec cs = paper_scale_spec();
  ComputeTime t = compute_time(cs);
  CHECK(t.forward_s == doctest::Approx(12.695).epsilon(0.001));
  CHECK(t.backward_s == doctest::Approx(2.0 * t.forward_s).epsilon(1e-12));
  CHECK(t.total_s == doctest::Approx(38.08).epsilon(0.001));
}

TEST_CASE("full checkpoint time and its limits") {
  CHECK(ckpt_time_full(1e9, 25e9, 2.5e9) == doctest::Approx(7.04).epsilon(1e-9));
  // V = I collapses to 32 phi / V.
  CHECK(ckpt_time_full(1e9, 10e9, 10e9) == doctest::Approx(32e9 / 10e9).epsilon(1e-9));
  // Disk much faster than NIC: approaches 16 phi / V.
  CHECK(ckpt_time_full(1e9, 25e9, 1e18) == doctest::Approx(16e9 / 25e9).epsilon(1e-6));
}

TEST_CASE("reduced checkpoint time and the headline reduction") {
  double razor = ckpt_time_razor(1e9, 25e9);
  CHECK(razor == doctest::Approx(0.48).epsilon(1e-9));
  CHECK(ckpt_time_razor(0.0, 25e9) == 0.0);
  double full = ckpt_time_full(1e9, 25e9, 2.5e9);
  double reduction = 1.0 - razor / full;
  CHECK(reduction == doctest::Approx(0.932).epsilon(0.001));
}

TEST_CASE("free checkpointing ratio") {
  CHECK(fcr(2048, 256, 25e9, 82.6e12) == doctest::Approx(79.34).epsilon(0.001));
  // Boundary: s*b*V = 2C gives exactly 1.
  CHECK(fcr(2, 1, 10.0, 10.0) == doctest::Approx(1.0).epsilon(1e-12));
  // Linear in V.
  CHECK(fcr(2048, 256, 12.5e9, 82.6e12) ==
        doctest::Approx(0.5 * fcr(2048, 256, 25e9, 82.6e12)).epsilon(1e-12));
}

TEST_CASE("fcr >= 1 exactly when compute covers the reduced checkpoint") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logu(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    ClusterSpec cs = paper_scale_spec();
    cs.seq_len = 1u << (rng() % 6 + 7);
    cs.batch_size = 1u << (rng() % 6 + 2);
    cs.params_per_device = 1e9 * std::pow(10.0, logu(rng));
    cs.nic_bw = 25e9 * std::pow(10.0, logu(rng));
    cs.compute_flops = 82.6e12 * std::pow(10.0, logu(rng));
    bool free_ride = fcr(cs) >= 1.0;
    bool covered = compute_time(cs).total_s >=
                   ckpt_time_razor(cs.params_per_device, cs.nic_bw);
    CHECK(free_ride == covered);
  }
}

TEST_CASE("mfu loss reproduces the published breakdowns") {
  // T_i = 0.5 h, no checkpoint overhead, MTTR pinned at 0.375 h.
  const double mttr = 0.375;
  const double expected[4] = {0.19, 0.10, 0.06, 0.05};
  const double mtbf[4] = {3, 6, 9, 12};
  for (int i = 0; i < 4; ++i) {
    MfuLossBreakdown l = mfu_loss(0.0, 0.5, mttr, mtbf[i]);
    CHECK(l.ckpt == 0.0);
    CHECK(l.total == doctest::Approx(l.recover + l.rollback).epsilon(1e-12));
    CHECK(std::abs(l.total - expected[i]) <= 0.02);
  }
  // Component monotonicity.
  CHECK(mfu_loss(0.0, 0.5, 0.5, 3).recover > mfu_loss(0.0, 0.5, 0.375, 3).recover);
  CHECK(mfu_loss(0.0, 1.0, 0.375, 3).rollback > mfu_loss(0.0, 0.5, 0.375, 3).rollback);
  CHECK(mfu_loss(0.1, 0.5, 0.375, 3).ckpt > mfu_loss(0.05, 0.5, 0.375, 3).ckpt);
}

TEST_CASE("cluster failure probability at published scales") {
  const double h[4] = {3, 6, 9, 12};
  const double p16k[4] = {0.4590, 0.7073, 0.8417, 0.9144};
  for (int i = 0; i < 4; ++i) {
    CHECK(cluster_failure_probability(16384, h[i], 80000.0) ==
          doctest::Approx(p16k[i]).epsilon(0.001));
  }
  CHECK(cluster_failure_probability(65536, 3, 80000.0) ==
        doctest::Approx(0.9144).epsilon(0.001));
  CHECK(cluster_failure_probability(65536, 12, 80000.0) > 0.99);
  CHECK(cluster_failure_probability(0, 3, 80000.0) == 0.0);
}

TEST_CASE("ring recovery probability: spot values") {
  CHECK(recovery_prob(800, 0) == 1.0);
  CHECK(recovery_prob(800, 1) == 1.0);
  CHECK(recovery_prob(4, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(recovery_prob(5, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(recovery_prob(3, 2) == 0.0);
  CHECK(recovery_prob(4, 3) == 0.0);
  Rational r = recovery_prob_exact(4, 2);
  CHECK(r == Rational(BigInt(1), BigInt(3)));
}

TEST_CASE("ring recovery probability matches direct enumeration") {
  for (int n = 1; n <= 14; ++n) {
    RingCounts rc = enumerate_ring(n);
    for (int k = 0; k <= n; ++k) {
      Rational want(rc.recoverable[k], rc.total[k]);
      Rational got = recovery_prob_exact(n, k);
      CAPTURE(n);
      CAPTURE(k);
      CHECK(got == want);
      CHECK(recovery_prob(n, k) ==
            doctest::Approx(boost::rational_cast<double>(want)).epsilon(1e-12));
    }
  }
}

TEST_CASE("ring recovery probability survives very large N") {
  double p = recovery_prob(20000, 3);
  CHECK(p > 0.999);
  CHECK(p < 1.0);
  CHECK(std::isfinite(recovery_prob(20000, 10000)));
}

TEST_CASE("per-count failure probability") {
  // One failure among 800 machines over 3 hours at T_b = 80000 h.
  double p1 = failure_prob(800, 1, 3, 80000.0);
  CHECK(p1 == doctest::Approx(0.18883).epsilon(0.001));
  // Distribution sums to one.
  for (int n : {5, 100, 800, 5000}) {
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) sum += failure_prob(n, k, 3, 80000.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("overall recovery probability: structure and the large-cluster claim") {
  ReliabilityResult r = overall_recovery_prob(800, 12, 80000.0);
  CHECK(r.p_recover > 0.0);
  CHECK(r.p_recover <= 1.0);
  CHECK(r.truncated_mass < 1e-15);
  CHECK_FALSE(r.terms.empty());
  CHECK(r.terms.front().k == 0);

  ReliabilityResult big = overall_recovery_prob(10000, 12, 100000.0);
  CHECK(big.p_recover > 0.99);
}

TEST_CASE("monte carlo agrees with the analytic overall probability") {
  ReliabilityResult an = overall_recovery_prob(100, 3, 80000.0);
  McResult mc = mc_recovery(100, 3, 80000.0, 200000, 42);
  CHECK(std::abs(mc.estimate - an.p_recover) <= 3.0 * mc.std_error + 1e-12);
}

TEST_CASE("monte carlo with explicit per-machine probability: exact small case") {
  // Ring of 4, p = 1/2: direct weighing of all 16 outcomes gives 7/16.
  McResult mc = mc_recovery_with_p(4, 0.5, 400000, 99);
  CHECK(std::abs(mc.estimate - 0.4375) <= 3.0 * mc.std_error);
}

TEST_CASE("monte carlo parallel and serial paths are bitwise identical") {
  McResult par = mc_recovery(800, 12, 80000.0, 50000, 1234);
  McResult ser = mc_recovery_serial(800, 12, 80000.0, 50000, 1234);
  CHECK(par.recovered == ser.recovered);
  CHECK(par.estimate == ser.estimate);
  McResult par2 = mc_recovery_with_p(64, 0.25, 50000, 77);
  McResult ser2 = mc_recovery_with_p_serial(64, 0.25, 50000, 77);
  CHECK(par2.recovered == ser2.recovered);
}

TEST_CASE("buffer sizing") {
  ClusterSpec cs = paper_scale_spec();
  cs.preload_depth = 10;
  // 4*s*b*k = 4*2048*256*10 bytes; the bandwidth bound is far larger here.
  CHECK(preload_buffer_bytes(cs) == std::uint64_t(4) * 2048 * 256 * 10);
  // Tiny NIC makes the transfer bound the binding one.
  ClusterSpec slow = cs;
  slow.nic_bw = 1e3;
  CHECK(preload_buffer_bytes(slow) <
        std::uint64_t(4) * 2048 * 256 * 10);
}

TEST_CASE("unique state accounting follows the redundancy rules") {
  ClusterSpec cs = paper_scale_spec();
  cs.data_parallel = 1;
  cs.num_nodes = 1;
  cs.gpus_per_node = 8;
  cs.pipeline_parallel = 8;
  CHECK(unique_state_bytes(cs) == std::uint64_t(12e9));

  ClusterSpec dist = paper_scale_spec();
  dist.data_parallel = 4;
  dist.num_nodes = 4;
  dist.pipeline_parallel = 8;
  dist.distributed_optimizer = true;
  CHECK(unique_state_bytes(dist) == std::uint64_t(3e9));

  dist.distributed_optimizer = false;
  CHECK(unique_state_bytes(dist) == 0);
}

TEST_CASE("unit converters") {
  CHECK(hours_to_seconds(0.5) == doctest::Approx(1800.0));
  CHECK(seconds_to_hours(7200.0) == doctest::Approx(2.0));
}

TEST_CASE("binomial coefficients are exact") {
  CHECK(binomial(0, 0) == BigInt(1));
  CHECK(binomial(5, 2) == BigInt(10));
  CHECK(binomial(5, 6) == BigInt(0));
  CHECK(binomial(52, 26) == BigInt("495918532948104"));
}
