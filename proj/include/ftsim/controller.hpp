// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Control plane state: pod registration, heartbeat liveness, checkpoint
// progress, data index assignment, and recovery planning.
//
// Everything in this header is synchronous and deterministic.  Simulated
// time enters as explicit `now` arguments and every entry point maps one
// decoded control message (or one timer tick) to state changes plus a
// reply struct, so the whole control plane can be unit-tested without a
// network.  The cluster harness owns the actual message loop and the
// execution of recovery plans; this module only decides.
//
// A failed pod's replacement reuses the node id and bumps `incarnation`,
// which keeps role placement a pure function of the cluster shape while
// still letting the controller tell a substitute from a duplicate.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/lccl.hpp"
#include "ftsim/runtime.hpp"
#include "ftsim/wire.hpp"

namespace ftsim::ctl {

struct ControllerConfig {
  rt::Nanos heartbeat_interval = rt::kSecond;
  std::uint32_t miss_threshold = 3;  // silent intervals before declared dead
};

// Counters surfaced to the metrics sink.  Oddities are counted, never fatal:
// a control plane that crashes on a stray message is worse than the stray.
struct ControllerStats {
  std::uint64_t unknown_heartbeats = 0;    // sender was never registered
  std::uint64_t late_heartbeats = 0;       // sender already declared failed
  std::uint64_t regressed_heartbeats = 0;  // iteration went backwards
  std::uint64_t stale_records = 0;         // checkpoint records, old epoch
  std::uint64_t detected_failures = 0;     // pods declared dead by silence
  std::uint64_t reported_failures = 0;     // worker exits reported over wire
  std::uint64_t recoveries = 0;
};

// ---- heartbeat table ---------------------------------------------------
//
// One slot per pod, indexed by node id; each pod's agent is the only writer
// of its slot, so a report costs O(1) and the table scales to tens of
// thousands of senders.  `sweep` runs once per detection tick and declares
// a pod dead after miss_threshold silent intervals, which bounds detection
// latency at (miss_threshold + 1) intervals including sweep granularity.

class HeartbeatTable {
 public:
  HeartbeatTable(std::uint32_t pods, const ControllerConfig& cfg);

  // Registration (and substitution) activates the slot; the registration
  // itself counts as a sign of life.
  void enroll(std::uint32_t node, std::uint64_t iteration, rt::Nanos now);
  // One report.  Unknown and already-failed senders are counted and
  // dropped; a regressed iteration is stored but flagged.
  void observe(std::uint32_t node, std::uint64_t iteration, rt::Nanos now);
  // Pods newly past the silence threshold, in node order.
  std::vector<std::uint32_t> sweep(rt::Nanos now);
  // Failure learned out of band (a reported exit): stops liveness tracking
  // without waiting out the timeout.
  void mark_failed(std::uint32_t node);

  bool enrolled(std::uint32_t node) const;
  bool failed(std::uint32_t node) const;
  std::uint64_t last_iteration(std::uint32_t node) const;
  rt::Nanos last_seen(std::uint32_t node) const;

  std::uint64_t unknown_reports() const { return unknown_; }
  std::uint64_t late_reports() const { return late_; }
  std::uint64_t regressions() const { return regressed_; }

 private:
  struct Slot {
    bool enrolled = false;
    bool failed = false;
    rt::Nanos last_seen = 0;
    std::uint64_t last_iteration = 0;
  };

  std::vector<Slot> slots_;
  rt::Nanos interval_;
  std::uint32_t miss_threshold_;
  std::uint64_t unknown_ = 0;
  std::uint64_t late_ = 0;
  std::uint64_t regressed_ = 0;
};

// ---- iteration ledger --------------------------------------------------
//
// Tracks, per worker, the latest iteration whose state is known recoverable
// (snapshot taken and its redundancy placed).  The global consistent
// iteration is the minimum over every worker in the grid, with absent
// workers counting as zero: recovery can only rewind to a point everyone
// can reproduce.  A data-parallel group's view is the minimum over its
// members.

class IterationLedger {
 public:
  explicit IterationLedger(const ClusterSpec& spec);

  // Monotone per worker; an older record is a no-op.
  void record(const Role& role, std::uint64_t iteration);
  std::uint64_t global_consistent() const;
  std::uint64_t group_latest(std::uint32_t dp_group) const;
  std::uint64_t worker_latest(const Role& role) const;
  // Post-recovery reset: every worker's recoverable state is exactly
  // `iteration` once restores finish, and records continue from there.
  void rebase(std::uint64_t iteration);

 private:
  ClusterSpec spec_;
  std::map<Role, std::uint64_t> latest_;
};

// ---- data index assignment ---------------------------------------------
//
// The global batch is split evenly over every worker column; one affine
// formula per epoch replaces per-iteration index messages.  Identical
// (cluster, iteration) always yields identical windows, so a rolled-back
// run re-reads exactly the data it read the first time.

wire::IndexAssign data_assignment(const ClusterSpec& spec,
                                  std::uint64_t start_iteration);

// ---- recovery plans ----------------------------------------------------

enum class RestoreKind : std::uint8_t {
  Neighbor,  // unique state from neighbor buffers, redundant from DP peers
  Fallback,  // everyone reloads the last complete full checkpoint round
};

// Stream `origin`'s unique state at the resume iteration from the buffer
// its ring successor holds to the (re-provisioned) pod that will run it.
struct ForwardInstruction {
  Role origin;
  std::uint32_t holder_node = 0;
  std::uint32_t dest_node = 0;
};

// Replacement for a lost worker re-reads replicated state from the lowest
// surviving replica in its data-parallel group.
struct RedundantSource {
  Role target;
  Role source;
};

struct RecoveryPlan {
  RestoreKind kind = RestoreKind::Neighbor;
  std::uint64_t notice_id = 0;
  std::uint64_t new_epoch = 0;
  std::uint64_t resume_iteration = 0;
  std::vector<std::uint32_t> failed_pods;  // need a substitute pod
  std::vector<Role> failed_roles;          // need their state restored
  // Surviving replica 0 of each data-parallel group persists the group's
  // replicated state while substitutes are provisioned, so a second
  // failure during recovery cannot orphan it.
  std::vector<Role> lazy_backup_targets;
  std::vector<ForwardInstruction> forwards;     // empty on the fallback path
  std::vector<RedundantSource> redundant_from;  // empty on the fallback path
};

// Pure classification: the neighbor path works iff every lost worker's
// buffer holder survived, i.e. no two failed members are adjacent on any
// data-parallel ring and d > 1.  `latest_fallback_round` caps the rewind
// when the neighbor path is unavailable.
RecoveryPlan plan_recovery(const ClusterSpec& spec,
                           const std::vector<std::uint32_t>& failed_pods,
                           const std::vector<Role>& failed_roles,
                           std::uint64_t global_consistent,
                           std::uint64_t latest_fallback_round);

// ---- controller --------------------------------------------------------

class Controller {
 public:
  Controller(ClusterSpec spec, ControllerConfig cfg);

  // Registration of a pod's agent.  Replies with the open epoch, the
  // iteration to start from, and the worker roles the pod hosts (a
  // substitute inherits the failed pod's roles with the slot).  Throws
  // net::ProtocolError on duplicates, stale epochs, or bad node ids.
  wire::RegisterAck on_register(const wire::Register& r, rt::Nanos now);
  void on_heartbeat(const wire::Heartbeat& hb, rt::Nanos now);
  void on_ckpt_record(const wire::CkptRecord& rec);
  // Reported (software) failure: the pod survives, the worker's state is
  // gone.  Marks the roles for the next recovery round.
  void on_worker_exit(const wire::WorkerExit& ex);
  // Answers a rendezvous poll: writes the caller's slot on first contact,
  // then returns every wanted peer location once all are present.
  wire::RendezvousInfo on_rendezvous(const wire::RendezvousPoll& poll);

  // Detection tick: pods newly declared dead by silence.
  std::vector<std::uint32_t> detect_failures(rt::Nanos now);

  // Turns the accumulated failure set (detected pods + reported worker
  // exits) into a plan, opens the next epoch, and rewinds the ledger to
  // the plan's resume iteration.  The caller executes the plan.
  RecoveryPlan orchestrate_recovery(const std::vector<std::uint32_t>& failed_pods,
                                    std::uint64_t latest_fallback_round);

  // Per-pod epoch announcement carrying role assignments and the index
  // formula; broadcast by the harness after a plan (and at first start).
  wire::EpochOpen epoch_open_for(std::uint32_t node) const;

  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t start_iteration() const { return start_; }
  std::uint64_t global_consistent() const { return ledger_.global_consistent(); }
  bool all_registered() const;
  std::vector<Role> pending_role_failures() const { return failed_roles_; }

  const ClusterSpec& cluster() const { return spec_; }
  const ControllerConfig& config() const { return cfg_; }
  const ControllerStats& stats() const { return stats_; }
  HeartbeatTable& heartbeats() { return beats_; }
  IterationLedger& ledger() { return ledger_; }
  lccl::RendezvousTable& rendezvous_table() { return rdv_; }

 private:
  std::vector<wire::RoleAssignment> roles_of_node(std::uint32_t node) const;

  ClusterSpec spec_;
  ControllerConfig cfg_;
  ControllerStats stats_;
  HeartbeatTable beats_;
  IterationLedger ledger_;
  lccl::RendezvousTable rdv_;
  std::uint64_t epoch_ = 0;
  std::uint64_t start_ = 0;
  std::uint64_t next_notice_ = 1;
  std::vector<std::uint64_t> registered_epoch_;  // per node, 0 = never
  std::vector<std::uint64_t> incarnation_;       // last seen per node
  std::vector<Role> failed_roles_;               // reported, not yet recovered
};

}  // namespace ftsim::ctl
