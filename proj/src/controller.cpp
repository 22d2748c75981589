// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/controller.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "ftsim/ckpt.hpp"
#include "ftsim/transport.hpp"

namespace ftsim::ctl {

// ---- heartbeat table ---------------------------------------------------

HeartbeatTable::HeartbeatTable(std::uint32_t pods, const ControllerConfig& cfg)
    : slots_(pods),
      interval_(cfg.heartbeat_interval),
      miss_threshold_(cfg.miss_threshold) {}

void HeartbeatTable::enroll(std::uint32_t node, std::uint64_t iteration,
                            rt::Nanos now) {
  auto& s = slots_.at(node);
  s.enrolled = true;
  s.failed = false;
  s.last_seen = now;
  s.last_iteration = iteration;
}

void HeartbeatTable::observe(std::uint32_t node, std::uint64_t iteration,
                             rt::Nanos now) {
  if (node >= slots_.size() || !slots_[node].enrolled) {
    ++unknown_;
    return;
  }
  auto& s = slots_[node];
  if (s.failed) {
    ++late_;
    return;
  }
  if (iteration < s.last_iteration) ++regressed_;
  s.last_iteration = iteration;
  s.last_seen = now;
}

std::vector<std::uint32_t> HeartbeatTable::sweep(rt::Nanos now) {
  const rt::Nanos limit = interval_ * miss_threshold_;
  std::vector<std::uint32_t> dead;
  for (std::uint32_t i = 0; i < slots_.size(); ++i) {
    auto& s = slots_[i];
    if (!s.enrolled || s.failed) continue;
    if (now - s.last_seen > limit) {
      s.failed = true;
      dead.push_back(i);
    }
  }
  return dead;
}

void HeartbeatTable::mark_failed(std::uint32_t node) {
  slots_.at(node).failed = true;
}

bool HeartbeatTable::enrolled(std::uint32_t node) const {
  return node < slots_.size() && slots_[node].enrolled;
}

bool HeartbeatTable::failed(std::uint32_t node) const {
  return node < slots_.size() && slots_[node].failed;
}

std::uint64_t HeartbeatTable::last_iteration(std::uint32_t node) const {
  return slots_.at(node).last_iteration;
}

rt::Nanos HeartbeatTable::last_seen(std::uint32_t node) const {
  return slots_.at(node).last_seen;
}

// ---- iteration ledger --------------------------------------------------

IterationLedger::IterationLedger(const ClusterSpec& spec) : spec_(spec) {}

void IterationLedger::record(const Role& role, std::uint64_t iteration) {
  if (role.dp >= spec_.data_parallel || role.pp >= spec_.pipeline_parallel ||
      role.tp >= spec_.tensor_parallel)
    throw net::ProtocolError("checkpoint record for a role outside the grid: " +
                             role.str());
  auto& e = latest_[role];
  if (iteration > e) e = iteration;
}

std::uint64_t IterationLedger::global_consistent() const {
  if (latest_.size() < spec_.world_size()) return 0;
  std::uint64_t low = UINT64_MAX;
  for (const auto& [role, iter] : latest_) low = std::min(low, iter);
  return low;
}

std::uint64_t IterationLedger::group_latest(std::uint32_t dp_group) const {
  const std::uint16_t pp =
      static_cast<std::uint16_t>(dp_group / spec_.tensor_parallel);
  const std::uint16_t tp =
      static_cast<std::uint16_t>(dp_group % spec_.tensor_parallel);
  std::uint64_t low = UINT64_MAX;
  for (std::uint16_t dp = 0; dp < spec_.data_parallel; ++dp) {
    auto it = latest_.find(Role{dp, pp, tp});
    low = std::min(low, it == latest_.end() ? 0 : it->second);
  }
  return low == UINT64_MAX ? 0 : low;
}

std::uint64_t IterationLedger::worker_latest(const Role& role) const {
  auto it = latest_.find(role);
  return it == latest_.end() ? 0 : it->second;
}

void IterationLedger::rebase(std::uint64_t iteration) {
  for (std::uint16_t dp = 0; dp < spec_.data_parallel; ++dp)
    for (std::uint16_t pp = 0; pp < spec_.pipeline_parallel; ++pp)
      for (std::uint16_t tp = 0; tp < spec_.tensor_parallel; ++tp)
        latest_[Role{dp, pp, tp}] = iteration;
}

// ---- data index assignment ---------------------------------------------

wire::IndexAssign data_assignment(const ClusterSpec& spec,
                                  std::uint64_t start_iteration) {
  const std::uint32_t world = spec.world_size();
  if (world == 0 || spec.batch_size % world != 0)
    throw net::SetupError("batch size must divide evenly over the workers");
  wire::IndexAssign a;
  a.start_iteration = start_iteration;
  a.per_column = spec.batch_size / world;
  a.columns = world;
  // Index 0 belongs to iteration 0 forever, so windows are reproducible
  // across epochs and a rollback re-reads the very same samples.
  a.base_index = start_iteration * static_cast<std::uint64_t>(spec.batch_size);
  return a;
}

// ---- recovery plans ----------------------------------------------------

RecoveryPlan plan_recovery(const ClusterSpec& spec,
                           const std::vector<std::uint32_t>& failed_pods,
                           const std::vector<Role>& failed_roles,
                           std::uint64_t global_consistent,
                           std::uint64_t latest_fallback_round) {
  RecoveryPlan plan;
  plan.failed_pods = failed_pods;
  std::sort(plan.failed_pods.begin(), plan.failed_pods.end());
  plan.failed_pods.erase(
      std::unique(plan.failed_pods.begin(), plan.failed_pods.end()),
      plan.failed_pods.end());

  std::set<Role> lost(failed_roles.begin(), failed_roles.end());
  for (std::uint32_t pod : plan.failed_pods)
    for (std::uint16_t lr = 0; lr < spec.gpus_per_node; ++lr)
      lost.insert(role_of(pod * spec.gpus_per_node + lr, spec));
  plan.failed_roles.assign(lost.begin(), lost.end());

  bool neighbor_ok = spec.data_parallel > 1;
  for (const Role& f : lost)
    if (lost.count(dp_neighbor(f, spec))) {
      neighbor_ok = false;
      break;
    }

  const auto uplan = ckpt::razor(spec);

  if (neighbor_ok) {
    plan.kind = RestoreKind::Neighbor;
    plan.resume_iteration = global_consistent;
    // Before anything was recorded the initial state is rebuilt from the
    // seed, so there is nothing to forward, source or protect.
    if (global_consistent == 0) return plan;
    for (const Role& f : lost) {
      if (uplan.unique_bytes_per_device > 0)
        plan.forwards.push_back(ForwardInstruction{
            f, node_of(dp_neighbor(f, spec), spec), node_of(f, spec)});
      if (uplan.weights_redundant || uplan.optimizer_redundant) {
        for (std::uint16_t dp = 0; dp < spec.data_parallel; ++dp) {
          Role cand{dp, f.pp, f.tp};
          if (!lost.count(cand)) {
            plan.redundant_from.push_back(RedundantSource{f, cand});
            break;
          }
        }
      }
    }
    // Replicated state outlives the recovery window: replica 0 of each
    // group (or the lowest survivor) persists it while pods spin up.
    if (uplan.weights_redundant || uplan.optimizer_redundant) {
      for (std::uint16_t pp = 0; pp < spec.pipeline_parallel; ++pp)
        for (std::uint16_t tp = 0; tp < spec.tensor_parallel; ++tp)
          for (std::uint16_t dp = 0; dp < spec.data_parallel; ++dp) {
            Role cand{dp, pp, tp};
            if (!lost.count(cand)) {
              plan.lazy_backup_targets.push_back(cand);
              break;
            }
          }
    }
  } else {
    plan.kind = RestoreKind::Fallback;
    plan.resume_iteration = latest_fallback_round;
  }
  return plan;
}

// ---- controller --------------------------------------------------------

Controller::Controller(ClusterSpec spec, ControllerConfig cfg)
    : spec_(spec),
      cfg_(cfg),
      beats_(spec.num_nodes, cfg),
      ledger_(spec),
      registered_epoch_(spec.num_nodes, 0),
      incarnation_(spec.num_nodes, 0) {
  if (auto problems = validate_spec(spec_); !problems.empty())
    throw net::SetupError("bad cluster shape: " + problems.front());
  data_assignment(spec_, 0);  // reject shapes the index formula cannot split
  epoch_ = 1;
  rdv_.open_epoch(epoch_);
}

std::vector<wire::RoleAssignment> Controller::roles_of_node(
    std::uint32_t node) const {
  std::vector<wire::RoleAssignment> out;
  out.reserve(spec_.gpus_per_node);
  for (std::uint16_t lr = 0; lr < spec_.gpus_per_node; ++lr)
    out.push_back(
        wire::RoleAssignment{lr, role_of(node * spec_.gpus_per_node + lr, spec_)});
  return out;
}

wire::RegisterAck Controller::on_register(const wire::Register& r,
                                          rt::Nanos now) {
  if (r.kind != wire::NodeKind::Agent)
    throw net::ProtocolError("only pod agents register with the controller");
  if (r.node >= spec_.num_nodes)
    throw net::ProtocolError("registration from node " + std::to_string(r.node) +
                             " outside the cluster");
  if (r.epoch > epoch_)
    throw net::ProtocolError("registration claims future epoch " +
                             std::to_string(r.epoch));
  if (r.epoch != 0 && r.epoch < epoch_)
    throw net::ProtocolError("registration with stale epoch " +
                             std::to_string(r.epoch));
  if (registered_epoch_[r.node] == epoch_)
    throw net::ProtocolError("duplicate registration from node " +
                             std::to_string(r.node));
  if (r.incarnation < incarnation_[r.node])
    throw net::ProtocolError("incarnation went backwards on node " +
                             std::to_string(r.node));
  if (r.slots != spec_.gpus_per_node)
    throw net::ProtocolError("node offers " + std::to_string(r.slots) +
                             " slots, cluster expects " +
                             std::to_string(spec_.gpus_per_node));
  registered_epoch_[r.node] = epoch_;
  incarnation_[r.node] = r.incarnation;
  beats_.enroll(r.node, start_, now);
  return wire::RegisterAck{epoch_, start_, roles_of_node(r.node)};
}

void Controller::on_heartbeat(const wire::Heartbeat& hb, rt::Nanos now) {
  beats_.observe(hb.node, hb.iteration, now);
  stats_.unknown_heartbeats = beats_.unknown_reports();
  stats_.late_heartbeats = beats_.late_reports();
  stats_.regressed_heartbeats = beats_.regressions();
}

void Controller::on_ckpt_record(const wire::CkptRecord& rec) {
  if (rec.epoch != epoch_) {
    ++stats_.stale_records;
    return;
  }
  ledger_.record(rec.role, rec.iteration);
}

void Controller::on_worker_exit(const wire::WorkerExit& ex) {
  if (ex.reason == 0) return;  // normal completion
  ++stats_.reported_failures;
  if (std::find(failed_roles_.begin(), failed_roles_.end(), ex.role) ==
      failed_roles_.end())
    failed_roles_.push_back(ex.role);
}

wire::RendezvousInfo Controller::on_rendezvous(const wire::RendezvousPoll& poll) {
  if (!rdv_.has(poll.epoch, poll.self))
    rdv_.write(poll.epoch, poll.self,
               wire::PeerLocation{poll.self, poll.node, poll.local_rank});
  auto locs = rdv_.lookup(poll.epoch, poll.want);
  wire::RendezvousInfo out;
  out.epoch = poll.epoch;
  out.complete = locs.has_value();
  if (locs) out.peers = std::move(*locs);
  return out;
}

std::vector<std::uint32_t> Controller::detect_failures(rt::Nanos now) {
  auto dead = beats_.sweep(now);
  stats_.detected_failures += dead.size();
  return dead;
}

RecoveryPlan Controller::orchestrate_recovery(
    const std::vector<std::uint32_t>& failed_pods,
    std::uint64_t latest_fallback_round) {
  for (std::uint32_t n : failed_pods) beats_.mark_failed(n);
  RecoveryPlan plan =
      plan_recovery(spec_, failed_pods, failed_roles_,
                    ledger_.global_consistent(), latest_fallback_round);
  plan.notice_id = next_notice_++;
  plan.new_epoch = ++epoch_;
  rdv_.open_epoch(epoch_);
  start_ = plan.resume_iteration;
  ledger_.rebase(start_);
  failed_roles_.clear();
  ++stats_.recoveries;
  return plan;
}

wire::EpochOpen Controller::epoch_open_for(std::uint32_t node) const {
  return wire::EpochOpen{epoch_, start_, roles_of_node(node),
                         data_assignment(spec_, start_)};
}

bool Controller::all_registered() const {
  for (std::uint32_t n = 0; n < spec_.num_nodes; ++n)
    if (!beats_.enrolled(n) || beats_.failed(n)) return false;
  return true;
}

}  // namespace ftsim::ctl
