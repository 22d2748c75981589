// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/domain.hpp"

#include <stdexcept>

namespace ftsim {

std::string Role::str() const {
  return "d" + std::to_string(dp) + "p" + std::to_string(pp) + "t" +
         std::to_string(tp);
}

std::string TID::str() const {
  return role.str() + "@" + std::to_string(iteration);
}

Role role_of(std::uint32_t global_index, const ClusterSpec& spec) {
  const std::uint32_t t = spec.tensor_parallel;
  const std::uint32_t p = spec.pipeline_parallel;
  if (global_index >= spec.world_size())
    throw std::out_of_range("role_of: index " + std::to_string(global_index) +
                            " outside world of " +
                            std::to_string(spec.world_size()));
  Role r;
  r.tp = static_cast<std::uint16_t>(global_index % t);
  r.pp = static_cast<std::uint16_t>((global_index / t) % p);
  r.dp = static_cast<std::uint16_t>(global_index / (t * p));
  return r;
}

std::uint32_t index_of(const Role& role, const ClusterSpec& spec) {
  const std::uint32_t t = spec.tensor_parallel;
  const std::uint32_t p = spec.pipeline_parallel;
  if (role.tp >= t || role.pp >= p || role.dp >= spec.data_parallel)
    throw std::out_of_range("index_of: role " + role.str() +
                            " outside layout");
  return (static_cast<std::uint32_t>(role.dp) * p + role.pp) * t + role.tp;
}

WorkerId placement_of(const Role& role, const ClusterSpec& spec) {
  const std::uint32_t idx = index_of(role, spec);
  return WorkerId{idx / spec.gpus_per_node,
                  static_cast<std::uint16_t>(idx % spec.gpus_per_node)};
}

std::uint32_t node_of(const Role& role, const ClusterSpec& spec) {
  return index_of(role, spec) / spec.gpus_per_node;
}

Role dp_neighbor(const Role& role, const ClusterSpec& spec) {
  Role n = role;
  n.dp = static_cast<std::uint16_t>((role.dp + 1u) % spec.data_parallel);
  return n;
}

Role dp_predecessor(const Role& role, const ClusterSpec& spec) {
  Role n = role;
  n.dp = static_cast<std::uint16_t>(
      (role.dp + spec.data_parallel - 1u) % spec.data_parallel);
  return n;
}

std::vector<std::string> validate_spec(const ClusterSpec& s) {
  std::vector<std::string> v;
  auto positive = [&v](double x, const char* name) {
    if (!(x > 0.0)) v.push_back(std::string(name) + " must be positive");
  };
  auto nonzero = [&v](std::uint64_t x, const char* name) {
    if (x == 0) v.push_back(std::string(name) + " must be nonzero");
  };
  nonzero(s.num_nodes, "num_nodes");
  nonzero(s.gpus_per_node, "gpus_per_node");
  nonzero(s.data_parallel, "data_parallel");
  nonzero(s.pipeline_parallel, "pipeline_parallel");
  nonzero(s.tensor_parallel, "tensor_parallel");
  nonzero(s.seq_len, "seq_len");
  nonzero(s.batch_size, "batch_size");
  nonzero(s.params_per_device, "params_per_device");
  nonzero(s.preload_depth, "preload_depth");
  positive(s.gpu_mtbf_hours, "gpu_mtbf_hours");
  positive(s.nic_bw, "nic_bw");
  positive(s.disk_bw, "disk_bw");
  positive(s.compute_flops, "compute_flops");
  positive(s.ckpt_interval_hours, "ckpt_interval_hours");
  const std::uint64_t degrees = std::uint64_t{s.data_parallel} *
                                s.pipeline_parallel * s.tensor_parallel;
  if (s.num_nodes != 0 && s.gpus_per_node != 0 &&
      degrees != std::uint64_t{s.num_nodes} * s.gpus_per_node)
    v.push_back("data_parallel * pipeline_parallel * tensor_parallel (" +
                std::to_string(degrees) + ") must equal num_nodes * " +
                "gpus_per_node (" +
                std::to_string(std::uint64_t{s.num_nodes} * s.gpus_per_node) +
                ")");
  // Roles are mapped node-by-node, so a tensor group must not straddle nodes.
  if (s.tensor_parallel != 0 && s.gpus_per_node != 0 &&
      s.tensor_parallel > s.gpus_per_node)
    v.push_back("tensor_parallel must not exceed gpus_per_node");
  return v;
}

}  // namespace ftsim
