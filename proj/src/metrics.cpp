// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "ftsim/metrics.hpp"

#include <ostream>
#include <stdexcept>

namespace ftsim::metrics {

using nlohmann::json;

namespace {

json breakdown_json(const RecoveryBreakdown& b) {
  return json{{"detection_ns", b.detection},
              {"pod_creation_ns", b.pod_creation},
              {"dependency_install_ns", b.dependency_install},
              {"network_init_ns", b.network_init},
              {"state_loading_ns", b.state_loading},
              {"total_ns", b.total}};
}

RecoveryBreakdown breakdown_from(const json& j) {
  RecoveryBreakdown b;
  b.detection = j.at("detection_ns").get<rt::Nanos>();
  b.pod_creation = j.at("pod_creation_ns").get<rt::Nanos>();
  b.dependency_install = j.at("dependency_install_ns").get<rt::Nanos>();
  b.network_init = j.at("network_init_ns").get<rt::Nanos>();
  b.state_loading = j.at("state_loading_ns").get<rt::Nanos>();
  b.total = j.at("total_ns").get<rt::Nanos>();
  return b;
}

}  // namespace

json to_json(const RunMetrics& m) {
  json j;
  j["schema"] = kSchemaVersion;
  j["mode"] = m.mode;
  j["seed"] = m.seed;
  j["time_compression"] = m.time_compression;
  j["target_iterations"] = m.target_iterations;
  j["iterations_done"] = m.iterations_done;
  j["completed"] = m.completed;
  j["failure"] = m.failure;
  j["sim_duration_ns"] = m.sim_duration;
  j["iteration_count"] = m.iteration_count;
  j["iteration_ns_total"] = m.iteration_ns_total;
  j["data_stall_ns_total"] = m.data_stall_ns_total;
  j["ckpt_stall_ns_total"] = m.ckpt_stall_ns_total;
  j["mean_iteration_ns"] =
      m.iteration_count ? m.iteration_ns_total / static_cast<rt::Nanos>(m.iteration_count) : 0;
  j["backup_bytes"] = m.backup_bytes;
  j["fallback_rounds"] = m.fallback_rounds;
  j["heartbeats"] = m.heartbeats;
  j["sweeps"] = m.sweeps;

  j["recoveries"] = json::array();
  for (const RecoveryReport& r : m.recoveries)
    j["recoveries"].push_back(json{{"notice_id", r.notice_id},
                                   {"restore", r.restore},
                                   {"resume_iteration", r.resume_iteration},
                                   {"rollback_iterations", r.rollback_iterations},
                                   {"breakdown", breakdown_json(r.breakdown)}});

  j["links"] = json::array();
  for (const LinkUsage& l : m.links)
    j["links"].push_back(json{{"node", l.node},
                              {"tx_train", l.tx_train},
                              {"tx_state", l.tx_state},
                              {"tx_ctrl", l.tx_ctrl},
                              {"busy_ns", l.busy_ns}});
  return j;
}

void write_summary(std::ostream& out, const RunMetrics& m) {
  out << to_json(m).dump(2) << '\n';
}

RunMetrics read_summary(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed summary: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema"))
    throw std::runtime_error("not a run summary (no schema field)");
  if (j["schema"].get<int>() != kSchemaVersion)
    throw std::runtime_error("unsupported summary schema " + j["schema"].dump());

  RunMetrics m;
  m.mode = j.at("mode").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.time_compression = j.at("time_compression").get<double>();
  m.target_iterations = j.at("target_iterations").get<std::uint64_t>();
  m.iterations_done = j.at("iterations_done").get<std::uint64_t>();
  m.completed = j.at("completed").get<bool>();
  m.failure = j.at("failure").get<std::string>();
  m.sim_duration = j.at("sim_duration_ns").get<rt::Nanos>();
  m.iteration_count = j.at("iteration_count").get<std::uint64_t>();
  m.iteration_ns_total = j.at("iteration_ns_total").get<rt::Nanos>();
  m.data_stall_ns_total = j.at("data_stall_ns_total").get<rt::Nanos>();
  m.ckpt_stall_ns_total = j.at("ckpt_stall_ns_total").get<rt::Nanos>();
  m.backup_bytes = j.at("backup_bytes").get<std::uint64_t>();
  m.fallback_rounds = j.at("fallback_rounds").get<std::uint64_t>();
  m.heartbeats = j.at("heartbeats").get<std::uint64_t>();
  m.sweeps = j.at("sweeps").get<std::uint64_t>();
  for (const json& r : j.at("recoveries")) {
    RecoveryReport rep;
    rep.notice_id = r.at("notice_id").get<std::uint64_t>();
    rep.restore = r.at("restore").get<std::string>();
    rep.resume_iteration = r.at("resume_iteration").get<std::uint64_t>();
    rep.rollback_iterations = r.at("rollback_iterations").get<std::uint64_t>();
    rep.breakdown = breakdown_from(r.at("breakdown"));
    m.recoveries.push_back(std::move(rep));
  }
  for (const json& l : j.at("links")) {
    LinkUsage u;
    u.node = l.at("node").get<std::uint32_t>();
    u.tx_train = l.at("tx_train").get<std::uint64_t>();
    u.tx_state = l.at("tx_state").get<std::uint64_t>();
    u.tx_ctrl = l.at("tx_ctrl").get<std::uint64_t>();
    u.busy_ns = l.at("busy_ns").get<rt::Nanos>();
    m.links.push_back(u);
  }
  return m;
}

void Sink::header(std::string_view mode, std::uint64_t seed) {
  if (!out_) return;
  *out_ << json{{"kind", "schema"}, {"v", kSchemaVersion},
                {"mode", mode}, {"seed", seed}}
               .dump()
        << '\n';
}

void Sink::event(rt::Nanos at, std::string_view kind, json fields) {
  if (!out_) return;
  fields["t"] = at;
  fields["kind"] = kind;
  *out_ << fields.dump() << '\n';
}

}  // namespace ftsim::metrics
