// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0

#include "ftsim/scenario.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ftsim::scenario {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

// Cuts a trailing comment, honouring quotes so '#' inside a string stays.
std::string_view strip_comment(std::string_view s, int line) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\' && in_str) fail(line, "escape sequences are not supported");
    if (c == '"') in_str = !in_str;
    else if (c == '#' && !in_str) return s.substr(0, i);
  }
  if (in_str) fail(line, "unterminated string");
  return s;
}

struct Value {
  enum class Type { Int, Float, Bool, Str, IntArray } type = Type::Int;
  std::int64_t i = 0;
  double f = 0.0;
  bool b = false;
  std::string s;
  std::vector<std::int64_t> arr;
};

std::int64_t parse_int(std::string_view t, int line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    fail(line, "bad integer '" + std::string(t) + "'");
  return v;
}

Value parse_value(std::string_view t, int line) {
  Value v;
  if (t.empty()) fail(line, "missing value");
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"') fail(line, "unterminated string");
    v.type = Value::Type::Str;
    v.s = std::string(t.substr(1, t.size() - 2));
    if (v.s.find('"') != std::string::npos) fail(line, "stray quote in string");
    return v;
  }
  if (t == "true" || t == "false") {
    v.type = Value::Type::Bool;
    v.b = (t == "true");
    return v;
  }
  if (t.front() == '[') {
    if (t.back() != ']') fail(line, "unterminated array");
    v.type = Value::Type::IntArray;
    std::string_view body = trim(t.substr(1, t.size() - 2));
    while (!body.empty()) {
      auto comma = body.find(',');
      std::string_view item = trim(body.substr(0, comma));
      if (item.empty()) fail(line, "empty array element");
      v.arr.push_back(parse_int(item, line));
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
      if (body.empty()) fail(line, "trailing comma in array");
    }
    return v;
  }
  // A bare number: integer unless it needs a decimal point or exponent.
  if (t.find_first_of(".eE") == std::string_view::npos &&
      t.find_first_not_of("+-0123456789") == std::string_view::npos) {
    v.type = Value::Type::Int;
    v.i = parse_int(t, line);
    return v;
  }
  double d = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
  if (ec != std::errc{} || p != t.data() + t.size())
    fail(line, "bad value '" + std::string(t) + "'");
  v.type = Value::Type::Float;
  v.f = d;
  return v;
}

double want_number(const Value& v, const std::string& key, int line) {
  if (v.type == Value::Type::Float) return v.f;
  if (v.type == Value::Type::Int) return static_cast<double>(v.i);
  fail(line, key + " expects a number");
}

std::uint64_t want_u64(const Value& v, const std::string& key, int line) {
  if (v.type != Value::Type::Int) fail(line, key + " expects an integer");
  if (v.i < 0) fail(line, key + " must be non-negative");
  return static_cast<std::uint64_t>(v.i);
}

std::uint32_t want_u32(const Value& v, const std::string& key, int line) {
  std::uint64_t u = want_u64(v, key, line);
  if (u > std::numeric_limits<std::uint32_t>::max())
    fail(line, key + " is out of range");
  return static_cast<std::uint32_t>(u);
}

bool want_bool(const Value& v, const std::string& key, int line) {
  if (v.type != Value::Type::Bool) fail(line, key + " expects true or false");
  return v.b;
}

std::string want_str(const Value& v, const std::string& key, int line) {
  if (v.type != Value::Type::Str) fail(line, key + " expects a string");
  return v.s;
}

struct ParseState {
  Scenario sc;
  bool links_seen = false;
  bool num_nodes_set = false;
  bool pod_creation_set = false;
  bool dep_install_set = false;
};

void set_cluster(ParseState& st, const std::string& key, const Value& v, int line) {
  ClusterSpec& c = st.sc.cluster;
  if (key == "num_nodes") { c.num_nodes = want_u32(v, key, line); st.num_nodes_set = true; }
  else if (key == "gpus_per_node") c.gpus_per_node = want_u32(v, key, line);
  else if (key == "data_parallel") c.data_parallel = want_u32(v, key, line);
  else if (key == "pipeline_parallel") c.pipeline_parallel = want_u32(v, key, line);
  else if (key == "tensor_parallel") c.tensor_parallel = want_u32(v, key, line);
  else if (key == "gpu_mtbf_hours") c.gpu_mtbf_hours = want_number(v, key, line);
  else if (key == "nic_bw") c.nic_bw = want_number(v, key, line);
  else if (key == "disk_bw") c.disk_bw = want_number(v, key, line);
  else if (key == "compute_flops") c.compute_flops = want_number(v, key, line);
  else if (key == "seq_len") c.seq_len = want_u32(v, key, line);
  else if (key == "batch_size") c.batch_size = want_u32(v, key, line);
  else if (key == "params_per_device") c.params_per_device = want_u64(v, key, line);
  else if (key == "ckpt_interval_hours") c.ckpt_interval_hours = want_number(v, key, line);
  else if (key == "preload_depth") c.preload_depth = want_u32(v, key, line);
  else if (key == "distributed_optimizer") c.distributed_optimizer = want_bool(v, key, line);
  else fail(line, "unknown [cluster] key '" + key + "'");
}

void set_mode(ParseState& st, const std::string& key, const Value& v, int line) {
  ModeConfig& m = st.sc.mode;
  if (key == "name") m.name = want_str(v, key, line);
  else if (key == "heartbeat_interval_s") m.heartbeat_interval_s = want_number(v, key, line);
  else if (key == "miss_threshold") m.miss_threshold = want_u32(v, key, line);
  else if (key == "baseline_timeout_s") m.baseline_timeout_s = want_number(v, key, line);
  else if (key == "pod_creation_s") { m.pod_creation_s = want_number(v, key, line); st.pod_creation_set = true; }
  else if (key == "dependency_install_s") { m.dependency_install_s = want_number(v, key, line); st.dep_install_set = true; }
  else if (key == "fallback_interval") m.fallback_interval = want_u64(v, key, line);
  else if (key == "target_iterations") m.target_iterations = want_u64(v, key, line);
  else if (key == "time_compression") m.time_compression = want_number(v, key, line);
  else if (key == "seed") m.seed = want_u64(v, key, line);
  else if (key == "checkpointing") m.checkpointing = want_bool(v, key, line);
  else if (key == "sync_ckpt_interval") m.sync_ckpt_interval = want_u64(v, key, line);
  else if (key == "synthetic_senders") m.synthetic_senders = want_u64(v, key, line);
  else if (key == "run_seconds") m.run_seconds = want_number(v, key, line);
  else fail(line, "unknown [mode] key '" + key + "'");
}

void set_links(ParseState& st, const std::string& key, const Value& v, int line) {
  net::LinkModel& l = st.sc.links;
  if (key == "bandwidth") l.bandwidth = want_number(v, key, line);
  else if (key == "latency_s") l.latency_s = want_number(v, key, line);
  else if (key == "chunk_bytes") l.chunk_bytes = want_u32(v, key, line);
  else fail(line, "unknown [links] key '" + key + "'");
}

EventKind parse_kind(const std::string& s, int line) {
  if (s == "worker_crash") return EventKind::WorkerCrash;
  if (s == "node_crash") return EventKind::NodeCrash;
  if (s == "node_pair_crash") return EventKind::NodePairCrash;
  if (s == "healthy_restart") return EventKind::HealthyRestart;
  fail(line, "unknown event kind '" + s + "'");
}

void set_event(ScenarioEvent& e, const std::string& key, const Value& v, int line) {
  if (key == "kind") e.kind = parse_kind(want_str(v, key, line), line);
  else if (key == "at_iteration") e.at_iteration = want_u64(v, key, line);
  else if (key == "at_seconds") e.at_seconds = want_number(v, key, line);
  else if (key == "nodes") {
    if (v.type != Value::Type::IntArray) fail(line, "nodes expects an array");
    for (std::int64_t n : v.arr) {
      if (n < 0) fail(line, "nodes must be non-negative");
      e.nodes.push_back(static_cast<std::uint32_t>(n));
    }
  } else if (key == "role") {
    try {
      e.role = parse_role(want_str(v, key, line));
    } catch (const ParseError& pe) {
      fail(line, pe.what());
    }
  } else fail(line, "unknown [[events]] key '" + key + "'");
}

}  // namespace

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::WorkerCrash: return "worker_crash";
    case EventKind::NodeCrash: return "node_crash";
    case EventKind::NodePairCrash: return "node_pair_crash";
    case EventKind::HealthyRestart: return "healthy_restart";
  }
  return "?";
}

Role parse_role(std::string_view text) {
  auto num_after = [&](char tag, std::string_view& rest) -> std::uint16_t {
    if (rest.empty() || rest.front() != tag)
      throw ParseError("bad role '" + std::string(text) + "', expected dXpYtZ");
    rest.remove_prefix(1);
    std::uint16_t v = 0;
    auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (ec != std::errc{} || p == rest.data())
      throw ParseError("bad role '" + std::string(text) + "', expected dXpYtZ");
    rest.remove_prefix(static_cast<std::size_t>(p - rest.data()));
    return v;
  };
  std::string_view rest = text;
  Role r;
  r.dp = num_after('d', rest);
  r.pp = num_after('p', rest);
  r.tp = num_after('t', rest);
  if (!rest.empty())
    throw ParseError("bad role '" + std::string(text) + "', expected dXpYtZ");
  return r;
}

Scenario parse_scenario(std::string_view text) {
  enum class Section { None, Cluster, Mode, Links, Event };
  ParseState st;
  Section sec = Section::None;
  std::set<std::string> seen;  // keys of the current section or event

  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos
                                                ? std::string_view::npos
                                                : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line;

    std::string_view s = trim(strip_comment(raw, line));
    if (s.empty()) continue;

    if (s.front() == '[') {
      seen.clear();
      if (s == "[[events]]") {
        sec = Section::Event;
        st.sc.events.emplace_back();
        continue;
      }
      if (s == "[cluster]") sec = Section::Cluster;
      else if (s == "[mode]") sec = Section::Mode;
      else if (s == "[links]") { sec = Section::Links; st.links_seen = true; }
      else fail(line, "unknown section " + std::string(s));
      continue;
    }

    auto eq = s.find('=');
    if (eq == std::string_view::npos) fail(line, "expected key = value");
    std::string key(trim(s.substr(0, eq)));
    if (key.empty()) fail(line, "missing key");
    Value v = parse_value(trim(s.substr(eq + 1)), line);

    if (!seen.insert(key).second) fail(line, "duplicate key '" + key + "'");
    switch (sec) {
      case Section::None: fail(line, "key outside any section");
      case Section::Cluster: set_cluster(st, key, v, line); break;
      case Section::Mode: set_mode(st, key, v, line); break;
      case Section::Links: set_links(st, key, v, line); break;
      case Section::Event: set_event(st.sc.events.back(), key, v, line); break;
    }
  }

  // Mode-dependent bring-up defaults: the cold path pays measured pod
  // creation and dependency install costs unless the file overrides them.
  if (st.sc.mode.name.rfind("baseline", 0) == 0) {
    if (!st.pod_creation_set) st.sc.mode.pod_creation_s = 392.0;
    if (!st.dep_install_set) st.sc.mode.dependency_install_s = 421.0;
  }
  if (!st.links_seen) st.sc.links.bandwidth = st.sc.cluster.nic_bw;
  if (!st.num_nodes_set) {
    const ClusterSpec& c = st.sc.cluster;
    std::uint64_t world = std::uint64_t(c.data_parallel) * c.pipeline_parallel *
                          c.tensor_parallel;
    if (c.gpus_per_node > 0 && world % c.gpus_per_node == 0)
      st.sc.cluster.num_nodes = static_cast<std::uint32_t>(world / c.gpus_per_node);
  }
  return st.sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::vector<std::string> validate(const Scenario& sc) {
  std::vector<std::string> out;
  // Sender-storm runs exercise only the control plane; the worker grid and
  // anything hanging off it does not apply.
  if (sc.mode.synthetic_senders == 0) {
    for (const std::string& p : validate_spec(sc.cluster)) out.push_back("cluster: " + p);

    const std::uint32_t world = sc.cluster.world_size();
    if (world > 0 && sc.cluster.batch_size % world != 0)
      out.push_back("cluster: batch_size must divide evenly over " +
                    std::to_string(world) + " workers");
  }

  const ModeConfig& m = sc.mode;
  if (m.name != "fast" && m.name != "baseline_timeout" && m.name != "baseline_sync_ckpt")
    out.push_back("mode: unknown name '" + m.name + "'");
  if (m.synthetic_senders > 0) {
    if (m.run_seconds <= 0)
      out.push_back("mode: synthetic_senders needs a positive run_seconds");
    if (!sc.events.empty())
      out.push_back("events: not supported with synthetic_senders");
  } else if (m.target_iterations == 0) {
    out.push_back("mode: target_iterations is required");
  }
  if (m.heartbeat_interval_s <= 0) out.push_back("mode: heartbeat_interval_s must be positive");
  if (m.miss_threshold == 0) out.push_back("mode: miss_threshold must be at least 1");
  if (m.baseline_timeout_s <= 0) out.push_back("mode: baseline_timeout_s must be positive");
  if (m.time_compression <= 0) out.push_back("mode: time_compression must be positive");
  if (m.pod_creation_s < 0) out.push_back("mode: pod_creation_s must not be negative");
  if (m.dependency_install_s < 0) out.push_back("mode: dependency_install_s must not be negative");
  if (m.name == "baseline_sync_ckpt" && m.sync_ckpt_interval == 0)
    out.push_back("mode: sync_ckpt_interval must be positive in baseline_sync_ckpt");

  if (sc.links.bandwidth <= 0) out.push_back("links: bandwidth must be positive");
  if (sc.links.latency_s < 0) out.push_back("links: latency_s must not be negative");
  if (sc.links.chunk_bytes == 0) out.push_back("links: chunk_bytes must be positive");

  for (std::size_t i = 0; i < sc.events.size(); ++i) {
    const ScenarioEvent& e = sc.events[i];
    const std::string tag = "event " + std::to_string(i) + " (" +
                            kind_name(e.kind) + "): ";
    if (e.at_iteration.has_value() == e.at_seconds.has_value())
      out.push_back(tag + "exactly one of at_iteration and at_seconds is required");
    if (e.at_iteration && *e.at_iteration == 0)
      out.push_back(tag + "at_iteration must be at least 1");
    if (e.at_iteration && m.target_iterations > 0 &&
        *e.at_iteration >= m.target_iterations)
      out.push_back(tag + "at_iteration is past the end of the run");
    if (e.at_seconds && *e.at_seconds < 0)
      out.push_back(tag + "at_seconds must not be negative");

    std::size_t want_nodes = 0;
    switch (e.kind) {
      case EventKind::WorkerCrash:
        if (!e.role) out.push_back(tag + "role is required");
        break;
      case EventKind::NodeCrash: want_nodes = 1; break;
      case EventKind::NodePairCrash: want_nodes = 2; break;
      case EventKind::HealthyRestart: break;
    }
    if (e.nodes.size() != want_nodes)
      out.push_back(tag + "expects " + std::to_string(want_nodes) +
                    " target node(s), got " + std::to_string(e.nodes.size()));
    if (e.kind != EventKind::WorkerCrash && e.role)
      out.push_back(tag + "role only applies to worker_crash");
    if (e.kind == EventKind::NodePairCrash && e.nodes.size() == 2 &&
        e.nodes[0] == e.nodes[1])
      out.push_back(tag + "the two target nodes must differ");
    for (std::uint32_t n : e.nodes)
      if (n >= sc.cluster.num_nodes)
        out.push_back(tag + "node " + std::to_string(n) + " is outside the cluster");
    if (e.role) {
      const Role& r = *e.role;
      if (r.dp >= sc.cluster.data_parallel || r.pp >= sc.cluster.pipeline_parallel ||
          r.tp >= sc.cluster.tensor_parallel)
        out.push_back(tag + "role " + r.str() + " is outside the grid");
    }
  }
  return out;
}

}  // namespace ftsim::scenario
