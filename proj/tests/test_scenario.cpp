// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "ftsim/scenario.hpp"

using namespace ftsim;
using scenario::EventKind;
using scenario::ParseError;

namespace {

std::string problems_of(const scenario::Scenario& sc) {
  std::string all;
  for (const auto& p : scenario::validate(sc)) {
    all += p;
    all += '\n';
  }
  return all;
}

}  // namespace

TEST_CASE("a full scenario file parses field for field") {
  const char* text = R"(
# adjacent-pair failover probe
[cluster]
num_nodes = 4
gpus_per_node = 2
data_parallel = 4
pipeline_parallel = 1
tensor_parallel = 2
gpu_mtbf_hours = 90000.0
nic_bw = 25e9
disk_bw = 2.5e9
compute_flops = 82.6e12
seq_len = 1024
batch_size = 16
params_per_device = 1000000
ckpt_interval_hours = 0.25
preload_depth = 4
distributed_optimizer = true

[mode]
name = "fast"            # heartbeat detection, ring restore
heartbeat_interval_s = 0.5
miss_threshold = 4
baseline_timeout_s = 300.0
pod_creation_s = 6.0
dependency_install_s = 1.5
fallback_interval = 5
target_iterations = 30
time_compression = 2.0
seed = 7
checkpointing = true
sync_ckpt_interval = 10

[links]
bandwidth = 12.5e9
latency_s = 50e-6
chunk_bytes = 65536

[[events]]
kind = "node_pair_crash"
at_iteration = 12
nodes = [1, 2]

[[events]]
kind = "worker_crash"
at_seconds = 3.5
role = "d3p0t1"
)";
  auto sc = scenario::parse_scenario(text);

  CHECK(sc.cluster.num_nodes == 4);
  CHECK(sc.cluster.gpus_per_node == 2);
  CHECK(sc.cluster.data_parallel == 4);
  CHECK(sc.cluster.pipeline_parallel == 1);
  CHECK(sc.cluster.tensor_parallel == 2);
  CHECK(sc.cluster.gpu_mtbf_hours == doctest::Approx(90000.0));
  CHECK(sc.cluster.nic_bw == doctest::Approx(25e9));
  CHECK(sc.cluster.disk_bw == doctest::Approx(2.5e9));
  CHECK(sc.cluster.compute_flops == doctest::Approx(82.6e12));
  CHECK(sc.cluster.seq_len == 1024);
  CHECK(sc.cluster.batch_size == 16);
  CHECK(sc.cluster.params_per_device == 1000000);
  CHECK(sc.cluster.ckpt_interval_hours == doctest::Approx(0.25));
  CHECK(sc.cluster.preload_depth == 4);
  CHECK(sc.cluster.distributed_optimizer);

  CHECK(sc.mode.name == "fast");
  CHECK(sc.mode.heartbeat_interval_s == doctest::Approx(0.5));
  CHECK(sc.mode.miss_threshold == 4);
  CHECK(sc.mode.baseline_timeout_s == doctest::Approx(300.0));
  CHECK(sc.mode.pod_creation_s == doctest::Approx(6.0));
  CHECK(sc.mode.dependency_install_s == doctest::Approx(1.5));
  CHECK(sc.mode.fallback_interval == 5);
  CHECK(sc.mode.target_iterations == 30);
  CHECK(sc.mode.time_compression == doctest::Approx(2.0));
  CHECK(sc.mode.seed == 7);
  CHECK(sc.mode.checkpointing);
  CHECK(sc.mode.sync_ckpt_interval == 10);

  CHECK(sc.links.bandwidth == doctest::Approx(12.5e9));
  CHECK(sc.links.latency_s == doctest::Approx(50e-6));
  CHECK(sc.links.chunk_bytes == 65536);

  REQUIRE(sc.events.size() == 2);
  CHECK(sc.events[0].kind == EventKind::NodePairCrash);
  REQUIRE(sc.events[0].at_iteration.has_value());
  CHECK(*sc.events[0].at_iteration == 12);
  CHECK_FALSE(sc.events[0].at_seconds.has_value());
  CHECK(sc.events[0].nodes == std::vector<std::uint32_t>{1, 2});
  CHECK(sc.events[1].kind == EventKind::WorkerCrash);
  REQUIRE(sc.events[1].at_seconds.has_value());
  CHECK(*sc.events[1].at_seconds == doctest::Approx(3.5));
  REQUIRE(sc.events[1].role.has_value());
  CHECK(sc.events[1].role->str() == "d3p0t1");

  CHECK(scenario::validate(sc).empty());
}

TEST_CASE("defaults fill in what a file leaves out") {
  SUBCASE("fast mode keeps warm-pool bring-up delays") {
    auto sc = scenario::parse_scenario("[mode]\ntarget_iterations = 5\n");
    CHECK(sc.mode.pod_creation_s == doctest::Approx(7.0));
    CHECK(sc.mode.dependency_install_s == doctest::Approx(0.0));
    CHECK(sc.mode.heartbeat_interval_s == doctest::Approx(1.0));
    CHECK(sc.mode.miss_threshold == 3);
    CHECK(sc.mode.baseline_timeout_s == doctest::Approx(600.0));
    CHECK(sc.mode.fallback_interval == 500);
    CHECK(sc.mode.time_compression == doctest::Approx(1.0));
    CHECK(sc.mode.checkpointing);
  }
  SUBCASE("baseline modes pay cold-start delays unless overridden") {
    auto sc = scenario::parse_scenario(
        "[mode]\nname = \"baseline_timeout\"\ntarget_iterations = 5\n");
    CHECK(sc.mode.pod_creation_s == doctest::Approx(392.0));
    CHECK(sc.mode.dependency_install_s == doctest::Approx(421.0));

    auto sc2 = scenario::parse_scenario(
        "[mode]\nname = \"baseline_sync_ckpt\"\npod_creation_s = 9.0\n"
        "target_iterations = 5\n");
    CHECK(sc2.mode.pod_creation_s == doctest::Approx(9.0));
    CHECK(sc2.mode.dependency_install_s == doctest::Approx(421.0));
  }
  SUBCASE("links follow the cluster NIC when the section is absent") {
    auto sc = scenario::parse_scenario("[cluster]\nnic_bw = 10e9\n");
    CHECK(sc.links.bandwidth == doctest::Approx(10e9));
    auto sc2 = scenario::parse_scenario(
        "[cluster]\nnic_bw = 10e9\n[links]\nlatency_s = 1e-6\n");
    CHECK(sc2.links.bandwidth == doctest::Approx(25e9));  // model default
  }
  SUBCASE("num_nodes derives from the grid when unset") {
    auto sc = scenario::parse_scenario(
        "[cluster]\ndata_parallel = 8\ngpus_per_node = 2\n");
    CHECK(sc.cluster.num_nodes == 4);
    auto sc2 = scenario::parse_scenario(
        "[cluster]\nnum_nodes = 2\ndata_parallel = 8\ngpus_per_node = 2\n");
    CHECK(sc2.cluster.num_nodes == 2);  // explicit value wins, validate flags it
    CHECK_FALSE(scenario::validate(sc2).empty());
  }
}

TEST_CASE("role strings parse and round-trip") {
  Role r = scenario::parse_role("d1p0t2");
  CHECK(r.dp == 1);
  CHECK(r.pp == 0);
  CHECK(r.tp == 2);
  Role big{41, 7, 12};
  CHECK(scenario::parse_role(big.str()) == big);
  for (const char* bad : {"", "d1p0", "d1p0t2x", "p0d1t2", "d-1p0t0", "d1 p0t2"})
    CHECK_THROWS_AS(scenario::parse_role(bad), ParseError);
}

TEST_CASE("structural problems are rejected with a line number") {
  auto line_of = [](const char* text) -> std::string {
    try {
      scenario::parse_scenario(text);
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(line_of("[nope]\n") == "line 1: unknown section [nope]");
  CHECK(line_of("[mode]\nwat = 1\n").find("unknown [mode] key 'wat'") != std::string::npos);
  CHECK(line_of("[cluster]\nwat = 1\n").find("unknown [cluster] key") != std::string::npos);
  CHECK(line_of("[links]\nwat = 1\n").find("unknown [links] key") != std::string::npos);
  CHECK(line_of("[[events]]\nwat = 1\n").find("unknown [[events]] key") != std::string::npos);
  CHECK(line_of("[mode]\nseed = 1\nseed = 2\n").find("line 3: duplicate key") != std::string::npos);
  CHECK(line_of("seed = 1\n").find("outside any section") != std::string::npos);
  CHECK(line_of("[mode]\njust words\n").find("expected key = value") != std::string::npos);
  CHECK(line_of("[mode]\nseed = abc\n").find("bad value") != std::string::npos);
  CHECK(line_of("[mode]\nname = \"open\n").find("unterminated string") != std::string::npos);
  CHECK(line_of("[mode]\nname = \"a\\b\"\n").find("escape sequences") != std::string::npos);
  CHECK(line_of("[mode]\nseed = 2.5\n").find("expects an integer") != std::string::npos);
  CHECK(line_of("[mode]\nmiss_threshold = -1\n").find("non-negative") != std::string::npos);
  CHECK(line_of("[mode]\nname = 3\n").find("expects a string") != std::string::npos);
  CHECK(line_of("[mode]\ncheckpointing = 1\n").find("expects true or false") != std::string::npos);
  CHECK(line_of("[[events]]\nnodes = [1, ]\n").find("trailing comma") != std::string::npos);
  CHECK(line_of("[[events]]\nnodes = 1\n").find("expects an array") != std::string::npos);
  CHECK(line_of("[[events]]\nrole = \"x\"\n").find("bad role") != std::string::npos);

  // A '#' inside a string is content, not a comment.
  auto sc = scenario::parse_scenario("[mode]\nname = \"a#b\"  # real comment\n");
  CHECK(sc.mode.name == "a#b");
}

TEST_CASE("semantic validation catches unrunnable scenarios") {
  const char* base =
      "[cluster]\ndata_parallel = 4\ngpus_per_node = 2\nbatch_size = 16\n"
      "[mode]\ntarget_iterations = 20\n";
  CHECK(scenario::validate(scenario::parse_scenario(base)).empty());

  auto with = [&](const std::string& extra) {
    return problems_of(scenario::parse_scenario(std::string(base) + extra));
  };

  CHECK(problems_of(scenario::parse_scenario("[mode]\nname = \"quick\"\ntarget_iterations = 1\n"))
            .find("unknown name") != std::string::npos);
  CHECK(problems_of(scenario::parse_scenario("[cluster]\n"))
            .find("target_iterations is required") != std::string::npos);
  CHECK(with("heartbeat_interval_s = 0\n").find("heartbeat_interval_s") != std::string::npos);
  CHECK(with("miss_threshold = 0\n").find("miss_threshold") != std::string::npos);
  CHECK(with("time_compression = 0\n").find("time_compression") != std::string::npos);
  CHECK(problems_of(scenario::parse_scenario(
            "[cluster]\ndata_parallel = 3\ngpus_per_node = 1\nnum_nodes = 3\n"
            "batch_size = 16\n[mode]\ntarget_iterations = 1\n"))
            .find("divide evenly") != std::string::npos);
  CHECK(problems_of(scenario::parse_scenario(
            "[mode]\nname = \"baseline_sync_ckpt\"\nsync_ckpt_interval = 0\n"
            "target_iterations = 1\n"))
            .find("sync_ckpt_interval") != std::string::npos);
  CHECK(with("[links]\nbandwidth = 0\n").find("bandwidth") != std::string::npos);
  CHECK(with("[links]\nchunk_bytes = 0\n").find("chunk_bytes") != std::string::npos);

  SUBCASE("event target rules") {
    CHECK(with("[[events]]\nkind = \"node_crash\"\nnodes = [0]\n")
              .find("exactly one of") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"node_crash\"\nat_iteration = 2\nat_seconds = 1.0\nnodes = [0]\n")
              .find("exactly one of") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"node_crash\"\nat_iteration = 0\nnodes = [0]\n")
              .find("at least 1") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"node_crash\"\nat_iteration = 20\nnodes = [0]\n")
              .find("past the end") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"worker_crash\"\nat_iteration = 2\n")
              .find("role is required") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"node_crash\"\nat_iteration = 2\nnodes = [0, 1]\n")
              .find("expects 1 target") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"node_pair_crash\"\nat_iteration = 2\nnodes = [1, 1]\n")
              .find("must differ") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"node_crash\"\nat_iteration = 2\nnodes = [9]\n")
              .find("outside the cluster") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"node_crash\"\nat_iteration = 2\nnodes = [0]\nrole = \"d0p0t0\"\n")
              .find("only applies to worker_crash") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"worker_crash\"\nat_iteration = 2\nrole = \"d9p0t0\"\n")
              .find("outside the grid") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"healthy_restart\"\nat_iteration = 2\nnodes = [0]\n")
              .find("expects 0 target") != std::string::npos);
    CHECK(with("[[events]]\nkind = \"healthy_restart\"\nat_seconds = 5.0\n").empty());
  }
}

TEST_CASE("synthetic sender runs swap iteration targets for a duration") {
  auto sc = scenario::parse_scenario(
      "[mode]\nsynthetic_senders = 32768\nrun_seconds = 10.0\n");
  CHECK(sc.mode.synthetic_senders == 32768);
  CHECK(scenario::validate(sc).empty());
  auto bad = scenario::parse_scenario("[mode]\nsynthetic_senders = 8\n");
  CHECK_FALSE(scenario::validate(bad).empty());
}

TEST_CASE("load_scenario reads files and reports missing ones") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "ftsim-scenario-test";
  fs::create_directories(dir);
  fs::path file = dir / "probe.toml";
  {
    std::ofstream out(file, std::ios::binary);
    out << "[mode]\ntarget_iterations = 3\nseed = 11\n";
  }
  auto sc = scenario::load_scenario(file);
  CHECK(sc.mode.target_iterations == 3);
  CHECK(sc.mode.seed == 11);
  CHECK_THROWS_AS(scenario::load_scenario(dir / "absent.toml"), ParseError);
  fs::remove_all(dir);
}
