// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "ftsim/metrics.hpp"

using namespace ftsim;

namespace {

metrics::RunMetrics sample() {
  metrics::RunMetrics m;
  m.mode = "fast";
  m.seed = 7;
  m.time_compression = 2.0;
  m.target_iterations = 100;
  m.iterations_done = 100;
  m.completed = true;
  m.sim_duration = 123456789;
  m.iteration_count = 800;
  m.iteration_ns_total = 952000000;
  m.data_stall_ns_total = 1200;
  m.backup_bytes = 240000000;
  m.fallback_rounds = 2;
  m.heartbeats = 480;
  m.sweeps = 120;
  metrics::RecoveryReport r;
  r.notice_id = 2;
  r.restore = "ring";
  r.resume_iteration = 10;
  r.breakdown = {3200000000, 7000000000, 0, 1500000000, 2100000000, 11000000000};
  m.recoveries.push_back(r);
  m.links.push_back({0, 1000, 2000, 30, 555});
  return m;
}

}  // namespace

TEST_CASE("summaries round-trip and stay byte-stable") {
  auto m = sample();
  std::ostringstream a, b;
  metrics::write_summary(a, m);
  metrics::write_summary(b, m);
  CHECK(a.str() == b.str());
  CHECK(a.str().back() == '\n');

  std::istringstream in(a.str());
  auto back = metrics::read_summary(in);
  std::ostringstream c;
  metrics::write_summary(c, back);
  CHECK(c.str() == a.str());

  CHECK(back.mode == "fast");
  CHECK(back.recoveries.size() == 1);
  CHECK(back.recoveries[0].breakdown.total == 11000000000);
  CHECK(back.links[0].tx_state == 2000);
}

TEST_CASE("summary carries schema version and derived means") {
  auto j = metrics::to_json(sample());
  CHECK(j["schema"] == metrics::kSchemaVersion);
  CHECK(j["mean_iteration_ns"] == 952000000 / 800);
  // keys come out sorted, so the byte layout is fixed
  std::string dumped = j.dump();
  CHECK(dumped.find("\"schema\"") != std::string::npos);
  CHECK(dumped.find("\"backup_bytes\"") < dumped.find("\"completed\""));
}

TEST_CASE("bad summaries are refused") {
  std::istringstream junk("not json at all");
  CHECK_THROWS_AS(metrics::read_summary(junk), std::runtime_error);
  std::istringstream wrong("{\"schema\": 999}");
  CHECK_THROWS_AS(metrics::read_summary(wrong), std::runtime_error);
  std::istringstream noschema("{\"mode\": \"fast\"}");
  CHECK_THROWS_AS(metrics::read_summary(noschema), std::runtime_error);
}

TEST_CASE("the event stream is line-oriented with a header") {
  std::ostringstream out;
  metrics::Sink sink(&out);
  sink.header("fast", 7);
  sink.event(1500, "iteration", {{"role", "d0p0t0"}, {"n", 3}, {"ns", 42}});
  sink.event(2500, "failure", {{"event", "node_crash"}, {"nodes", {1}}});

  std::istringstream lines(out.str());
  std::string l1, l2, l3;
  REQUIRE(std::getline(lines, l1));
  REQUIRE(std::getline(lines, l2));
  REQUIRE(std::getline(lines, l3));
  auto h = nlohmann::json::parse(l1);
  CHECK(h["kind"] == "schema");
  CHECK(h["v"] == metrics::kSchemaVersion);
  CHECK(h["seed"] == 7);
  auto e1 = nlohmann::json::parse(l2);
  CHECK(e1["kind"] == "iteration");
  CHECK(e1["t"] == 1500);
  CHECK(e1["n"] == 3);
  auto e2 = nlohmann::json::parse(l3);
  CHECK(e2["nodes"][0] == 1);

  metrics::Sink null_sink(nullptr);
  null_sink.header("fast", 1);
  null_sink.event(1, "iteration", {});  // must simply do nothing
}
