// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
//
// Wire codec: golden frames, full round-trip coverage, malformed input.
#include <doctest.h>

#include <cstdint>
#include <vector>

#include "ftsim/hash.hpp"
#include "ftsim/wire.hpp"

using namespace ftsim;
using namespace ftsim::wire;

namespace {

// Every variant alternative, with non-default field values.
std::vector<AnyMsg> sample_messages() {
  std::vector<AnyMsg> v;
  v.push_back(Register{7, NodeKind::Agent, 8, 3, 12});
  v.push_back(RegisterAck{
      2, 100, {{0, Role{0, 1, 0}}, {1, Role{0, 1, 1}}}});
  v.push_back(Heartbeat{7, 41, 99, 1234567890123LL});
  v.push_back(IndexAssign{100, 51200, 64, 4});
  v.push_back(CkptRecord{3, Role{1, 0, 1}, 57, 4});
  v.push_back(FailureNotice{
      2, 5, 0, {3, 4}, {Role{1, 0, 0}, Role{1, 0, 1}}});
  v.push_back(BackupOrder{56, Role{2, 1, 0}, 0x3});
  v.push_back(StateForward{Role{2, 1, 0}, 56, 9, 1, Role{0, 1, 0}});
  v.push_back(EpochOpen{3,
                        56,
                        {{0, Role{2, 1, 0}}},
                        IndexAssign{56, 28672, 64, 4},
                        1});
  v.push_back(RendezvousPoll{
      3, Role{0, 0, 0}, 7, 1, {Role{1, 0, 0}, Role{0, 1, 0}}});
  v.push_back(RendezvousInfo{3, true, {{Role{1, 0, 0}, 4, 1}}});
  v.push_back(WorkerExit{5, Role{0, 2, 1}, 200, 0});
  v.push_back(Resume{3, 56});
  v.push_back(Alert{2, "disk degraded"});
  v.push_back(Ack{3, 41, true, ""});
  v.push_back(Ready{5, 3, 56});
  return v;
}

}  // namespace

TEST_CASE("frame layout is little-endian with a patched length prefix") {
  // HEARTBEAT node=7 seq=41 iteration=99 sent_at=0x0102030405060708.
  const auto f = encode(Heartbeat{7, 41, 99, 0x0102030405060708LL});
  const std::vector<std::uint8_t> expect = {
      0x1f, 0x00, 0x00, 0x00,              // len = 31 bytes after prefix
      0x01, 0x00,                          // version 1
      0x03,                                // type HEARTBEAT
      0x07, 0x00, 0x00, 0x00,              // node
      0x29, 0, 0, 0, 0, 0, 0, 0,           // seq
      0x63, 0, 0, 0, 0, 0, 0, 0,           // iteration
      0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01};
  CHECK(f == expect);
}

TEST_CASE("golden frame: role assignment vector encoding") {
  const auto f = encode(RegisterAck{2, 100, {{1, Role{3, 2, 1}}}});
  const std::vector<std::uint8_t> expect = {
      0x1f, 0x00, 0x00, 0x00,
      0x01, 0x00,
      0x02,                                // type REGISTER_ACK
      0x02, 0, 0, 0, 0, 0, 0, 0,           // epoch
      0x64, 0, 0, 0, 0, 0, 0, 0,           // start_iteration
      0x01, 0x00, 0x00, 0x00,              // 1 assignment
      0x01, 0x00,                          // local_rank
      0x03, 0x00, 0x02, 0x00, 0x01, 0x00};  // role d3 p2 t1
  CHECK(f == expect);
}

TEST_CASE("golden frame: string payload is u32-length prefixed") {
  const auto f = encode(Alert{9, "hi"});
  const std::vector<std::uint8_t> expect = {
      0x0a, 0x00, 0x00, 0x00,
      0x01, 0x00,
      0x0e,                    // type ALERT
      0x09,                    // code
      0x02, 0x00, 0x00, 0x00,  // text length
      'h',  'i'};
  CHECK(f == expect);
}

TEST_CASE("every message type round-trips") {
  for (const auto& m : sample_messages()) {
    const auto f = encode(m);
    const auto back = decode(f);
    CHECK(type_of(back) == type_of(m));
    CHECK(encode(back) == f);  // re-encode reproduces the exact bytes
  }
}

TEST_CASE("type_of maps variant index to the enum") {
  CHECK(type_of(Register{}) == MsgType::Register);
  CHECK(type_of(Ready{}) == MsgType::Ready);
  CHECK(std::string(type_name(MsgType::Heartbeat)) == "HEARTBEAT");
  CHECK(std::string(type_name(MsgType::EpochOpen)) == "EPOCH_OPEN");
}

TEST_CASE("frame_size streams partial reads") {
  const auto f = encode(Resume{3, 56});
  CHECK(frame_size(f.data(), 3) == 0);          // length not yet available
  CHECK(frame_size(f.data(), 4) == f.size());
  CHECK(frame_size(f.data(), f.size()) == f.size());
}

TEST_CASE("decode rejects malformed input") {
  auto f = encode(Heartbeat{7, 41, 99, 0});

  SUBCASE("truncated body") {
    f.resize(f.size() - 3);
    f[0] = static_cast<std::uint8_t>(f.size() - 4);
    CHECK_THROWS_AS(decode(f), net::ProtocolError);
  }
  SUBCASE("length field disagrees with buffer") {
    f[0] += 1;
    CHECK_THROWS_AS(decode(f), net::ProtocolError);
  }
  SUBCASE("unknown version") {
    f[4] = 0x7f;
    CHECK_THROWS_AS(decode(f), net::ProtocolError);
  }
  SUBCASE("unknown message type") {
    f[6] = 0xee;
    CHECK_THROWS_AS(decode(f), net::ProtocolError);
  }
  SUBCASE("trailing garbage") {
    f.push_back(0);
    f[0] += 1;
    CHECK_THROWS_AS(decode(f), net::ProtocolError);
  }
  SUBCASE("too short for a header") {
    CHECK_THROWS_AS(decode(std::vector<std::uint8_t>{1, 2, 3}), net::ProtocolError);
  }
  SUBCASE("hostile element count does not allocate") {
    // A vector count of ~4 billion must be rejected before reserve().
    std::vector<std::uint8_t> evil = {
        0x13, 0x00, 0x00, 0x00,
        0x01, 0x00,
        0x06,                                // FAILURE_NOTICE
        0, 0, 0, 0, 0, 0, 0, 0,              // epoch
        0, 0, 0, 0, 0, 0, 0, 0,              // notice_id (only 8 of 8)
    };
    evil.push_back(0);                        // reason
    evil.push_back(0xff);                     // node count = 0xffffffff
    evil.push_back(0xff);
    evil.push_back(0xff);
    evil.push_back(0xff);
    evil[0] = static_cast<std::uint8_t>(evil.size() - 4);
    CHECK_THROWS_AS(decode(evil), net::ProtocolError);
  }
}

TEST_CASE("empty vectors and strings are legal") {
  const auto f = encode(FailureNotice{1, 1, 1, {}, {}});
  const auto back = std::get<FailureNotice>(decode(f));
  CHECK(back.failed_nodes.empty());
  CHECK(back.failed_roles.empty());

  const auto g = encode(Ack{1, 0, false, ""});
  CHECK(std::get<Ack>(decode(g)).text.empty());
}

TEST_CASE("field values survive a round trip exactly") {
  EpochOpen in;
  in.epoch = 0xdeadbeefcafeULL;
  in.start_iteration = 777;
  in.assignments = {{0, Role{0, 0, 0}}, {7, Role{3, 3, 1}}};
  in.indices = IndexAssign{777, 198912, 128, 4};
  in.restore = 2;
  const auto out = std::get<EpochOpen>(decode(encode(in)));
  CHECK(out.epoch == in.epoch);
  CHECK(out.start_iteration == in.start_iteration);
  REQUIRE(out.assignments.size() == 2);
  CHECK(out.assignments[1].local_rank == 7);
  CHECK(out.assignments[1].role == Role{3, 3, 1});
  CHECK(out.indices.base_index == 198912);
  CHECK(out.restore == 2);
  CHECK(out.indices.per_column == 128);
  CHECK(out.indices.columns == 4);

  Heartbeat hb{0xffffffffu, ~0ULL, ~0ULL, -1};
  const auto hb2 = std::get<Heartbeat>(decode(encode(hb)));
  CHECK(hb2.node == hb.node);
  CHECK(hb2.seq == hb.seq);
  CHECK(hb2.sent_at_ns == -1);
}
