// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Control-plane wire format, shared by the simulated and socket backends.
//
// Frame layout, all integers little-endian:
//   u32 length   remaining bytes after this field
//   u16 version  kWireVersion
//   u8  type     MsgType
//   ...          type-specific body
// Strings and vectors are length-prefixed (u32 count).  Unknown types and
// truncated bodies decode to ProtocolError.  docs/wire_protocol.md holds
// the field-by-field reference and golden frames.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ftsim/domain.hpp"
#include "ftsim/transport.hpp"

namespace ftsim::wire {

constexpr std::uint16_t kWireVersion = 1;

enum class MsgType : std::uint8_t {
  Register = 1,
  RegisterAck = 2,
  Heartbeat = 3,
  IndexAssign = 4,
  CkptRecord = 5,
  FailureNotice = 6,
  BackupOrder = 7,
  StateForward = 8,
  EpochOpen = 9,
  RendezvousPoll = 10,
  RendezvousInfo = 11,
  WorkerExit = 12,
  Resume = 13,
  Alert = 14,
  Ack = 15,
  Ready = 16,
};

// Node kinds announced at registration.
enum class NodeKind : std::uint8_t { Agent = 0, Controller = 1, DataServer = 2 };

struct Register {
  std::uint32_t node = 0;
  NodeKind kind = NodeKind::Agent;
  std::uint16_t slots = 0;       // hostable worker slots
  std::uint64_t incarnation = 0; // distinguishes a substitute on a reused id
  std::uint64_t epoch = 0;       // epoch the pod believes current; 0 = none
};

struct RoleAssignment {
  std::uint16_t local_rank = 0;
  Role role;
};

struct RegisterAck {
  std::uint64_t epoch = 0;
  std::uint64_t start_iteration = 0;
  std::vector<RoleAssignment> assignments;
};

struct Heartbeat {
  std::uint32_t node = 0;
  std::uint64_t seq = 0;
  std::uint64_t iteration = 0;  // lowest iteration among hosted workers
  std::int64_t sent_at_ns = 0;
};

// Data partition parameters; loaders derive every TID's index range from
// these, so no per-iteration messages are needed.
struct IndexAssign {
  std::uint64_t start_iteration = 0;
  std::uint64_t base_index = 0;      // first index of start_iteration
  std::uint32_t per_column = 0;      // items per dp column per iteration
  std::uint32_t columns = 0;         // live dp columns
};

struct CkptRecord {
  std::uint32_t node = 0;
  Role role;
  std::uint64_t iteration = 0;
  std::uint64_t epoch = 0;  // guards against records delayed across a failover
};

struct FailureNotice {
  std::uint64_t epoch = 0;     // epoch being torn down
  std::uint64_t notice_id = 0;
  std::uint8_t reason = 0;     // 0 = heartbeat loss, 1 = reported exit
  std::vector<std::uint32_t> failed_nodes;
  std::vector<Role> failed_roles;
};

struct BackupOrder {
  std::uint64_t target_iteration = 0;
  Role role;                // addressed dp-rank-0 worker
  std::uint8_t kinds = 0;   // bit 0 weights, bit 1 optimizer
};

// Instruction to the holder of a neighbor buffer: stream the origin's
// unique state at `iteration` to `dest_node` as STATE traffic.
struct StateForward {
  Role origin;              // failed role the piece will rebuild
  std::uint64_t iteration = 0;
  std::uint32_t dest_node = 0;
  std::uint8_t part = 0;    // 0 = held neighbor piece, 1 = live redundant state
  Role source;              // worker to read from when part = 1
};

struct EpochOpen {
  std::uint64_t epoch = 0;
  std::uint64_t start_iteration = 0;
  std::vector<RoleAssignment> assignments;  // this node's workers
  IndexAssign indices;
  std::uint8_t restore = 0;  // 0 = fresh state, 1 = ring pieces, 2 = fallback round
};

struct RendezvousPoll {
  std::uint64_t epoch = 0;
  Role self;
  std::uint32_t node = 0;        // where `self` runs; fills the slot table
  std::uint16_t local_rank = 0;
  std::vector<Role> want;
};

struct PeerLocation {
  Role role;
  std::uint32_t node = 0;
  std::uint16_t local_rank = 0;
};

struct RendezvousInfo {
  std::uint64_t epoch = 0;
  bool complete = false;  // every requested peer resolved
  std::vector<PeerLocation> peers;
};

struct WorkerExit {
  std::uint32_t node = 0;
  Role role;
  std::uint64_t final_iteration = 0;
  std::uint8_t reason = 0;  // 0 = target reached, 1 = software failure
};

struct Resume {
  std::uint64_t epoch = 0;
  std::uint64_t iteration = 0;
};

struct Alert {
  std::uint8_t code = 0;
  std::string text;
};

struct Ack {
  std::uint8_t of_type = 0;
  std::uint64_t seq = 0;
  bool ok = true;
  std::string text;
};

struct Ready {
  std::uint32_t node = 0;
  std::uint64_t epoch = 0;
  std::uint64_t iteration = 0;
};

using AnyMsg =
    std::variant<Register, RegisterAck, Heartbeat, IndexAssign, CkptRecord,
                 FailureNotice, BackupOrder, StateForward, EpochOpen,
                 RendezvousPoll, RendezvousInfo, WorkerExit, Resume, Alert,
                 Ack, Ready>;

MsgType type_of(const AnyMsg& m);
const char* type_name(MsgType t);

std::vector<std::uint8_t> encode(const AnyMsg& m);
// Decodes one complete frame (including the length prefix).
AnyMsg decode(const std::vector<std::uint8_t>& frame);

// Streaming support for the socket backend: returns the total frame size
// (prefix included) once the length field is available, 0 otherwise.
std::size_t frame_size(const std::uint8_t* data, std::size_t len);

}  // namespace ftsim::wire
