// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/wire.hpp"

namespace ftsim::wire {

namespace {

using net::ProtocolError;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void b(bool v) { u8(v ? 1 : 0); }
  void role(const Role& r) {
    u16(r.dp);
    u16(r.pp);
    u16(r.tp);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  template <class T, class F>
  void vec(const std::vector<T>& v, F f) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& e : v) f(e);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i)
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  bool b() { return u8() != 0; }
  Role role() {
    Role r;
    r.dp = u16();
    r.pp = u16();
    r.tp = u16();
    return r;
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_ + at_), n);
    at_ += n;
    return s;
  }
  template <class T, class F>
  std::vector<T> vec(F f) {
    const auto n = u32();
    if (n > n_ - at_) throw ProtocolError("wire: count overruns frame");
    std::vector<T> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(f());
    return v;
  }
  void done() const {
    if (at_ != n_) throw ProtocolError("wire: trailing bytes in frame");
  }

 private:
  void need(std::size_t k) const {
    if (n_ - at_ < k) throw ProtocolError("wire: truncated frame");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(p_[at_ + i]) << (8 * i);
    at_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t at_ = 0;
};

struct EncodeBody {
  Writer& w;
  void operator()(const Register& m) {
    w.u32(m.node);
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.u16(m.slots);
    w.u64(m.incarnation);
    w.u64(m.epoch);
  }
  void operator()(const RegisterAck& m) {
    w.u64(m.epoch);
    w.u64(m.start_iteration);
    w.vec(m.assignments, [&](const RoleAssignment& a) {
      w.u16(a.local_rank);
      w.role(a.role);
    });
  }
  void operator()(const Heartbeat& m) {
    w.u32(m.node);
    w.u64(m.seq);
    w.u64(m.iteration);
    w.i64(m.sent_at_ns);
  }
  void operator()(const IndexAssign& m) {
    w.u64(m.start_iteration);
    w.u64(m.base_index);
    w.u32(m.per_column);
    w.u32(m.columns);
  }
  void operator()(const CkptRecord& m) {
    w.u32(m.node);
    w.role(m.role);
    w.u64(m.iteration);
    w.u64(m.epoch);
  }
  void operator()(const FailureNotice& m) {
    w.u64(m.epoch);
    w.u64(m.notice_id);
    w.u8(m.reason);
    w.vec(m.failed_nodes, [&](std::uint32_t n) { w.u32(n); });
    w.vec(m.failed_roles, [&](const Role& r) { w.role(r); });
  }
  void operator()(const BackupOrder& m) {
    w.u64(m.target_iteration);
    w.role(m.role);
    w.u8(m.kinds);
  }
  void operator()(const StateForward& m) {
    w.role(m.origin);
    w.u64(m.iteration);
    w.u32(m.dest_node);
    w.u8(m.part);
    w.role(m.source);
  }
  void operator()(const EpochOpen& m) {
    w.u64(m.epoch);
    w.u64(m.start_iteration);
    w.vec(m.assignments, [&](const RoleAssignment& a) {
      w.u16(a.local_rank);
      w.role(a.role);
    });
    w.u64(m.indices.start_iteration);
    w.u64(m.indices.base_index);
    w.u32(m.indices.per_column);
    w.u32(m.indices.columns);
    w.u8(m.restore);
  }
  void operator()(const RendezvousPoll& m) {
    w.u64(m.epoch);
    w.role(m.self);
    w.u32(m.node);
    w.u16(m.local_rank);
    w.vec(m.want, [&](const Role& r) { w.role(r); });
  }
  void operator()(const RendezvousInfo& m) {
    w.u64(m.epoch);
    w.b(m.complete);
    w.vec(m.peers, [&](const PeerLocation& p) {
      w.role(p.role);
      w.u32(p.node);
      w.u16(p.local_rank);
    });
  }
  void operator()(const WorkerExit& m) {
    w.u32(m.node);
    w.role(m.role);
    w.u64(m.final_iteration);
    w.u8(m.reason);
  }
  void operator()(const Resume& m) {
    w.u64(m.epoch);
    w.u64(m.iteration);
  }
  void operator()(const Alert& m) {
    w.u8(m.code);
    w.str(m.text);
  }
  void operator()(const Ack& m) {
    w.u8(m.of_type);
    w.u64(m.seq);
    w.b(m.ok);
    w.str(m.text);
  }
  void operator()(const Ready& m) {
    w.u32(m.node);
    w.u64(m.epoch);
    w.u64(m.iteration);
  }
};

AnyMsg decode_body(MsgType t, Reader& r) {
  switch (t) {
    case MsgType::Register: {
      Register m;
      m.node = r.u32();
      m.kind = static_cast<NodeKind>(r.u8());
      m.slots = r.u16();
      m.incarnation = r.u64();
      m.epoch = r.u64();
      return m;
    }
    case MsgType::RegisterAck: {
      RegisterAck m;
      m.epoch = r.u64();
      m.start_iteration = r.u64();
      m.assignments = r.vec<RoleAssignment>([&] {
        RoleAssignment a;
        a.local_rank = r.u16();
        a.role = r.role();
        return a;
      });
      return m;
    }
    case MsgType::Heartbeat: {
      Heartbeat m;
      m.node = r.u32();
      m.seq = r.u64();
      m.iteration = r.u64();
      m.sent_at_ns = r.i64();
      return m;
    }
    case MsgType::IndexAssign: {
      IndexAssign m;
      m.start_iteration = r.u64();
      m.base_index = r.u64();
      m.per_column = r.u32();
      m.columns = r.u32();
      return m;
    }
    case MsgType::CkptRecord: {
      CkptRecord m;
      m.node = r.u32();
      m.role = r.role();
      m.iteration = r.u64();
      m.epoch = r.u64();
      return m;
    }
    case MsgType::FailureNotice: {
      FailureNotice m;
      m.epoch = r.u64();
      m.notice_id = r.u64();
      m.reason = r.u8();
      m.failed_nodes = r.vec<std::uint32_t>([&] { return r.u32(); });
      m.failed_roles = r.vec<Role>([&] { return r.role(); });
      return m;
    }
    case MsgType::BackupOrder: {
      BackupOrder m;
      m.target_iteration = r.u64();
      m.role = r.role();
      m.kinds = r.u8();
      return m;
    }
    case MsgType::StateForward: {
      StateForward m;
      m.origin = r.role();
      m.iteration = r.u64();
      m.dest_node = r.u32();
      m.part = r.u8();
      m.source = r.role();
      return m;
    }
    case MsgType::EpochOpen: {
      EpochOpen m;
      m.epoch = r.u64();
      m.start_iteration = r.u64();
      m.assignments = r.vec<RoleAssignment>([&] {
        RoleAssignment a;
        a.local_rank = r.u16();
        a.role = r.role();
        return a;
      });
      m.indices.start_iteration = r.u64();
      m.indices.base_index = r.u64();
      m.indices.per_column = r.u32();
      m.indices.columns = r.u32();
      m.restore = r.u8();
      return m;
    }
    case MsgType::RendezvousPoll: {
      RendezvousPoll m;
      m.epoch = r.u64();
      m.self = r.role();
      m.node = r.u32();
      m.local_rank = r.u16();
      m.want = r.vec<Role>([&] { return r.role(); });
      return m;
    }
    case MsgType::RendezvousInfo: {
      RendezvousInfo m;
      m.epoch = r.u64();
      m.complete = r.b();
      m.peers = r.vec<PeerLocation>([&] {
        PeerLocation p;
        p.role = r.role();
        p.node = r.u32();
        p.local_rank = r.u16();
        return p;
      });
      return m;
    }
    case MsgType::WorkerExit: {
      WorkerExit m;
      m.node = r.u32();
      m.role = r.role();
      m.final_iteration = r.u64();
      m.reason = r.u8();
      return m;
    }
    case MsgType::Resume: {
      Resume m;
      m.epoch = r.u64();
      m.iteration = r.u64();
      return m;
    }
    case MsgType::Alert: {
      Alert m;
      m.code = r.u8();
      m.text = r.str();
      return m;
    }
    case MsgType::Ack: {
      Ack m;
      m.of_type = r.u8();
      m.seq = r.u64();
      m.ok = r.b();
      m.text = r.str();
      return m;
    }
    case MsgType::Ready: {
      Ready m;
      m.node = r.u32();
      m.epoch = r.u64();
      m.iteration = r.u64();
      return m;
    }
  }
  throw ProtocolError("wire: unknown message type " +
                      std::to_string(static_cast<int>(t)));
}

}  // namespace

MsgType type_of(const AnyMsg& m) {
  return static_cast<MsgType>(m.index() + 1);
}

const char* type_name(MsgType t) {
  switch (t) {
    case MsgType::Register: return "REGISTER";
    case MsgType::RegisterAck: return "REGISTER_ACK";
    case MsgType::Heartbeat: return "HEARTBEAT";
    case MsgType::IndexAssign: return "INDEX_ASSIGN";
    case MsgType::CkptRecord: return "CKPT_RECORD";
    case MsgType::FailureNotice: return "FAILURE_NOTICE";
    case MsgType::BackupOrder: return "BACKUP_ORDER";
    case MsgType::StateForward: return "STATE_FORWARD";
    case MsgType::EpochOpen: return "EPOCH_OPEN";
    case MsgType::RendezvousPoll: return "RENDEZVOUS_POLL";
    case MsgType::RendezvousInfo: return "RENDEZVOUS_INFO";
    case MsgType::WorkerExit: return "WORKER_EXIT";
    case MsgType::Resume: return "RESUME";
    case MsgType::Alert: return "ALERT";
    case MsgType::Ack: return "ACK";
    case MsgType::Ready: return "READY";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> encode(const AnyMsg& m) {
  Writer w;
  w.u32(0);  // patched below
  w.u16(kWireVersion);
  w.u8(static_cast<std::uint8_t>(type_of(m)));
  std::visit(EncodeBody{w}, m);
  auto out = w.take();
  const std::uint32_t body = static_cast<std::uint32_t>(out.size() - 4);
  for (int i = 0; i < 4; ++i)
    out[i] = static_cast<std::uint8_t>(body >> (8 * i));
  return out;
}

AnyMsg decode(const std::vector<std::uint8_t>& frame) {
  if (frame.size() < 7) throw net::ProtocolError("wire: frame too short");
  Reader r(frame.data(), frame.size());
  const auto len = r.u32();
  if (len != frame.size() - 4)
    throw net::ProtocolError("wire: length field mismatch");
  const auto ver = r.u16();
  if (ver != kWireVersion)
    throw net::ProtocolError("wire: unsupported version " +
                             std::to_string(ver));
  const auto t = static_cast<MsgType>(r.u8());
  AnyMsg m = decode_body(t, r);
  r.done();
  return m;
}

std::size_t frame_size(const std::uint8_t* data, std::size_t len) {
  if (len < 4) return 0;
  std::uint32_t body = 0;
  for (int i = 0; i < 4; ++i)
    body |= static_cast<std::uint32_t>(data[i]) << (8 * i);
  return static_cast<std::size_t>(body) + 4;
}

}  // namespace ftsim::wire
