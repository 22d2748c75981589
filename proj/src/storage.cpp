// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/storage.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "ftsim/hash.hpp"

namespace ftsim::store {

namespace fs = std::filesystem;

namespace {

void le32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint16_t rd16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t rd32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint64_t rd64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

const char* kind_name(BlobKind k) {
  return k == BlobKind::Weights ? "weights" : "optimizer";
}

std::vector<std::uint8_t> pack_blob(const Role& role, std::uint64_t iteration,
                                    BlobKind kind, const void* payload,
                                    std::size_t len) {
  if (len > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("snapshot payload exceeds 4 GiB framing limit");
  std::vector<std::uint8_t> out(kHeaderBytes + len);
  std::uint8_t* h = out.data();
  le32(h + 0, kMagic);
  h[4] = kFormatVersion;
  h[5] = static_cast<std::uint8_t>(kind);
  le64(h + 12, iteration);
  h[6] = static_cast<std::uint8_t>(role.dp);
  h[7] = static_cast<std::uint8_t>(role.dp >> 8);
  h[8] = static_cast<std::uint8_t>(role.pp);
  h[9] = static_cast<std::uint8_t>(role.pp >> 8);
  h[10] = static_cast<std::uint8_t>(role.tp);
  h[11] = static_cast<std::uint8_t>(role.tp >> 8);
  le32(h + 20, static_cast<std::uint32_t>(len));
  le64(h + 24, checksum64(payload, len));
  if (len) std::memcpy(out.data() + kHeaderBytes, payload, len);
  return out;
}

std::vector<std::uint8_t> pack_blob(const Role& role, std::uint64_t iteration,
                                    BlobKind kind,
                                    const std::vector<std::uint8_t>& payload) {
  return pack_blob(role, iteration, kind, payload.data(), payload.size());
}

BlobInfo parse_header(const void* data, std::size_t len) {
  if (len < kHeaderBytes) throw CorruptSnapshot("snapshot shorter than header");
  const auto* h = static_cast<const std::uint8_t*>(data);
  if (rd32(h) != kMagic) throw CorruptSnapshot("bad snapshot magic");
  if (h[4] != kFormatVersion)
    throw CorruptSnapshot("unsupported snapshot format version");
  if (h[5] > 1) throw CorruptSnapshot("unknown blob kind");
  BlobInfo info;
  info.kind = static_cast<BlobKind>(h[5]);
  info.role.dp = rd16(h + 6);
  info.role.pp = rd16(h + 8);
  info.role.tp = rd16(h + 10);
  info.iteration = rd64(h + 12);
  info.payload_len = rd32(h + 20);
  info.checksum = rd64(h + 24);
  return info;
}

UnpackedBlob unpack_blob(const std::vector<std::uint8_t>& framed) {
  UnpackedBlob u;
  u.info = parse_header(framed.data(), framed.size());
  if (framed.size() != kHeaderBytes + u.info.payload_len)
    throw CorruptSnapshot("snapshot length disagrees with header");
  u.payload.assign(framed.begin() + kHeaderBytes, framed.end());
  if (checksum64(u.payload) != u.info.checksum)
    throw CorruptSnapshot("snapshot checksum mismatch");
  return u;
}

bool Storage::has_complete(const ClusterSpec& spec,
                           std::uint64_t iteration) const {
  for (std::uint16_t dp = 0; dp < spec.data_parallel; ++dp)
    for (std::uint16_t pp = 0; pp < spec.pipeline_parallel; ++pp)
      for (std::uint16_t tp = 0; tp < spec.tensor_parallel; ++tp) {
        const Role r{dp, pp, tp};
        if (!has(r, iteration, BlobKind::Weights)) return false;
        if (!has(r, iteration, BlobKind::Optimizer)) return false;
      }
  return true;
}

std::optional<std::uint64_t> Storage::latest_complete(
    const ClusterSpec& spec) const {
  auto its = iterations();
  for (auto it = its.rbegin(); it != its.rend(); ++it)
    if (has_complete(spec, *it)) return *it;
  return std::nullopt;
}

FsStorage::FsStorage(std::filesystem::path root, std::string job)
    : job_dir_(root / job) {
  fs::create_directories(job_dir_);
}

fs::path FsStorage::file_of(const Role& role, std::uint64_t iteration,
                            BlobKind kind) const {
  return job_dir_ / std::to_string(iteration) /
         (role.str() + "." + kind_name(kind));
}

void FsStorage::put(const Role& role, std::uint64_t iteration, BlobKind kind,
                    const std::vector<std::uint8_t>& payload) {
  const auto framed = pack_blob(role, iteration, kind, payload);
  const auto dest = file_of(role, iteration, kind);
  fs::create_directories(dest.parent_path());
  const auto tmp = dest.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp);
    f.write(reinterpret_cast<const char*>(framed.data()),
            static_cast<std::streamsize>(framed.size()));
    if (!f) throw std::runtime_error("short write to " + tmp);
  }
  fs::rename(tmp, dest);
}

void FsStorage::put_torn(const Role& role, std::uint64_t iteration,
                         BlobKind kind,
                         const std::vector<std::uint8_t>& payload) {
  const auto framed = pack_blob(role, iteration, kind, payload);
  const auto dest = file_of(role, iteration, kind);
  fs::create_directories(dest.parent_path());
  std::ofstream f(dest.string() + ".tmp", std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(framed.data()),
          static_cast<std::streamsize>(framed.size() / 2));
}

std::optional<std::vector<std::uint8_t>> FsStorage::get(
    const Role& role, std::uint64_t iteration, BlobKind kind) const {
  std::ifstream f(file_of(role, iteration, kind), std::ios::binary);
  if (!f) return std::nullopt;
  std::vector<std::uint8_t> framed((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  try {
    auto u = unpack_blob(framed);
    if (u.info.role != role || u.info.iteration != iteration ||
        u.info.kind != kind)
      return std::nullopt;  // object filed under the wrong name
    return std::move(u.payload);
  } catch (const CorruptSnapshot&) {
    return std::nullopt;
  }
}

bool FsStorage::has(const Role& role, std::uint64_t iteration,
                    BlobKind kind) const {
  return get(role, iteration, kind).has_value();
}

std::vector<std::uint64_t> FsStorage::iterations() const {
  std::vector<std::uint64_t> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(job_dir_, ec)) {
    if (!e.is_directory()) continue;
    const auto name = e.path().filename().string();
    if (name.empty() ||
        name.find_first_not_of("0123456789") != std::string::npos)
      continue;
    out.push_back(std::strtoull(name.c_str(), nullptr, 10));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void FsStorage::prune_before(std::uint64_t iteration) {
  for (auto it : iterations())
    if (it < iteration) fs::remove_all(job_dir_ / std::to_string(it));
}

}  // namespace ftsim::store
