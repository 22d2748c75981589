// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/dataloader.hpp"

#include <fstream>
#include <stdexcept>

#include "ftsim/evolution.hpp"

namespace ftsim::data {

namespace {

constexpr std::uint32_t kRecordMagic = 0x31434552u;  // "REC1"
constexpr std::uint32_t kRecordVersion = 1;

void le32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
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

IndexWindow window_of(const wire::IndexAssign& a, std::uint32_t column,
                      std::uint64_t iteration) {
  if (column >= a.columns)
    throw std::invalid_argument("index column out of range");
  if (iteration < a.start_iteration)
    throw std::invalid_argument("iteration precedes the index assignment");
  IndexWindow w;
  w.first = a.base_index +
            (iteration - a.start_iteration) *
                static_cast<std::uint64_t>(a.columns) * a.per_column +
            static_cast<std::uint64_t>(column) * a.per_column;
  w.count = a.per_column;
  return w;
}

std::uint32_t sample_bytes(const ClusterSpec& spec) {
  return 4 * spec.seq_len;
}

std::uint64_t iteration_data_bytes(const ClusterSpec& spec) {
  return static_cast<std::uint64_t>(sample_bytes(spec)) * spec.batch_size;
}

void PreloadBuffer::insert(const TID& tid, std::vector<std::uint8_t> blob) {
  if (!fits(blob.size()))
    throw std::logic_error("preload buffer overflow at " + tid.str());
  if (entries_.count(tid))
    throw std::logic_error("duplicate preload entry " + tid.str());
  bytes_ += blob.size();
  entries_.emplace(tid, std::move(blob));
}

std::optional<std::vector<std::uint8_t>> PreloadBuffer::take(const TID& tid) {
  auto it = entries_.find(tid);
  if (it == entries_.end()) return std::nullopt;
  auto blob = std::move(it->second);
  bytes_ -= blob.size();
  entries_.erase(it);
  return blob;
}

std::optional<TID> PreloadBuffer::oldest() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.begin()->first;
}

DataServerStub::DataServerStub(std::uint64_t seed) : seed_(seed) {}

DataServerStub::DataServerStub(const std::filesystem::path& record_file)
    : file_(record_file) {
  std::ifstream f(file_, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + file_.string());
  std::uint8_t h[16];
  if (!f.read(reinterpret_cast<char*>(h), sizeof h))
    throw std::runtime_error("record file shorter than its header");
  if (rd32(h) != kRecordMagic)
    throw std::runtime_error("bad record file magic");
  if (rd32(h + 4) != kRecordVersion)
    throw std::runtime_error("unsupported record file version");
  record_len_ = rd64(h + 8);
  if (record_len_ == 0) throw std::runtime_error("zero record length");
  f.seekg(0, std::ios::end);
  const auto total = static_cast<std::uint64_t>(f.tellg()) - 16;
  if (total % record_len_ != 0)
    throw std::runtime_error("record file size is not a whole record count");
  record_count_ = total / record_len_;
}

std::vector<std::uint8_t> DataServerStub::sample(std::uint64_t index,
                                                 std::uint32_t bytes) const {
  if (synthetic()) return evo::data_item(seed_, index, bytes);
  if (bytes != record_len_)
    throw std::invalid_argument("sample size disagrees with record length");
  if (index >= record_count_)
    throw std::out_of_range("record index past end of file");
  std::ifstream f(file_, std::ios::binary);
  f.seekg(static_cast<std::streamoff>(16 + index * record_len_));
  std::vector<std::uint8_t> out(bytes);
  if (!f.read(reinterpret_cast<char*>(out.data()), bytes))
    throw std::runtime_error("short record read");
  return out;
}

std::vector<std::uint8_t> DataServerStub::fetch(
    const IndexWindow& w, std::uint32_t bytes_per_sample) const {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(w.count) * bytes_per_sample);
  for (std::uint32_t i = 0; i < w.count; ++i) {
    const auto s = sample(w.first + i, bytes_per_sample);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

void DataServerStub::write_record_file(
    const std::filesystem::path& path,
    const std::vector<std::vector<std::uint8_t>>& records) {
  if (records.empty()) throw std::invalid_argument("no records to write");
  const auto len = records.front().size();
  for (const auto& r : records)
    if (r.size() != len)
      throw std::invalid_argument("records must be fixed-length");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  std::uint8_t h[16] = {};
  le32(h, kRecordMagic);
  le32(h + 4, kRecordVersion);
  le64(h + 8, len);
  f.write(reinterpret_cast<const char*>(h), sizeof h);
  for (const auto& r : records)
    f.write(reinterpret_cast<const char*>(r.data()),
            static_cast<std::streamsize>(r.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::uint64_t fold_of_blob(const std::vector<std::uint8_t>& blob,
                           std::uint32_t bytes_per_sample) {
  if (bytes_per_sample == 0 || blob.size() % bytes_per_sample != 0)
    throw std::invalid_argument("blob is not a whole number of samples");
  std::uint64_t acc = 0;
  for (std::size_t off = 0; off < blob.size(); off += bytes_per_sample) {
    std::uint64_t v = 0;
    const std::size_t n =
        bytes_per_sample < 8 ? bytes_per_sample : std::size_t{8};
    for (std::size_t i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(blob[off + i]) << (8 * i);
    acc += v;
  }
  return acc;
}

std::uint64_t window_fold(std::uint64_t seed, const IndexWindow& w) {
  std::uint64_t acc = 0;
  for (std::uint32_t i = 0; i < w.count; ++i)
    acc += evo::item_fold(evo::data_item(seed, w.first + i, 8));
  return acc;
}

}  // namespace ftsim::data
