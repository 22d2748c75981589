// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/evolution.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace ftsim::evo {

std::uint64_t weights_bytes(const ClusterSpec& spec) {
  return 2 * spec.params_per_device;
}

std::uint64_t optimizer_bytes(const ClusterSpec& spec) {
  const std::uint64_t full = 12 * spec.params_per_device;
  if (!spec.distributed_optimizer || spec.data_parallel <= 1) return full;
  return (full + spec.data_parallel - 1) / spec.data_parallel;
}

Digest weights_init(std::uint64_t seed, const Role& r) {
  return HashIn{}.str("W0").u64(seed).u16(r.pp).u16(r.tp).digest();
}

Digest optimizer_init(std::uint64_t seed, const Role& r, bool distributed) {
  HashIn h;
  h.str("O0").u64(seed);
  if (distributed) h.u16(r.dp);
  h.u16(r.pp).u16(r.tp);
  return h.digest();
}

Digest weights_next(const Digest& w, const Digest& grad) {
  return HashIn{}.str("W").bytes(w.data(), w.size())
      .bytes(grad.data(), grad.size()).digest();
}

Digest optimizer_next(const Digest& o, const Digest& grad) {
  return HashIn{}.str("O").bytes(o.data(), o.size())
      .bytes(grad.data(), grad.size()).digest();
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::vector<std::uint64_t> grad_contribution(std::uint64_t seed, const Role& r,
                                             std::uint64_t iteration,
                                             std::uint64_t data_fold) {
  const std::uint64_t base = fold64(HashIn{}.str("C").u64(seed).u16(r.dp)
                                        .u16(r.pp).u16(r.tp).u64(iteration)
                                        .digest());
  std::vector<std::uint64_t> lanes(kGradLanes);
  for (std::size_t j = 0; j < kGradLanes; ++j) {
    const std::uint64_t off = j * 0x9E3779B97F4A7C15ull;
    lanes[j] = mix64(base + off) + mix64(data_fold + off);
  }
  return lanes;
}

Digest grad_digest(const std::vector<std::uint64_t>& lanes) {
  HashIn h;
  h.str("G");
  for (auto v : lanes) h.u64(v);
  return h.digest();
}

std::vector<std::uint8_t> expand(const Digest& d, std::uint64_t bytes) {
  std::vector<std::uint8_t> out(bytes);
  std::uint64_t s = fold64(d);
  std::uint64_t i = 0;
  while (i + 8 <= bytes) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t v = mix64(s);
    for (int b = 0; b < 8; ++b) out[i++] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  if (i < bytes) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t v = mix64(s);
    for (int b = 0; i < bytes; ++b) out[i++] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  return out;
}

std::vector<std::uint8_t> materialize(const Digest& d, std::uint64_t bytes) {
  if (bytes < d.size())
    throw std::invalid_argument("state blob smaller than its digest prefix");
  std::vector<std::uint8_t> out;
  out.reserve(bytes);
  out.insert(out.end(), d.begin(), d.end());
  const auto tail = expand(d, bytes - d.size());
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

Digest digest_of_blob(const std::vector<std::uint8_t>& blob) {
  Digest d{};
  if (blob.size() < d.size())
    throw std::invalid_argument("state blob smaller than its digest prefix");
  std::copy_n(blob.begin(), d.size(), d.begin());
  return d;
}

bool blob_is_sound(const std::vector<std::uint8_t>& blob) {
  if (blob.size() < std::tuple_size_v<Digest>) return false;
  return blob == materialize(digest_of_blob(blob), blob.size());
}

Digest data_item_digest(std::uint64_t data_seed, std::uint64_t index) {
  return HashIn{}.str("D").u64(data_seed).u64(index).digest();
}

std::vector<std::uint8_t> data_item(std::uint64_t data_seed,
                                    std::uint64_t index,
                                    std::uint32_t item_bytes) {
  return expand(data_item_digest(data_seed, index), item_bytes);
}

std::uint64_t item_fold(const std::vector<std::uint8_t>& item) {
  std::uint64_t v = 0;
  const std::size_t n = item.size() < 8 ? item.size() : 8;
  for (std::size_t i = 0; i < n; ++i)
    v |= static_cast<std::uint64_t>(item[i]) << (8 * i);
  return v;
}

}  // namespace ftsim::evo
