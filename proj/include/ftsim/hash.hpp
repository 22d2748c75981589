// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ftsim {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const void* data, std::size_t len);
Digest sha256(const std::vector<std::uint8_t>& data);
Digest sha256(const std::string& data);

std::string hex(const Digest& d);

// First eight digest bytes, little-endian.
std::uint64_t fold64(const Digest& d);

// Incremental builder for hashing structured keys without intermediate
// buffers.  Integers are fed little-endian.
class HashIn {
 public:
  HashIn();
  ~HashIn();
  HashIn(const HashIn&) = delete;
  HashIn& operator=(const HashIn&) = delete;
  HashIn& bytes(const void* data, std::size_t len);
  HashIn& u64(std::uint64_t v);
  HashIn& u32(std::uint32_t v);
  HashIn& u16(std::uint16_t v);
  HashIn& u8(std::uint8_t v);
  HashIn& str(const std::string& s);  // length-prefixed
  Digest digest();  // finalizes; the builder must not be reused

 private:
  void* ctx_;
};

// Cheap non-cryptographic checksum used in snapshot headers (FNV-1a 64).
std::uint64_t checksum64(const void* data, std::size_t len);
std::uint64_t checksum64(const std::vector<std::uint8_t>& data);

}  // namespace ftsim
