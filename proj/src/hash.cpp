// Copyright (c) 2026 ftsim contributors
// SPDX-License-Identifier: Apache-2.0
#include "ftsim/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace ftsim {

namespace {

void evp_check(int ok, const char* what) {
  if (ok != 1) throw std::runtime_error(std::string("digest failure in ") + what);
}

}  // namespace

Digest sha256(const void* data, std::size_t len) {
  Digest out{};
  unsigned int n = 0;
  evp_check(EVP_Digest(data, len, out.data(), &n, EVP_sha256(), nullptr),
            "EVP_Digest");
  return out;
}

Digest sha256(const std::vector<std::uint8_t>& data) {
  return sha256(data.data(), data.size());
}

Digest sha256(const std::string& data) {
  return sha256(data.data(), data.size());
}

std::string hex(const Digest& d) {
  static const char* k = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(k[b >> 4]);
    s.push_back(k[b & 0xF]);
  }
  return s;
}

std::uint64_t fold64(const Digest& d) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | d[i];
  return v;
}

HashIn::HashIn() {
  auto* c = EVP_MD_CTX_new();
  if (!c) throw std::runtime_error("EVP_MD_CTX_new failed");
  evp_check(EVP_DigestInit_ex(c, EVP_sha256(), nullptr), "DigestInit");
  ctx_ = c;
}

HashIn::~HashIn() {
  if (ctx_) EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

HashIn& HashIn::bytes(const void* data, std::size_t len) {
  evp_check(EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len),
            "DigestUpdate");
  return *this;
}

HashIn& HashIn::u64(std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return bytes(b, 8);
}

HashIn& HashIn::u32(std::uint32_t v) {
  std::uint8_t b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return bytes(b, 4);
}

HashIn& HashIn::u16(std::uint16_t v) {
  std::uint8_t b[2] = {static_cast<std::uint8_t>(v),
                       static_cast<std::uint8_t>(v >> 8)};
  return bytes(b, 2);
}

HashIn& HashIn::u8(std::uint8_t v) { return bytes(&v, 1); }

HashIn& HashIn::str(const std::string& s) {
  u64(s.size());
  return bytes(s.data(), s.size());
}

Digest HashIn::digest() {
  Digest out{};
  unsigned int n = 0;
  evp_check(EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &n),
            "DigestFinal");
  return out;
}

std::uint64_t checksum64(const void* data, std::size_t len) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t checksum64(const std::vector<std::uint8_t>& data) {
  return checksum64(data.data(), data.size());
}

}  // namespace ftsim
