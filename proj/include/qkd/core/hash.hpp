// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef QKD_CORE_HASH_HPP_
#define QKD_CORE_HASH_HPP_

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace qkd {

// 64-bit FNV-1a. Used for spec and config identities, not for integrity.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace qkd

#endif  // QKD_CORE_HASH_HPP_
