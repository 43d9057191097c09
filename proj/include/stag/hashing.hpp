#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace stag {

/// 64-bit FNV-1a. Platform independent, used for cache keys and feature hashing.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t hash = 0xcbf29ce484222325ull) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
  return out;
}

inline std::string content_hash(std::string_view data) { return to_hex(fnv1a64(data)); }

}  // namespace stag
