#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sde {

/// 64-bit FNV-1a; stable across platforms and runs.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t state = 0xcbf29ce484222325ULL) {
  for (char c : bytes) {
    state ^= static_cast<unsigned char>(c);
    state *= 0x100000001b3ULL;
  }
  return state;
}

// Seed mixed in as 8 little-endian bytes ahead of the text.
std::uint64_t stable_hash(std::uint64_t seed, std::string_view text);

/// Lowercase hex SHA-256 digest (64 characters).
std::string sha256_hex(std::string_view bytes);

std::string new_uuid();

/// Current UTC time as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string utc_now_iso8601();

}  // namespace sde
