#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>

#include "alignkit/errors.hpp"

namespace alignkit {

/// Raw 32-byte SHA-256 of the input bytes.
inline std::array<unsigned char, 32> sha256_bytes(std::string_view data) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw Error("sha256 digest failed");
  }
  return out;
}

/// Hex-encoded SHA-256; the content-address format used for all record ids.
inline std::string sha256_hex(std::string_view data) {
  static constexpr char kHexDigits[] = "0123456789abcdef";
  auto raw = sha256_bytes(data);
  std::string hex(64, '0');
  for (std::size_t i = 0; i < raw.size(); ++i) {
    hex[2 * i] = kHexDigits[raw[i] >> 4];
    hex[2 * i + 1] = kHexDigits[raw[i] & 0xf];
  }
  return hex;
}

namespace detail {
// Parts are joined with a 0x1f separator so ("ab","c") and ("a","bc") hash
// differently.
inline std::string join_parts(std::initializer_list<std::string_view> parts) {
  std::string joined;
  std::size_t total = 0;
  for (auto p : parts) total += p.size() + 1;
  joined.reserve(total);
  for (auto p : parts) {
    joined.append(p);
    joined.push_back('\x1f');
  }
  return joined;
}
}  // namespace detail

/// Deterministic 64-bit value from a list of string parts. Used to derive
/// per-request seeds and to key hash-derived mock behavior.
inline std::uint64_t derive64(std::initializer_list<std::string_view> parts) {
  auto raw = sha256_bytes(detail::join_parts(parts));
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | raw[i];
  return v;
}

inline std::uint64_t derive_seed(std::uint64_t base_seed,
                                 std::initializer_list<std::string_view> parts) {
  std::string head = std::to_string(base_seed);
  std::string joined = detail::join_parts(parts);
  return derive64({head, joined});
}

/// Uniform value in [0,1) derived from string parts. Pure and stable across
/// runs; this is the primitive behind hash-derived mock randomness.
inline double hash_unit(std::initializer_list<std::string_view> parts) {
  return static_cast<double>(derive64(parts) >> 11) * 0x1.0p-53;
}

}  // namespace alignkit
