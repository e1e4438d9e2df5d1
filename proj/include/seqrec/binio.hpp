// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian primitives shared by the dataset cache and the checkpoint
// container.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "seqrec/errors.hpp"

namespace seqrec::binio {

template <class U>
void put_uint(std::ostream& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
U get_uint(std::istream& in) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw FormatError("unexpected end of file");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
  return value;
}

inline void put_u64(std::ostream& out, std::uint64_t v) { put_uint(out, v); }
inline std::uint64_t get_u64(std::istream& in) { return get_uint<std::uint64_t>(in); }

inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_uint<std::uint64_t>(in)); }
inline void put_f32(std::ostream& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_uint<std::uint32_t>(in)); }

inline void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, std::uint64_t limit = std::uint64_t{1} << 32) {
  const auto n = get_u64(in);
  if (n > limit) throw FormatError("string length out of range");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) throw FormatError("unexpected end of file");
  return s;
}

inline void put_magic(std::ostream& out, const char (&magic)[9], std::uint32_t version) {
  out.write(magic, 8);
  put_uint(out, version);
}

/// Throws FormatError unless the stream starts with `magic` at `version`.
inline void expect_magic(std::istream& in, const char (&magic)[9], std::uint32_t version) {
  char buf[8];
  if (!in.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) throw FormatError("bad file signature");
  const auto v = get_uint<std::uint32_t>(in);
  if (v != version) throw FormatError("unsupported format version " + std::to_string(v));
}

}  // namespace seqrec::binio
