#pragma once

// Little-endian primitives shared by the checkpoint and embedding formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "rcdst/errors.hpp"

namespace rcdst::detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
  out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void get_bytes(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError(std::string("truncated file while reading ") + what);
  }
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  get_bytes(in, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[k]) << (8 * k);
  return v;
}

inline std::uint64_t get_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  get_bytes(in, reinterpret_cast<char*>(b), 8, what);
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

inline double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_u64(in, what));
}

inline std::string get_string(std::istream& in, const char* what, std::size_t limit = 1u << 30) {
  const auto n = get_u32(in, what);
  if (n > limit) throw DataError(std::string("implausible string length in ") + what);
  std::string s(n, '\0');
  get_bytes(in, s.data(), n, what);
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& path) {
  char b[4];
  in.read(b, 4);
  if (in.gcount() != 4 || std::memcmp(b, magic, 4) != 0) {
    throw DataError(path + ": bad magic, expected " + magic);
  }
}

}  // namespace rcdst::detail
