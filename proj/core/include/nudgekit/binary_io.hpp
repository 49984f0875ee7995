#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string_view>

#include "nudgekit/errors.hpp"

// Little-endian primitives shared by the snapshot and checkpoint formats.
namespace nudgekit::binary {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void put_magic(std::ostream& os, std::string_view magic) { os.write(magic.data(), 4); }

inline void read_exact(std::istream& is, char* dst, std::size_t count) {
  is.read(dst, static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(is.gcount()) != count) throw ConfigError("truncated binary file");
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  read_exact(is, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  read_exact(is, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void expect_magic(std::istream& is, std::string_view magic) {
  char b[4];
  read_exact(is, b, 4);
  if (std::string_view(b, 4) != magic)
    throw ConfigError("bad magic: expected " + std::string(magic));
}

}  // namespace nudgekit::binary
