#pragma once

// Little-endian primitives for the binary caches.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "crumbs/error.hpp"

namespace crumbs::binary {

static_assert(std::endian::native == std::endian::little, "binary caches assume a little-endian host");

template <typename T>
  requires std::is_arithmetic_v<T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
  requires std::is_arithmetic_v<T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw Error(ErrorKind::IoError, "truncated binary cache");
  }
  return value;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 28)) throw Error(ErrorKind::IoError, "corrupt string length in binary cache");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw Error(ErrorKind::IoError, "truncated binary cache");
  return s;
}

inline void put_magic(std::ostream& out, const char (&magic)[8], std::uint32_t version) {
  out.write(magic, 8);
  put<std::uint32_t>(out, version);
}

inline void expect_magic(std::istream& in, const char (&magic)[8], std::uint32_t version) {
  char buf[8];
  if (!in.read(buf, 8) || std::string(buf, 8) != std::string(magic, 8)) {
    throw Error(ErrorKind::SchemaError, "not a " + std::string(magic, 7) + " cache");
  }
  const auto v = get<std::uint32_t>(in);
  if (v != version) {
    throw Error(ErrorKind::SchemaError, "unsupported cache version " + std::to_string(v));
  }
}

}  // namespace crumbs::binary
