#include "crumbs/digest.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "crumbs/error.hpp"

namespace crumbs {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string digest_hex(std::string_view bytes) { return to_hex(fnv1a64(bytes)); }

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::array<char, 1 << 16> buf{};
  std::uint64_t state = 0xcbf29ce484222325ULL;
  while (in) {
    in.read(buf.data(), buf.size());
    state = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), state);
  }
  return to_hex(state);
}

}  // namespace crumbs
