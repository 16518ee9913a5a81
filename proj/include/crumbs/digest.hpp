#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace crumbs {

// 64-bit FNV-1a, used for config hashes and output digests (not security).
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t value);
std::string digest_hex(std::string_view bytes);
std::string digest_file(const std::filesystem::path& path);

}  // namespace crumbs
