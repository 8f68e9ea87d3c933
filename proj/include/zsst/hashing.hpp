#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace zsst {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

// FNV-1a over a byte range. Not cryptographic; used for stable artifact
// digests and content-addressed checkpoint ids.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset);

// Lowercase zero-padded 16-digit hex rendering of a hash value.
std::string hex16(std::uint64_t h);

// 16-hex-digit digest of a byte range.
std::string digest_hex(std::string_view bytes);

// Digest of a whole file. Throws StorageError if the file cannot be read.
std::string digest_file_hex(const std::filesystem::path& path);

}  // namespace zsst
