#include "zsst/hashing.hpp"

#include <cstdio>
#include <fstream>

#include "zsst/errors.hpp"

namespace zsst {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string digest_hex(std::string_view bytes) { return hex16(fnv1a64(bytes)); }

std::string digest_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw StorageError("cannot read file for digest: " + path.string());
  }
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())),
                h);
    if (!in) break;
  }
  return hex16(h);
}

}  // namespace zsst
