#include <cstdint>
#include <string>

#include <doctest.h>

#include "zsst/hashing.hpp"
#include "../support/test_util.hpp"

using namespace zsst;

TEST_SUITE("hashing") {

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == UINT64_C(0xcbf29ce484222325));
  CHECK(fnv1a64("a") == UINT64_C(0xaf63dc4c8601ec8c));
  CHECK(fnv1a64("foobar") == UINT64_C(0x85944171f73967e8));
}

TEST_CASE("fnv1a64 chains across calls") {
  const std::uint64_t whole = fnv1a64("hello world");
  const std::uint64_t split = fnv1a64(" world", fnv1a64("hello"));
  CHECK(whole == split);
}

TEST_CASE("hex16 zero-pads to 16 lowercase digits") {
  CHECK(hex16(0) == "0000000000000000");
  CHECK(hex16(UINT64_C(0xdeadbeef)) == "00000000deadbeef");
  CHECK(hex16(UINT64_C(0xffffffffffffffff)) == "ffffffffffffffff");
}

TEST_CASE("digest_hex is hex16 of the hash") {
  CHECK(digest_hex("") == hex16(fnv1a64("")));
  CHECK(digest_hex("abc") == hex16(fnv1a64("abc")));
  CHECK(digest_hex("abc").size() == 16);
}

TEST_CASE("digest_file_hex hashes the raw bytes") {
  testutil::TempDir tmp;
  const auto path = tmp / "blob.bin";
  const std::string content = "line one\nline two\n\x01\x02";
  testutil::write_file(path, content);
  CHECK(digest_file_hex(path) == digest_hex(content));
}

TEST_CASE("digest_file_hex rejects a missing file") {
  testutil::TempDir tmp;
  CHECK_THROWS_AS(digest_file_hex(tmp / "absent.bin"), StorageError);
}

}  // TEST_SUITE
