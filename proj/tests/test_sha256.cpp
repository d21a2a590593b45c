#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "semkey/prf.hpp"
#include "semkey/sha256.hpp"

using namespace semkey;

namespace {

std::string hash_hex(const std::string& msg) {
  return to_hex(Sha256::hash(msg.data(), msg.size()));
}

}  // namespace

TEST_CASE("FIPS 180-4 test vectors") {
  CHECK(hash_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(hash_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(hash_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  CHECK(hash_hex(std::string(1000000, 'a')) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("streaming equals one-shot across block boundaries") {
  const std::string msg(200, 'x');
  for (std::size_t split : {std::size_t(1), std::size_t(63), std::size_t(64), std::size_t(65)}) {
    Sha256 h;
    h.update(msg.data(), split);
    h.update(msg.data() + split, msg.size() - split);
    CHECK(to_hex(h.finish()) == hash_hex(msg));
  }
}

TEST_CASE("hash writer domain separation") {
  HashWriter a(HashDomain::kSemanticKey);
  HashWriter b(HashDomain::kStandardKey);
  a.u32(7);
  b.u32(7);
  CHECK(a.finish() != b.finish());
}

TEST_CASE("length prefixes prevent field-boundary collisions") {
  // ("ab", "c") vs ("a", "bc") must hash differently.
  const std::vector<std::uint8_t> ab{'a', 'b'}, c{'c'}, a{'a'}, bc{'b', 'c'};
  HashWriter w1(HashDomain::kSemanticKey);
  w1.bytes(ab).bytes(c);
  HashWriter w2(HashDomain::kSemanticKey);
  w2.bytes(a).bytes(bc);
  CHECK(w1.finish() != w2.finish());
}

TEST_CASE("counter stream is deterministic and lane-stable") {
  const std::vector<std::uint8_t> seed{1, 2, 3};
  CounterStream s1(HashDomain::kXiBlock, seed);
  CounterStream s2(HashDomain::kXiBlock, seed);
  for (int i = 0; i < 20; ++i) CHECK(s1.next_u64() == s2.next_u64());
}
