#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semkey/sha256.hpp"

namespace semkey {

// Domain-separation tags for every SHA-256 use in the toolkit. Each hash
// input starts with one tag byte; all variable-length fields are
// length-prefixed, so distinct logical inputs can never collide byte-wise.
enum class HashDomain : std::uint8_t {
  kProjectionSeed = 1,  // per (idx, j, salt) Gaussian projection seed
  kSemanticKey = 2,     // final key from (bits, idx, salt)
  kStandardKey = 3,     // token-window hash key
  kFixedKey = 4,        // context-free key
  kGaussBlock = 5,      // counter blocks of the Gaussian PRG
  kXiBlock = 6,         // counter blocks of the per-token uniforms
  kTournamentG = 7,     // tournament g-bits
  kTournamentDraw = 8,  // tournament candidate draws
  kTournamentCoin = 9,  // tournament tie-break coins
};

// Canonical serializer feeding a SHA-256. Every field carries an explicit
// width or length prefix.
class HashWriter {
 public:
  explicit HashWriter(HashDomain domain) {
    const std::uint8_t tag = static_cast<std::uint8_t>(domain);
    sha_.update(&tag, 1);
  }

  HashWriter& u32(std::uint32_t v) {
    std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8),
                         std::uint8_t(v)};
    sha_.update(b, 4);
    return *this;
  }

  HashWriter& u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = std::uint8_t(v >> (56 - 8 * i));
    sha_.update(b, 8);
    return *this;
  }

  HashWriter& bytes(std::span<const std::uint8_t> data) {
    u32(std::uint32_t(data.size()));
    sha_.update(data);
    return *this;
  }

  // Token ids serialized as big-endian 32-bit words.
  HashWriter& ids(std::span<const std::int32_t> v) {
    u32(std::uint32_t(v.size()));
    for (std::int32_t id : v) u32(std::uint32_t(id));
    return *this;
  }

  Digest finish() { return sha_.finish(); }

 private:
  Sha256 sha_;
};

// Uniform in (0,1) with 53-bit resolution; never returns 0 or 1 exactly.
inline double u64_to_open_unit(std::uint64_t x) {
  return (double((x >> 11)) + 0.5) * 0x1p-53;
}

// Uniform in (0,1] (used as the log argument in Box-Muller).
inline double u64_to_left_open_unit(std::uint64_t x) {
  return (double((x >> 11)) + 1.0) * 0x1p-53;
}

inline std::uint64_t load_u64_be(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

// Counter-mode PRF stream over a fixed seed: block(i) = H(tag || seed || i),
// consumed 8 bytes at a time. Deterministic and platform-independent.
class CounterStream {
 public:
  CounterStream(HashDomain domain, std::span<const std::uint8_t> seed)
      : domain_(domain), seed_(seed.begin(), seed.end()) {}

  std::uint64_t next_u64() {
    if (lane_ == 4) refill();
    return load_u64_be(block_.data() + 8 * lane_++);
  }

  double next_open_unit() { return u64_to_open_unit(next_u64()); }

 private:
  void refill() {
    HashWriter w(domain_);
    w.bytes(seed_).u64(counter_++);
    block_ = w.finish();
    lane_ = 0;
  }

  HashDomain domain_;
  std::vector<std::uint8_t> seed_;
  Digest block_{};
  std::uint64_t counter_ = 0;
  int lane_ = 4;
};

// d i.i.d. standard normals from a counter-mode PRF on `seed` through a
// Box-Muller transform. Identical seed gives a bit-identical vector.
std::vector<double> gaussian_from_seed(std::span<const std::uint8_t> seed, int d);

}  // namespace semkey
