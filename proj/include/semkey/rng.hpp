#pragma once

#include <cstdint>
#include <random>

namespace semkey {

// Experiment RNG. Wraps std::mt19937_64 but draws uniforms and bounded
// integers itself, so runs replay bit-identically across standard libraries
// (std distribution objects are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1p-53; }

  // Uniform in (0,1).
  double uniform_open() { return (double(next_u64() >> 11) + 0.5) * 0x1p-53; }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t reject_above = ~std::uint64_t(0) - (~std::uint64_t(0) % n + 1) % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x > reject_above);
    return x % n;
  }

  // Child RNG for work unit `stream`, independent of how many draws other
  // units consumed; partial reruns replay exactly.
  Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream ^ 0xa5a5a5a5a5a5a5a5ULL))); }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace semkey
