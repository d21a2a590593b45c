#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace semkey {

using Digest = std::array<std::uint8_t, 32>;

// Streaming SHA-256 (FIPS 180-4). Self-contained so that key and PRF
// outputs are bit-identical on every platform.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(const void* data, std::size_t len);
  void update(std::span<const std::uint8_t> bytes) { update(bytes.data(), bytes.size()); }
  Digest finish();

  static Digest hash(const void* data, std::size_t len);
  static Digest hash(std::span<const std::uint8_t> bytes) { return hash(bytes.data(), bytes.size()); }

 private:
  void process_block(const std::uint8_t* block);

  std::array<std::uint32_t, 8> state_{};
  std::array<std::uint8_t, 64> buffer_{};
  std::uint64_t total_len_ = 0;
  std::size_t buffer_len_ = 0;
};

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace semkey
