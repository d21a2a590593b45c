#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "semkey/embed.hpp"
#include "semkey/prf.hpp"
#include "semkey/textmodel.hpp"

namespace semkey {

using Salt = std::vector<std::uint8_t>;

Salt salt_from_hex(const std::string& hex);

// 32-byte key seeding a mark module's PRF.
struct WatermarkKey {
  std::array<std::uint8_t, 32> bytes{};

  bool operator==(const WatermarkKey&) const = default;
  std::string hex() const { return to_hex(bytes); }
};

struct SimKeyParams {
  int b = 4;          // projection bit count
  int k = 4;          // number of key indices
  Salt salt;          // secret salt, nonempty
  int d = 384;        // embedding dimension

  void validate() const;
};

// Projection sign bits of v under the b seeded Gaussian directions of key
// index `idx`. sign(0) counts as +1. Exposed for diagnostics and tests.
std::vector<int> simkey_bits(const SemanticVector& v, int idx, const SimKeyParams& params);

WatermarkKey key_from_bits(std::span<const int> bits, int idx, const Salt& salt);

// Semantic key: b seeded random projections of v, signs hashed together
// with (idx, salt). Identical (v sign pattern, idx, salt) gives the same
// key; 1 <= idx <= k.
WatermarkKey simkey(const SemanticVector& v, int idx, const SimKeyParams& params);

// Probability that two inputs at `theta_degrees` produce the same key:
// (1 - theta/180)^b.
double key_match_prob(double theta_degrees, int b);

// Baseline key: hash of the exact token window and (idx, salt). Any
// single-token change in the window changes the key.
WatermarkKey standard_hash_key(std::span<const TokenId> window, int idx, const Salt& salt);

// Context-free key from (idx, salt) only.
WatermarkKey fixed_key(int idx, const Salt& salt);

// Key derivation interface shared by generation and detection. `context`
// is every committed token before the position being keyed; modules window
// it themselves. Pure and thread-safe.
class KeyModule {
 public:
  virtual ~KeyModule() = default;
  virtual WatermarkKey derive(std::span<const TokenId> context, int idx) const = 0;
  virtual int num_indices() const = 0;
  virtual std::string name() const = 0;
};

class SimKeyModule final : public KeyModule {
 public:
  SimKeyModule(std::shared_ptr<const Embedder> embedder, SimKeyParams params, int window,
               TokenId pad);

  WatermarkKey derive(std::span<const TokenId> context, int idx) const override;
  int num_indices() const override { return params_.k; }
  std::string name() const override { return "simkey"; }

  WatermarkKey key_of_vector(const SemanticVector& v, int idx) const;

 private:
  std::shared_ptr<const Embedder> embedder_;
  SimKeyParams params_;
  int window_;
  TokenId pad_;
  // Projection vectors cached per (idx, j); identical to what simkey()
  // derives on the fly.
  std::vector<std::vector<double>> projections_;
};

class StandardHashKeyModule final : public KeyModule {
 public:
  StandardHashKeyModule(Salt salt, int window, TokenId pad, int k = 1);

  WatermarkKey derive(std::span<const TokenId> context, int idx) const override;
  int num_indices() const override { return k_; }
  std::string name() const override { return "standard"; }

 private:
  Salt salt_;
  int window_;
  TokenId pad_;
  int k_;
};

class FixedKeyModule final : public KeyModule {
 public:
  FixedKeyModule(Salt salt, int k = 1);

  WatermarkKey derive(std::span<const TokenId> context, int idx) const override;
  int num_indices() const override { return k_; }
  std::string name() const override { return "fixed"; }

 private:
  Salt salt_;
  int k_;
};

}  // namespace semkey
