#include "semkey/keymod.hpp"

#include <cmath>
#include <stdexcept>

namespace semkey {

namespace {

Digest projection_seed(int idx, int j, const Salt& salt) {
  HashWriter w(HashDomain::kProjectionSeed);
  w.bytes(salt).u32(std::uint32_t(idx)).u32(std::uint32_t(j));
  return w.finish();
}

void check_idx(int idx, int k) {
  if (idx < 1 || idx > k) throw std::out_of_range("key index out of range [1, k]");
}

}  // namespace

Salt salt_from_hex(const std::string& hex) {
  if (hex.empty() || hex.size() % 2 != 0)
    throw std::invalid_argument("salt must be a nonempty even-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("salt contains a non-hex character");
  };
  Salt out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2)
    out.push_back(std::uint8_t(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
  return out;
}

void SimKeyParams::validate() const {
  if (b < 1) throw std::invalid_argument("b must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (salt.empty()) throw std::invalid_argument("salt must be nonempty");
  if (d < 2) throw std::invalid_argument("embedding dimension must be >= 2");
}

std::vector<int> simkey_bits(const SemanticVector& v, int idx, const SimKeyParams& params) {
  params.validate();
  check_idx(idx, params.k);
  if (v.dim() != params.d) throw std::invalid_argument("simkey: vector dimension mismatch");
  std::vector<int> bits(std::size_t(params.b));
  for (int j = 1; j <= params.b; ++j) {
    const Digest seed = projection_seed(idx, j, params.salt);
    const std::vector<double> r = gaussian_from_seed(seed, params.d);
    double dot = 0.0;
    for (int i = 0; i < params.d; ++i) dot += v.values()[std::size_t(i)] * r[std::size_t(i)];
    bits[std::size_t(j - 1)] = dot >= 0.0 ? 1 : -1;  // sign(0) := +1
  }
  return bits;
}

WatermarkKey key_from_bits(std::span<const int> bits, int idx, const Salt& salt) {
  HashWriter w(HashDomain::kSemanticKey);
  std::vector<std::uint8_t> bit_bytes(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bit_bytes[i] = bits[i] > 0 ? 1 : 0;
  w.bytes(bit_bytes).u32(std::uint32_t(idx)).bytes(salt);
  WatermarkKey key;
  key.bytes = w.finish();
  return key;
}

WatermarkKey simkey(const SemanticVector& v, int idx, const SimKeyParams& params) {
  return key_from_bits(simkey_bits(v, idx, params), idx, params.salt);
}

double key_match_prob(double theta_degrees, int b) {
  if (theta_degrees < 0.0 || theta_degrees > 180.0)
    throw std::invalid_argument("theta must be in [0, 180] degrees");
  if (b < 1) throw std::invalid_argument("b must be >= 1");
  return std::pow(1.0 - theta_degrees / 180.0, b);
}

WatermarkKey standard_hash_key(std::span<const TokenId> window, int idx, const Salt& salt) {
  if (salt.empty()) throw std::invalid_argument("salt must be nonempty");
  HashWriter w(HashDomain::kStandardKey);
  w.ids(window).u32(std::uint32_t(idx)).bytes(salt);
  WatermarkKey key;
  key.bytes = w.finish();
  return key;
}

WatermarkKey fixed_key(int idx, const Salt& salt) {
  if (salt.empty()) throw std::invalid_argument("salt must be nonempty");
  HashWriter w(HashDomain::kFixedKey);
  w.u32(std::uint32_t(idx)).bytes(salt);
  WatermarkKey key;
  key.bytes = w.finish();
  return key;
}

SimKeyModule::SimKeyModule(std::shared_ptr<const Embedder> embedder, SimKeyParams params,
                           int window, TokenId pad)
    : embedder_(std::move(embedder)), params_(std::move(params)), window_(window), pad_(pad) {
  params_.validate();
  if (!embedder_) throw std::invalid_argument("simkey module needs an embedder");
  if (embedder_->dim() != params_.d)
    throw std::invalid_argument("embedder dimension does not match simkey params");
  if (window_ < 1) throw std::invalid_argument("window must be >= 1");
  projections_.reserve(std::size_t(params_.k) * std::size_t(params_.b));
  for (int idx = 1; idx <= params_.k; ++idx)
    for (int j = 1; j <= params_.b; ++j)
      projections_.push_back(gaussian_from_seed(projection_seed(idx, j, params_.salt), params_.d));
}

WatermarkKey SimKeyModule::key_of_vector(const SemanticVector& v, int idx) const {
  check_idx(idx, params_.k);
  std::vector<int> bits(std::size_t(params_.b));
  for (int j = 0; j < params_.b; ++j) {
    const auto& r = projections_[std::size_t(idx - 1) * std::size_t(params_.b) + std::size_t(j)];
    double dot = 0.0;
    for (int i = 0; i < params_.d; ++i) dot += v.values()[std::size_t(i)] * r[std::size_t(i)];
    bits[std::size_t(j)] = dot >= 0.0 ? 1 : -1;
  }
  return key_from_bits(bits, idx, params_.salt);
}

WatermarkKey SimKeyModule::derive(std::span<const TokenId> context, int idx) const {
  return key_of_vector(embed_context(*embedder_, context, window_, pad_), idx);
}

StandardHashKeyModule::StandardHashKeyModule(Salt salt, int window, TokenId pad, int k)
    : salt_(std::move(salt)), window_(window), pad_(pad), k_(k) {
  if (salt_.empty()) throw std::invalid_argument("salt must be nonempty");
  if (window_ < 1) throw std::invalid_argument("window must be >= 1");
  if (k_ < 1) throw std::invalid_argument("k must be >= 1");
}

WatermarkKey StandardHashKeyModule::derive(std::span<const TokenId> context, int idx) const {
  check_idx(idx, k_);
  const TokenSeq w = window_before(context, context.size(), window_, pad_);
  return standard_hash_key(w, idx, salt_);
}

FixedKeyModule::FixedKeyModule(Salt salt, int k) : salt_(std::move(salt)), k_(k) {
  if (salt_.empty()) throw std::invalid_argument("salt must be nonempty");
  if (k_ < 1) throw std::invalid_argument("k must be >= 1");
}

WatermarkKey FixedKeyModule::derive(std::span<const TokenId>, int idx) const {
  check_idx(idx, k_);
  return fixed_key(idx, salt_);
}

}  // namespace semkey
