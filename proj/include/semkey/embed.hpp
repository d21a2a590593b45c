#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "semkey/textmodel.hpp"

namespace semkey {

// Unit-L2-norm real vector. Construction normalizes; zero vectors are
// rejected.
class SemanticVector {
 public:
  explicit SemanticVector(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  int dim() const { return int(values_.size()); }

 private:
  std::vector<double> values_;
};

// Angle between two unit vectors, in degrees in [0, 180]. The inner product
// is clamped to [-1, 1] before arccos.
double angle_degrees(const SemanticVector& a, const SemanticVector& b);

enum class EmbedderKind { kFeatureHash, kTable, kRemote };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kFeatureHash;
  int dimension = 384;
  int ngram_min = 1;  // feature n-gram range over window tokens
  int ngram_max = 2;
  std::string table_path;     // kTable
  std::string endpoint;       // kRemote, e.g. http://127.0.0.1:8089/embed
  int timeout_ms = 2000;      // kRemote
  // Per-token feature weights (e.g. inverse document frequency). Empty
  // means unit weights.
  std::vector<double> token_weights;

  void validate() const;
};

// Maps a fixed-length token window to a unit vector. Implementations are
// immutable after construction and safe for concurrent calls.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual SemanticVector embed_window(std::span<const TokenId> window) const = 0;
  virtual int dim() const = 0;
};

// Signed feature hashing of token unigrams and bigrams into `dim` buckets,
// then L2 normalization. Deterministic stand-in for a sentence embedder:
// windows sharing most tokens land at a small angle.
class FeatureHashEmbedder final : public Embedder {
 public:
  FeatureHashEmbedder(int dim, int ngram_min, int ngram_max,
                      std::vector<double> token_weights = {});

  SemanticVector embed_window(std::span<const TokenId> window) const override;
  int dim() const override { return dim_; }

  // Signed bucket of a token's unigram feature: (bucket index, sign).
  std::pair<std::uint32_t, int> unigram_signature(TokenId id) const;

 private:
  double weight(TokenId id) const;

  int dim_;
  int ngram_min_;
  int ngram_max_;
  std::vector<double> token_weights_;
};

// Lookup embedder over precomputed window vectors (e.g. exported from a
// real sentence-transformer); misses fall back to feature hashing and are
// counted.
class TableEmbedder final : public Embedder {
 public:
  TableEmbedder(int dim, std::unordered_map<std::uint64_t, std::vector<double>> table,
                std::shared_ptr<const Embedder> fallback);

  SemanticVector embed_window(std::span<const TokenId> window) const override;
  int dim() const override { return dim_; }

  std::uint64_t miss_count() const { return misses_.load(); }
  std::size_t size() const { return table_.size(); }

 private:
  int dim_;
  std::unordered_map<std::uint64_t, std::vector<double>> table_;
  std::shared_ptr<const Embedder> fallback_;
  mutable std::atomic<std::uint64_t> misses_{0};
};

// Stable 64-bit key of a token window: FNV-1a over the ids serialized as
// big-endian 32-bit words. This is the key column of the table file format.
std::uint64_t window_key(std::span<const TokenId> window);

// Table file: first line "dim=<d>", then "<16-hex key> <d floats>" rows.
std::shared_ptr<TableEmbedder> load_table(const std::string& path,
                                          std::shared_ptr<const Embedder> fallback);
void save_table(const std::string& path, int dim,
                const std::unordered_map<std::uint64_t, std::vector<double>>& table);

struct RemoteError : std::runtime_error {
  enum class Kind { kTransport, kTimeout, kStatus, kDimension, kParse };
  RemoteError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

// POSTs {"text": ...} to `endpoint` and expects {"embedding": [floats]}.
// One retry on transient failures (transport errors and 5xx responses);
// the response is normalized to unit norm.
SemanticVector remote_embed(const std::string& text, const EmbedderConfig& config);

// HTTP client embedder around remote_embed; detokenizes the window first.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(EmbedderConfig config, Vocabulary vocab);

  SemanticVector embed_window(std::span<const TokenId> window) const override;
  int dim() const override { return config_.dimension; }

 private:
  EmbedderConfig config_;
  Vocabulary vocab_;
};

// Builds the embedder described by `config`. The vocabulary supplies
// detokenization for the remote backend; feature weights come from
// config.token_weights (empty = unit weights).
std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config,
                                              const Vocabulary& vocab);

// idf-style weights from corpus token counts: log(1 + N/(1 + count)).
std::vector<double> idf_weights(const std::vector<std::int64_t>& counts);

// Embeds the last `window` tokens of `context` (left-padded with the
// sentinel when shorter).
SemanticVector embed_context(const Embedder& embedder, std::span<const TokenId> context,
                             int window, TokenId pad);

}  // namespace semkey
