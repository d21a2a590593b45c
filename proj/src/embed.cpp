#include "semkey/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace semkey {

namespace {

constexpr double kZeroNormEps = 1e-12;

std::uint64_t fnv1a(std::uint64_t seed, std::span<const std::uint8_t> bytes) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kBucketSeed = kFnvOffset ^ 0x5555555555555555ULL;
constexpr std::uint64_t kSignSeed = kFnvOffset ^ 0xaaaaaaaaaaaaaaaaULL;

// n-gram feature bytes: big-endian ids, preceded by the n-gram length.
std::vector<std::uint8_t> feature_bytes(std::span<const TokenId> gram) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(1 + 4 * gram.size());
  bytes.push_back(std::uint8_t(gram.size()));
  for (TokenId id : gram) {
    const auto v = std::uint32_t(id);
    bytes.push_back(std::uint8_t(v >> 24));
    bytes.push_back(std::uint8_t(v >> 16));
    bytes.push_back(std::uint8_t(v >> 8));
    bytes.push_back(std::uint8_t(v));
  }
  return bytes;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SemanticVector::SemanticVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("semantic vector needs dimension >= 2");
  const double n = norm2(values_);
  if (!(n > kZeroNormEps)) throw std::invalid_argument("cannot normalize a zero vector");
  for (double& x : values_) x /= n;
}

double angle_degrees(const SemanticVector& a, const SemanticVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("angle: dimension mismatch");
  double dot = 0.0;
  for (int i = 0; i < a.dim(); ++i) dot += a.values()[std::size_t(i)] * b.values()[std::size_t(i)];
  dot = std::clamp(dot, -1.0, 1.0);
  return std::acos(dot) * 180.0 / 3.14159265358979323846;
}

void EmbedderConfig::validate() const {
  if (dimension < 2) throw std::invalid_argument("embedder dimension must be >= 2");
  if (ngram_min < 1 || ngram_max < ngram_min)
    throw std::invalid_argument("invalid n-gram range");
  if (kind == EmbedderKind::kRemote) {
    if (endpoint.empty()) throw std::invalid_argument("remote embedder needs an endpoint");
    if (timeout_ms <= 0) throw std::invalid_argument("remote timeout must be > 0");
  }
  if (kind == EmbedderKind::kTable && table_path.empty())
    throw std::invalid_argument("table embedder needs a table path");
}

FeatureHashEmbedder::FeatureHashEmbedder(int dim, int ngram_min, int ngram_max,
                                         std::vector<double> token_weights)
    : dim_(dim), ngram_min_(ngram_min), ngram_max_(ngram_max),
      token_weights_(std::move(token_weights)) {
  if (dim_ < 2) throw std::invalid_argument("embedder dimension must be >= 2");
  if (ngram_min_ < 1 || ngram_max_ < ngram_min_)
    throw std::invalid_argument("invalid n-gram range");
}

double FeatureHashEmbedder::weight(TokenId id) const {
  if (token_weights_.empty()) return 1.0;
  if (id < 0 || std::size_t(id) >= token_weights_.size()) return 1.0;
  return token_weights_[std::size_t(id)];
}

std::pair<std::uint32_t, int> FeatureHashEmbedder::unigram_signature(TokenId id) const {
  const TokenId gram[1] = {id};
  const auto bytes = feature_bytes(gram);
  const std::uint32_t bucket = std::uint32_t(fnv1a(kBucketSeed, bytes) % std::uint64_t(dim_));
  const int sign = (fnv1a(kSignSeed, bytes) & 1) ? 1 : -1;
  return {bucket, sign};
}

SemanticVector FeatureHashEmbedder::embed_window(std::span<const TokenId> window) const {
  std::vector<double> acc(std::size_t(dim_), 0.0);
  for (int n = ngram_min_; n <= ngram_max_; ++n) {
    if (window.size() < std::size_t(n)) continue;
    for (std::size_t i = 0; i + std::size_t(n) <= window.size(); ++i) {
      const auto gram = window.subspan(i, std::size_t(n));
      const auto bytes = feature_bytes(gram);
      const std::uint32_t bucket = std::uint32_t(fnv1a(kBucketSeed, bytes) % std::uint64_t(dim_));
      const double sign = (fnv1a(kSignSeed, bytes) & 1) ? 1.0 : -1.0;
      double w = 1.0;
      for (TokenId id : gram) w *= weight(id);
      acc[bucket] += sign * std::pow(w, 1.0 / double(n));
    }
  }
  if (norm2(acc) <= kZeroNormEps) {
    // Exact sign cancellation; deposit a deterministic residue so the
    // vector stays usable.
    const auto bytes = feature_bytes(window);
    acc[std::size_t(fnv1a(kBucketSeed ^ 0x77, bytes) % std::uint64_t(dim_))] = 1.0;
  }
  return SemanticVector(std::move(acc));
}

std::uint64_t window_key(std::span<const TokenId> window) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(window.size() * 4);
  for (TokenId id : window) {
    const auto v = std::uint32_t(id);
    bytes.push_back(std::uint8_t(v >> 24));
    bytes.push_back(std::uint8_t(v >> 16));
    bytes.push_back(std::uint8_t(v >> 8));
    bytes.push_back(std::uint8_t(v));
  }
  return fnv1a(kFnvOffset, bytes);
}

TableEmbedder::TableEmbedder(int dim,
                             std::unordered_map<std::uint64_t, std::vector<double>> table,
                             std::shared_ptr<const Embedder> fallback)
    : dim_(dim), table_(std::move(table)), fallback_(std::move(fallback)) {
  if (!fallback_) throw std::invalid_argument("table embedder needs a fallback");
  if (fallback_->dim() != dim_)
    throw std::invalid_argument("table/fallback dimension mismatch");
}

SemanticVector TableEmbedder::embed_window(std::span<const TokenId> window) const {
  const auto it = table_.find(window_key(window));
  if (it == table_.end()) {
    misses_.fetch_add(1, std::memory_order_relaxed);
    return fallback_->embed_window(window);
  }
  return SemanticVector(it->second);
}

std::shared_ptr<TableEmbedder> load_table(const std::string& path,
                                          std::shared_ptr<const Embedder> fallback) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding table: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("dim=", 0) != 0)
    throw std::runtime_error("embedding table missing dim= header: " + path);
  const int dim = std::stoi(header.substr(4));
  if (dim < 2) throw std::runtime_error("embedding table has invalid dimension");

  std::unordered_map<std::uint64_t, std::vector<double>> table;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string key_hex;
    row >> key_hex;
    std::uint64_t key = 0;
    try {
      std::size_t used = 0;
      key = std::stoull(key_hex, &used, 16);
      if (used != key_hex.size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw std::runtime_error("embedding table: bad key at line " + std::to_string(line_no));
    }
    std::vector<double> v;
    v.reserve(std::size_t(dim));
    double x;
    while (row >> x) v.push_back(x);
    if (int(v.size()) != dim)
      throw std::runtime_error("embedding table: dimension mismatch at line " +
                               std::to_string(line_no));
    table.emplace(key, std::move(v));
  }
  return std::make_shared<TableEmbedder>(dim, std::move(table), std::move(fallback));
}

void save_table(const std::string& path, int dim,
                const std::unordered_map<std::uint64_t, std::vector<double>>& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding table: " + path);
  out << "dim=" << dim << '\n';
  std::vector<std::uint64_t> keys;
  keys.reserve(table.size());
  for (const auto& [k, _] : table) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  char buf[40];
  for (std::uint64_t k : keys) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(k));
    out << buf;
    for (double x : table.at(k)) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      out << buf;
    }
    out << '\n';
  }
}

SemanticVector remote_embed(const std::string& text, const EmbedderConfig& config) {
  config.validate();
  // endpoint = scheme://host:port/path
  const auto path_pos = config.endpoint.find('/', config.endpoint.find("//") + 2);
  const std::string base =
      path_pos == std::string::npos ? config.endpoint : config.endpoint.substr(0, path_pos);
  const std::string path = path_pos == std::string::npos ? "/" : config.endpoint.substr(path_pos);

  nlohmann::json body;
  body["text"] = text;
  const std::string payload = body.dump();

  httplib::Result res;
  for (int attempt = 0; attempt < 2; ++attempt) {
    httplib::Client client(base);
    client.set_connection_timeout(0, config.timeout_ms * 1000);
    client.set_read_timeout(0, config.timeout_ms * 1000);
    client.set_write_timeout(0, config.timeout_ms * 1000);
    res = client.Post(path, payload, "application/json");
    const bool transient = !res || res->status >= 500;
    if (!transient) break;
  }
  if (!res) {
    const auto err = res.error();
    const bool timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    throw RemoteError(timeout ? RemoteError::Kind::kTimeout : RemoteError::Kind::kTransport,
                      "remote embedder: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300)
    throw RemoteError(RemoteError::Kind::kStatus,
                      "remote embedder: HTTP " + std::to_string(res->status));

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const std::exception& e) {
    throw RemoteError(RemoteError::Kind::kParse, std::string("remote embedder: ") + e.what());
  }
  if (!reply.contains("embedding") || !reply["embedding"].is_array())
    throw RemoteError(RemoteError::Kind::kParse, "remote embedder: missing embedding field");
  std::vector<double> v = reply["embedding"].get<std::vector<double>>();
  if (int(v.size()) != config.dimension)
    throw RemoteError(RemoteError::Kind::kDimension,
                      "remote embedder: expected dimension " + std::to_string(config.dimension) +
                          ", got " + std::to_string(v.size()));
  try {
    return SemanticVector(std::move(v));
  } catch (const std::exception& e) {
    throw RemoteError(RemoteError::Kind::kParse, std::string("remote embedder: ") + e.what());
  }
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config, Vocabulary vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
}

SemanticVector RemoteEmbedder::embed_window(std::span<const TokenId> window) const {
  return remote_embed(detokenize(TokenSeq(window.begin(), window.end()), vocab_), config_);
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderConfig& config,
                                              const Vocabulary& vocab) {
  config.validate();
  auto feature = std::make_shared<FeatureHashEmbedder>(config.dimension, config.ngram_min,
                                                       config.ngram_max, config.token_weights);
  switch (config.kind) {
    case EmbedderKind::kFeatureHash:
      return feature;
    case EmbedderKind::kTable:
      return load_table(config.table_path, feature);
    case EmbedderKind::kRemote:
      return std::make_shared<RemoteEmbedder>(config, vocab);
  }
  throw std::invalid_argument("unknown embedder kind");
}

std::vector<double> idf_weights(const std::vector<std::int64_t>& counts) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> w(counts.size(), 1.0);
  for (std::size_t i = 0; i < counts.size(); ++i)
    w[i] = std::log(1.0 + double(total) / (1.0 + double(counts[i])));
  return w;
}

SemanticVector embed_context(const Embedder& embedder, std::span<const TokenId> context,
                             int window, TokenId pad) {
  const TokenSeq w = window_before(context, context.size(), window, pad);
  return embedder.embed_window(w);
}

}  // namespace semkey
