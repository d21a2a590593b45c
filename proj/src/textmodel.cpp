#include "semkey/textmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace semkey {

namespace {

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string context_key(std::span<const TokenId> context) {
  std::string key;
  key.resize(context.size() * 4);
  for (std::size_t i = 0; i < context.size(); ++i) {
    const auto v = std::uint32_t(context[i]);
    key[4 * i] = char(v >> 24);
    key[4 * i + 1] = char(v >> 16);
    key[4 * i + 2] = char(v >> 8);
    key[4 * i + 3] = char(v);
  }
  return key;
}

}  // namespace

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string chunk;
  while (in >> chunk) {
    std::size_t begin = 0;
    std::size_t end = chunk.size();
    while (begin < end && is_punct(chunk[begin])) words.emplace_back(1, chunk[begin++]);
    std::vector<std::string> trailing;
    while (end > begin && is_punct(chunk[end - 1])) trailing.emplace_back(1, chunk[--end]);
    if (end > begin) words.push_back(chunk.substr(begin, end - begin));
    words.insert(words.end(), trailing.rbegin(), trailing.rend());
  }
  return words;
}

Vocabulary Vocabulary::from_documents(std::span<const std::string> documents) {
  std::vector<std::string> words;
  for (const auto& doc : documents) {
    auto w = split_words(doc);
    words.insert(words.end(), w.begin(), w.end());
  }
  return from_tokens(words);
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const auto& w : tokens) {
    if (w == kSentinelToken) continue;
    auto [it, inserted] = v.index_.try_emplace(w, TokenId(v.tokens_.size()));
    if (inserted) {
      v.tokens_.push_back(w);
      v.counts_.push_back(0);
    }
    ++v.counts_[std::size_t(it->second)];
  }
  v.index_.emplace(kSentinelToken, TokenId(v.tokens_.size()));
  v.tokens_.emplace_back(kSentinelToken);
  v.counts_.push_back(0);
  if (v.size() < 2) throw std::invalid_argument("vocabulary needs at least 2 tokens");
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (v.index_.count(line)) throw std::runtime_error("duplicate vocabulary token: " + line);
    v.index_.emplace(line, TokenId(v.tokens_.size()));
    v.tokens_.push_back(line);
    v.counts_.push_back(0);
  }
  // The sentinel must sit at id V-1; append it for files that omit it.
  if (v.tokens_.empty() || v.tokens_.back() != kSentinelToken) {
    if (v.index_.count(kSentinelToken))
      throw std::runtime_error("sentinel token present but not last in: " + path);
    v.index_.emplace(kSentinelToken, TokenId(v.tokens_.size()));
    v.tokens_.emplace_back(kSentinelToken);
    v.counts_.push_back(0);
  }
  if (v.size() < 2) throw std::runtime_error("vocabulary file too small: " + path);
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? sentinel_id() : it->second;
}

TokenSeq tokenize(const std::string& text, const Vocabulary& vocab) {
  TokenSeq ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id_of(w));
  return ids;
}

std::string detokenize(const TokenSeq& tokens, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += vocab.token(tokens[i]);
  }
  return out;
}

TokenSeq window_before(std::span<const TokenId> context, std::size_t end, int window,
                       TokenId pad) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  end = std::min(end, context.size());
  TokenSeq out(std::size_t(window), pad);
  const std::size_t take = std::min(std::size_t(window), end);
  for (std::size_t i = 0; i < take; ++i)
    out[std::size_t(window) - take + i] = context[end - take + i];
  return out;
}

ProbVector nucleus_truncate(const ProbVector& probs, double top_p) {
  if (!(top_p > 0.0) || top_p > 1.0)
    throw std::invalid_argument("top_p must be in (0, 1]");
  if (top_p == 1.0) return probs;

  std::vector<TokenId> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    if (probs[std::size_t(a)] != probs[std::size_t(b)]) return probs[std::size_t(a)] > probs[std::size_t(b)];
    return a < b;
  });

  ProbVector out(probs.size(), 0.0);
  double kept = 0.0;
  for (TokenId id : order) {
    out[std::size_t(id)] = probs[std::size_t(id)];
    kept += probs[std::size_t(id)];
    if (kept >= top_p) break;
  }
  for (double& p : out) p /= kept;
  return out;
}

NgramModel train_ngram(const TokenSeq& corpus, const Vocabulary& vocab, int order,
                       double smoothing) {
  if (order < 1) throw std::invalid_argument("context order must be >= 1");
  if (!(smoothing > 0.0)) throw std::invalid_argument("smoothing must be > 0");
  if (corpus.size() < std::size_t(order) + 1)
    throw std::invalid_argument("corpus shorter than the model order");

  NgramModel m;
  m.order_ = order;
  m.smoothing_ = smoothing;
  m.vocab_ = vocab;
  const std::span<const TokenId> ids(corpus);
  for (std::size_t i = std::size_t(order); i < ids.size(); ++i) {
    const auto ctx = ids.subspan(i - std::size_t(order), std::size_t(order));
    const std::string key = context_key(ctx);
    ++m.counts_[key][ids[i]];
    ++m.context_totals_[key];
  }
  return m;
}

ProbVector NgramModel::raw_dist(std::span<const TokenId> context) const {
  const TokenSeq padded = window_before(context, context.size(), order_, vocab_.sentinel_id());
  const std::string key = context_key(padded);

  const double v = double(vocab_.size());
  ProbVector probs(std::size_t(vocab_.size()), 0.0);
  const auto tot_it = context_totals_.find(key);
  const double total = tot_it == context_totals_.end() ? 0.0 : double(tot_it->second);
  const double denom = total + smoothing_ * v;
  for (double& p : probs) p = smoothing_ / denom;
  if (tot_it != context_totals_.end()) {
    for (const auto& [id, c] : counts_.at(key)) probs[std::size_t(id)] += double(c) / denom;
  }
  return probs;
}

ProbVector NgramModel::next_dist(std::span<const TokenId> context, double top_p) const {
  return nucleus_truncate(raw_dist(context), top_p);
}

double NgramModel::perplexity(std::span<const TokenId> tokens) const {
  if (tokens.size() < std::size_t(order_) + 1)
    throw std::invalid_argument("sequence too short to score under the model order");
  double nll = 0.0;
  std::size_t n = 0;
  for (std::size_t i = std::size_t(order_); i < tokens.size(); ++i) {
    const ProbVector p = raw_dist(tokens.subspan(0, i));
    nll += -std::log(p[std::size_t(tokens[i])]);
    ++n;
  }
  return std::exp(nll / double(n));
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  Corpus c;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) c.documents.push_back(line);
  }
  if (c.documents.empty()) throw std::runtime_error("corpus file is empty: " + path);
  c.vocab = Vocabulary::from_documents(c.documents);
  for (const auto& doc : c.documents) {
    if (!c.train_sequence.empty()) c.train_sequence.push_back(c.vocab.sentinel_id());
    const TokenSeq ids = tokenize(doc, c.vocab);
    c.train_sequence.insert(c.train_sequence.end(), ids.begin(), ids.end());
  }
  return c;
}

}  // namespace semkey
