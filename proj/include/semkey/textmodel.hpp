#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace semkey {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Probability distribution over the vocabulary: entries >= 0, sum 1.
using ProbVector = std::vector<double>;

inline constexpr const char* kSentinelToken = "<unk>";

// Finite vocabulary with a bijective token<->id map. The sentinel token
// (out-of-vocabulary and begin-of-sequence padding) is always id V-1.
class Vocabulary {
 public:
  // Builds from raw text documents in first-appearance order, then appends
  // the sentinel. `counts()` records corpus frequencies per id.
  static Vocabulary from_documents(std::span<const std::string> documents);
  static Vocabulary from_tokens(std::span<const std::string> tokens);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  TokenId size() const { return TokenId(tokens_.size()); }
  TokenId sentinel_id() const { return size() - 1; }
  const std::string& token(TokenId id) const { return tokens_.at(std::size_t(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Id for the token string; OOV maps to the sentinel.
  TokenId id_of(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  const std::vector<std::int64_t>& counts() const { return counts_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<std::int64_t> counts_;
};

// Whitespace/punctuation word splitting (vocabulary-independent).
std::vector<std::string> split_words(const std::string& text);

TokenSeq tokenize(const std::string& text, const Vocabulary& vocab);
std::string detokenize(const TokenSeq& tokens, const Vocabulary& vocab);

// Last `window` ids of `context` ending at `end`, left-padded with `pad`.
TokenSeq window_before(std::span<const TokenId> context, std::size_t end, int window, TokenId pad);

// Additive-smoothed n-gram model over a fixed vocabulary. `order` is the
// context length: order 1 conditions on one previous token. Immutable
// after training; safe for concurrent reads.
class NgramModel {
 public:
  static constexpr int kDefaultOrder = 3;
  static constexpr double kDefaultSmoothing = 0.1;

  int order() const { return order_; }
  double smoothing() const { return smoothing_; }
  const Vocabulary& vocab() const { return vocab_; }

  // Conditional distribution for the next token after `context` (shorter
  // contexts are left-padded with the sentinel), truncated to the top-p
  // nucleus and renormalized. top_p = 1 returns the raw distribution.
  ProbVector next_dist(std::span<const TokenId> context, double top_p) const;

  // exp(mean negative log-likelihood) over positions order..|tokens|.
  double perplexity(std::span<const TokenId> tokens) const;

  friend NgramModel train_ngram(const TokenSeq&, const Vocabulary&, int, double);

 private:
  ProbVector raw_dist(std::span<const TokenId> context) const;

  int order_ = kDefaultOrder;
  double smoothing_ = kDefaultSmoothing;
  Vocabulary vocab_;
  std::unordered_map<std::string, std::unordered_map<TokenId, std::int64_t>> counts_;
  std::unordered_map<std::string, std::int64_t> context_totals_;
};

// Maximum-likelihood counts with additive smoothing. Throws
// std::invalid_argument when the corpus is shorter than the order.
NgramModel train_ngram(const TokenSeq& corpus, const Vocabulary& vocab, int order,
                       double smoothing);

// Removes smallest-probability tokens until the retained mass reaches
// top_p, then renormalizes. Boundary ties keep the lower token id first.
ProbVector nucleus_truncate(const ProbVector& probs, double top_p);

// Reads a corpus file (one document per line) and returns one training
// sequence with sentinel separators between documents.
struct Corpus {
  std::vector<std::string> documents;
  Vocabulary vocab;
  TokenSeq train_sequence;
};
Corpus load_corpus(const std::string& path);

}  // namespace semkey
