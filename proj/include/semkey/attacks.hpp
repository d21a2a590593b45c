#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semkey/embed.hpp"
#include "semkey/rng.hpp"
#include "semkey/textmodel.hpp"

namespace semkey {

enum class AttackKind { kNone, kUnrelatedSubst, kRelatedSubst, kSynonymParaphrase };

AttackKind attack_from_name(const std::string& name);
std::string attack_name(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  int count = 0;      // substitution attacks
  double rate = 0.0;  // synonym paraphrase
  std::uint64_t seed = 0;

  void validate(std::size_t n_tokens) const;
};

// Replaces `count` distinct uniformly chosen positions with uniform
// vocabulary ids. Length-preserving.
TokenSeq unrelated_subst(const TokenSeq& tokens, int count, const Vocabulary& vocab, Rng& rng);

struct RelatedSubstResult {
  TokenSeq tokens;
  int skipped = 0;  // positions with no distinct replacement available
};

// Replaces `count` distinct positions (those with a full left context)
// with the most probable token under the language model that differs from
// the original. Length-preserving.
RelatedSubstResult related_subst(const TokenSeq& tokens, int count, const NgramModel& lm,
                                 Rng& rng);

// token id -> replacement candidates with similar built-in embeddings.
using SynonymTable = std::map<TokenId, std::vector<TokenId>>;

// Replaces each token that has synonyms with probability `rate` by a
// uniformly chosen entry. Length-preserving.
TokenSeq synonym_paraphrase(const TokenSeq& tokens, const SynonymTable& table, double rate,
                            Rng& rng);

// Groups vocabulary tokens whose unigram features share a signed hash
// bucket; every token in a group of >= 2 maps to the others.
SynonymTable build_synonym_table(const Vocabulary& vocab, const FeatureHashEmbedder& embedder);

// File format: one line per entry, "<token_id>: <id> <id> ...".
SynonymTable load_synonym_table(const std::string& path);
void save_synonym_table(const std::string& path, const SynonymTable& table);

struct AttackContext {
  const Vocabulary* vocab = nullptr;
  const NgramModel* lm = nullptr;
  const SynonymTable* synonyms = nullptr;
};

TokenSeq apply_attack(const AttackSpec& spec, const TokenSeq& tokens, const AttackContext& ctx);

}  // namespace semkey
