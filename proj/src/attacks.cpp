#include "semkey/attacks.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semkey {

namespace {

// First `count` entries of a seeded partial Fisher-Yates over `universe`.
std::vector<std::size_t> choose_positions(std::size_t universe, int count, Rng& rng) {
  std::vector<std::size_t> pool(universe);
  for (std::size_t i = 0; i < universe; ++i) pool[i] = i;
  for (int i = 0; i < count; ++i) {
    const auto j = std::size_t(i) + std::size_t(rng.uniform_int(universe - std::size_t(i)));
    std::swap(pool[std::size_t(i)], pool[j]);
  }
  std::vector<std::size_t> chosen(pool.begin(), pool.begin() + count);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

AttackKind attack_from_name(const std::string& name) {
  if (name == "none") return AttackKind::kNone;
  if (name == "unrelated_subst") return AttackKind::kUnrelatedSubst;
  if (name == "related_subst") return AttackKind::kRelatedSubst;
  if (name == "synonym_paraphrase") return AttackKind::kSynonymParaphrase;
  throw std::invalid_argument("unknown attack kind: " + name);
}

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kUnrelatedSubst: return "unrelated_subst";
    case AttackKind::kRelatedSubst: return "related_subst";
    case AttackKind::kSynonymParaphrase: return "synonym_paraphrase";
  }
  throw std::invalid_argument("unknown attack kind");
}

void AttackSpec::validate(std::size_t n_tokens) const {
  if (count < 0 || std::size_t(count) > n_tokens)
    throw std::invalid_argument("attack count exceeds the sequence length");
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("attack rate must be in [0, 1]");
}

TokenSeq unrelated_subst(const TokenSeq& tokens, int count, const Vocabulary& vocab, Rng& rng) {
  if (count < 0 || std::size_t(count) > tokens.size())
    throw std::invalid_argument("count exceeds the sequence length");
  TokenSeq out = tokens;
  if (count == 0) return out;
  for (std::size_t pos : choose_positions(tokens.size(), count, rng))
    out[pos] = TokenId(rng.uniform_int(std::uint64_t(vocab.size())));
  return out;
}

RelatedSubstResult related_subst(const TokenSeq& tokens, int count, const NgramModel& lm,
                                 Rng& rng) {
  const std::size_t first_eligible = std::size_t(lm.order());
  if (tokens.size() < first_eligible || count < 0 ||
      std::size_t(count) > tokens.size() - first_eligible)
    throw std::invalid_argument("count exceeds the eligible positions");

  RelatedSubstResult result;
  result.tokens = tokens;
  if (count == 0) return result;

  auto chosen = choose_positions(tokens.size() - first_eligible, count, rng);
  const std::span<const TokenId> all(result.tokens);
  for (std::size_t offset : chosen) {
    const std::size_t pos = offset + first_eligible;
    const ProbVector dist = lm.next_dist(all.subspan(0, pos), 1.0);
    const TokenId original = result.tokens[pos];
    TokenId best = -1;
    double best_p = -1.0;
    for (TokenId id = 0; id < TokenId(dist.size()); ++id) {
      if (id == original) continue;
      if (dist[std::size_t(id)] > best_p) {
        best_p = dist[std::size_t(id)];
        best = id;
      }
    }
    if (best < 0) {
      ++result.skipped;
      continue;
    }
    result.tokens[pos] = best;
  }
  return result;
}

TokenSeq synonym_paraphrase(const TokenSeq& tokens, const SynonymTable& table, double rate,
                            Rng& rng) {
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("rate must be in [0, 1]");
  TokenSeq out = tokens;
  for (auto& tok : out) {
    const auto it = table.find(tok);
    if (it == table.end() || it->second.empty()) continue;
    if (rng.uniform() < rate)
      tok = it->second[std::size_t(rng.uniform_int(it->second.size()))];
  }
  return out;
}

SynonymTable build_synonym_table(const Vocabulary& vocab, const FeatureHashEmbedder& embedder) {
  std::map<std::pair<std::uint32_t, int>, std::vector<TokenId>> groups;
  for (TokenId id = 0; id < vocab.size() - 1; ++id)  // exclude the sentinel
    groups[embedder.unigram_signature(id)].push_back(id);
  SynonymTable table;
  for (const auto& [sig, members] : groups) {
    if (members.size() < 2) continue;
    for (TokenId id : members) {
      auto& list = table[id];
      for (TokenId other : members)
        if (other != id) list.push_back(other);
    }
  }
  return table;
}

SynonymTable load_synonym_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synonym table: " + path);
  SynonymTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("synonym table: missing ':' at line " + std::to_string(line_no));
    std::vector<TokenId> ids;
    TokenId key;
    try {
      std::size_t used = 0;
      key = std::stoi(line.substr(0, colon), &used);
      std::istringstream rest(line.substr(colon + 1));
      std::string field;
      while (rest >> field) ids.push_back(std::stoi(field, &used));
    } catch (const std::exception&) {
      throw std::runtime_error("synonym table: bad token id at line " + std::to_string(line_no));
    }
    table[key] = std::move(ids);
  }
  return table;
}

void save_synonym_table(const std::string& path, const SynonymTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write synonym table: " + path);
  for (const auto& [id, synonyms] : table) {
    out << id << ':';
    for (TokenId s : synonyms) out << ' ' << s;
    out << '\n';
  }
}

TokenSeq apply_attack(const AttackSpec& spec, const TokenSeq& tokens, const AttackContext& ctx) {
  spec.validate(tokens.size());
  Rng rng(spec.seed);
  switch (spec.kind) {
    case AttackKind::kNone:
      return tokens;
    case AttackKind::kUnrelatedSubst:
      if (!ctx.vocab) throw std::invalid_argument("unrelated_subst needs a vocabulary");
      return unrelated_subst(tokens, spec.count, *ctx.vocab, rng);
    case AttackKind::kRelatedSubst:
      if (!ctx.lm) throw std::invalid_argument("related_subst needs a language model");
      return related_subst(tokens, spec.count, *ctx.lm, rng).tokens;
    case AttackKind::kSynonymParaphrase:
      if (!ctx.synonyms) throw std::invalid_argument("synonym_paraphrase needs a table");
      return synonym_paraphrase(tokens, *ctx.synonyms, spec.rate, rng);
  }
  throw std::invalid_argument("unknown attack kind");
}

}  // namespace semkey
