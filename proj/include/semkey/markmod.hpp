#pragma once

#include <span>
#include <string>
#include <vector>

#include "semkey/cost_dist.hpp"
#include "semkey/keymod.hpp"
#include "semkey/rng.hpp"
#include "semkey/textmodel.hpp"

namespace semkey {

enum class Scheme { kExpMin, kTournament, kWaterMax };

Scheme scheme_from_name(const std::string& name);  // expmin | tournament | watermax
std::string scheme_name(Scheme s);

// Keyed per-token uniform in the open interval (0,1): lane `token_id % 4`
// of counter-mode PRF block `token_id / 4`, 53-bit resolution.
double xi(const WatermarkKey& key, TokenId token_id);

// xi for ids 0..count-1 in one pass (4 ids per PRF block).
std::vector<double> xi_fill(const WatermarkKey& key, TokenId count);

// Exponential-minimum sampling: argmin over tokens with p_i > 0 of
// -log(xi_i)/p_i. Ties break toward the lower id. The selected token is
// distributed exactly according to `dist`.
TokenId expmin_mark(const WatermarkKey& key, const ProbVector& dist);

// Alignment cost -log(xi): Exp(1) under a key that did not generate the
// token, biased low under the generating key.
double expmin_cost(const WatermarkKey& key, TokenId token_id);

struct TournamentParams {
  int m = 3;                // knockout layers; 2^m candidates
  int max_candidates = 64;  // cap on 2^m

  int candidates() const { return 1 << m; }
  void validate() const;
};

// g-bit of `token_id` at knockout layer `layer` (1-based) under `key`.
int tournament_g(const WatermarkKey& key, int layer, TokenId token_id);

// Draws 2^m candidates i.i.d. from `dist` (seeded by the key) and runs m
// knockout layers; the winner of a pair is the token with the higher
// g-bit, ties resolved by a key-seeded coin.
TokenId tournament_mark(const WatermarkKey& key, const ProbVector& dist,
                        const TournamentParams& params);

// Cost m - sum of g-bits, in {0..m}; Binomial(m, 1/2) under a null key.
double tournament_cost(const WatermarkKey& key, TokenId token_id,
                       const TournamentParams& params);

struct WatermaxParams {
  int n_drafts = 8;
  int chunk_len = 16;

  void validate() const;
};

// Samples n_drafts chunks of keys.size() tokens by plain top-p sampling
// (draft randomness comes from `rng`, independent of the keys), scores
// each chunk by the negated sum of expmin costs under the per-position
// keys, and returns the best chunk. Detection reuses expmin_cost.
TokenSeq watermax_mark(std::span<const WatermarkKey> keys, const NgramModel& lm,
                       const TokenSeq& context, const WatermaxParams& params, double top_p,
                       Rng& rng);

struct MarkParams {
  TournamentParams tournament{};
  WatermaxParams watermax{};
};

// Per-token null alignment-cost distribution of a scheme: exact discrete
// for tournament, Exp(1) tag for expmin and watermax.
CostDistribution null_cost_dist(Scheme scheme, const MarkParams& params);

// MarkCost dispatch: the scheme's alignment cost of one token under one
// candidate key.
double mark_cost(Scheme scheme, const MarkParams& params, const WatermarkKey& key,
                 TokenId token_id);

// Inverse-CDF draw from a distribution using uniform u in [0,1).
TokenId sample_token(const ProbVector& dist, double u);

}  // namespace semkey
