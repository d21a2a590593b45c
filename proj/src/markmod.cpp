#include "semkey/markmod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace semkey {

namespace {

Digest xi_block(const WatermarkKey& key, std::uint64_t block_index) {
  HashWriter w(HashDomain::kXiBlock);
  w.bytes(key.bytes).u64(block_index);
  return w.finish();
}

}  // namespace

Scheme scheme_from_name(const std::string& name) {
  if (name == "expmin") return Scheme::kExpMin;
  if (name == "tournament") return Scheme::kTournament;
  if (name == "watermax") return Scheme::kWaterMax;
  throw std::invalid_argument("unknown scheme: " + name);
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kExpMin: return "expmin";
    case Scheme::kTournament: return "tournament";
    case Scheme::kWaterMax: return "watermax";
  }
  throw std::invalid_argument("unknown scheme");
}

double xi(const WatermarkKey& key, TokenId token_id) {
  if (token_id < 0) throw std::invalid_argument("token id must be nonnegative");
  const Digest block = xi_block(key, std::uint64_t(token_id) / 4);
  const int lane = int(std::uint64_t(token_id) % 4);
  return u64_to_open_unit(load_u64_be(block.data() + 8 * lane));
}

std::vector<double> xi_fill(const WatermarkKey& key, TokenId count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  Digest block{};
  for (TokenId id = 0; id < count; ++id) {
    const int lane = int(std::uint64_t(id) % 4);
    if (lane == 0) block = xi_block(key, std::uint64_t(id) / 4);
    out[std::size_t(id)] = u64_to_open_unit(load_u64_be(block.data() + 8 * lane));
  }
  return out;
}

TokenId expmin_mark(const WatermarkKey& key, const ProbVector& dist) {
  const std::vector<double> u = xi_fill(key, TokenId(dist.size()));
  TokenId best = -1;
  double best_value = std::numeric_limits<double>::infinity();
  for (TokenId id = 0; id < TokenId(dist.size()); ++id) {
    const double p = dist[std::size_t(id)];
    if (p <= 0.0) continue;
    const double value = -std::log(u[std::size_t(id)]) / p;
    if (value < best_value) {
      best_value = value;
      best = id;
    }
  }
  if (best < 0) throw std::invalid_argument("expmin_mark: distribution has no positive mass");
  return best;
}

double expmin_cost(const WatermarkKey& key, TokenId token_id) {
  return -std::log(xi(key, token_id));
}

void TournamentParams::validate() const {
  if (m < 1) throw std::invalid_argument("tournament layers must be >= 1");
  if (m >= 30 || candidates() > max_candidates)
    throw std::invalid_argument("tournament candidate count exceeds the cap");
}

int tournament_g(const WatermarkKey& key, int layer, TokenId token_id) {
  HashWriter w(HashDomain::kTournamentG);
  w.bytes(key.bytes).u32(std::uint32_t(layer)).u32(std::uint32_t(token_id));
  return w.finish()[0] & 1;
}

TokenId tournament_mark(const WatermarkKey& key, const ProbVector& dist,
                        const TournamentParams& params) {
  params.validate();
  CounterStream draws(HashDomain::kTournamentDraw, key.bytes);
  std::vector<TokenId> round(std::size_t(params.candidates()));
  for (auto& c : round) c = sample_token(dist, draws.next_open_unit());

  for (int layer = 1; layer <= params.m; ++layer) {
    std::vector<TokenId> next(round.size() / 2);
    for (std::size_t pair = 0; pair < next.size(); ++pair) {
      const TokenId a = round[2 * pair];
      const TokenId b = round[2 * pair + 1];
      const int ga = tournament_g(key, layer, a);
      const int gb = tournament_g(key, layer, b);
      if (ga != gb) {
        next[pair] = ga > gb ? a : b;
      } else {
        HashWriter coin(HashDomain::kTournamentCoin);
        coin.bytes(key.bytes).u32(std::uint32_t(layer)).u32(std::uint32_t(pair));
        next[pair] = (coin.finish()[0] & 1) ? a : b;
      }
    }
    round = std::move(next);
  }
  return round[0];
}

double tournament_cost(const WatermarkKey& key, TokenId token_id,
                       const TournamentParams& params) {
  params.validate();
  int g_sum = 0;
  for (int layer = 1; layer <= params.m; ++layer) g_sum += tournament_g(key, layer, token_id);
  return double(params.m - g_sum);
}

void WatermaxParams::validate() const {
  if (n_drafts < 1) throw std::invalid_argument("n_drafts must be >= 1");
  if (chunk_len < 1) throw std::invalid_argument("chunk_len must be >= 1");
}

TokenSeq watermax_mark(std::span<const WatermarkKey> keys, const NgramModel& lm,
                       const TokenSeq& context, const WatermaxParams& params, double top_p,
                       Rng& rng) {
  params.validate();
  if (keys.empty()) throw std::invalid_argument("watermax_mark: needs at least one key");

  TokenSeq best_chunk;
  double best_score = -std::numeric_limits<double>::infinity();
  TokenSeq work;
  work.reserve(context.size() + keys.size());
  for (int draft = 0; draft < params.n_drafts; ++draft) {
    work = context;
    double score = 0.0;
    for (std::size_t t = 0; t < keys.size(); ++t) {
      const ProbVector dist = lm.next_dist(work, top_p);
      const TokenId tok = sample_token(dist, rng.uniform());
      score -= expmin_cost(keys[t], tok);
      work.push_back(tok);
    }
    if (score > best_score) {
      best_score = score;
      best_chunk.assign(work.begin() + std::ptrdiff_t(context.size()), work.end());
    }
  }
  return best_chunk;
}

CostDistribution null_cost_dist(Scheme scheme, const MarkParams& params) {
  switch (scheme) {
    case Scheme::kExpMin:
    case Scheme::kWaterMax:
      return CostDistribution::exponential(1.0);
    case Scheme::kTournament: {
      params.tournament.validate();
      const int m = params.tournament.m;
      std::vector<double> support, probs;
      double coeff = 1.0;  // C(m, c)
      for (int c = 0; c <= m; ++c) {
        support.push_back(double(c));
        probs.push_back(coeff * std::ldexp(1.0, -m));
        coeff = coeff * double(m - c) / double(c + 1);
      }
      return CostDistribution::discrete(std::move(support), std::move(probs));
    }
  }
  throw std::invalid_argument("unknown scheme");
}

double mark_cost(Scheme scheme, const MarkParams& params, const WatermarkKey& key,
                 TokenId token_id) {
  switch (scheme) {
    case Scheme::kExpMin:
    case Scheme::kWaterMax:
      return expmin_cost(key, token_id);
    case Scheme::kTournament:
      return tournament_cost(key, token_id, params.tournament);
  }
  throw std::invalid_argument("unknown scheme");
}

TokenId sample_token(const ProbVector& dist, double u) {
  double cum = 0.0;
  TokenId last_positive = -1;
  for (TokenId id = 0; id < TokenId(dist.size()); ++id) {
    const double p = dist[std::size_t(id)];
    if (p <= 0.0) continue;
    cum += p;
    last_positive = id;
    if (u < cum) return id;
  }
  if (last_positive < 0) throw std::invalid_argument("sample_token: no positive mass");
  return last_positive;  // u landed in the rounding slack at the top
}

}  // namespace semkey
