#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "semkey/cost_dist.hpp"
#include "semkey/keymod.hpp"
#include "semkey/markmod.hpp"
#include "semkey/textmodel.hpp"

namespace semkey {

struct PositionScore {
  int idx = 0;      // candidate key index with the minimum cost
  double cost = 0;  // that minimum cost
};

struct DetectionReport {
  std::vector<PositionScore> per_position;
  double total_cost = 0.0;
  double mean_cost = 0.0;
  double p_value = 1.0;
  int n = 0;
  int k = 0;
  std::string scheme;

  std::string to_json() const;
  static DetectionReport from_json(const std::string& text);
};

// Scores every position of `tokens`: re-derives all k candidate keys from
// the preceding context (for watermax, from the context before the
// position's chunk), takes the minimum alignment cost across candidates,
// sums, and computes the scheme's p-value. A configuration mismatch with
// generation shows up as a high p-value, not an error.
DetectionReport detect(const TokenSeq& tokens, const KeyModule& key_module, Scheme scheme,
                       const MarkParams& params);

// Closed-form p-value for mean cost `a` of n min-of-k Exp(1) costs:
// 1 - e^{-kna} * sum_{m<n} (kna)^m / m!, evaluated in log space so n up to
// 1e4 cannot overflow. Equals the Gamma(shape n, rate kn) CDF at a.
double pvalue_gamma(double mean_cost, int n, int k);

// CDF of the minimum of k independent draws: F1(y) = 1 - (1 - F(y))^k on
// the same support. Continuous inputs must be discretized first.
CostDistribution min_of_k_cdf(const CostDistribution& dist, int k);

// P(sum of n i.i.d. draws from F1 <= total_cost), computed by n-1 discrete
// convolutions of the PMF. Probabilities below 1e-15 are pruned and the
// accumulated pruned mass is added to the result, keeping the p-value a
// conservative upper bound. Throws when intermediate support would exceed
// `support_cap` entries (use a coarser discretization).
double convolve_pvalue(double total_cost, int n, const CostDistribution& dist,
                       std::size_t support_cap = std::size_t(1) << 21);

// Exp(rate) binned on [0, cap]: mass per bin placed at the bin midpoint,
// plus a tail atom at cap.
CostDistribution discretize(double rate, int bins, double cap);

}  // namespace semkey
