#pragma once

#include <stdexcept>
#include <vector>

namespace semkey {

// Null distribution of a per-token alignment cost: either an explicit
// discrete distribution (strictly increasing support, probs summing to 1)
// or a tagged Exp(rate), which callers discretize for the generic engine.
struct CostDistribution {
  enum class Kind { kDiscrete, kExponential };

  Kind kind = Kind::kDiscrete;
  std::vector<double> support;
  std::vector<double> probs;
  double rate = 0.0;

  static CostDistribution discrete(std::vector<double> support, std::vector<double> probs);
  static CostDistribution exponential(double rate);

  bool is_discrete() const { return kind == Kind::kDiscrete; }

  // P(cost <= y).
  double cdf(double y) const;
};

}  // namespace semkey
