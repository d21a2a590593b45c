#include "semkey/cost_dist.hpp"

#include <cmath>

namespace semkey {

CostDistribution CostDistribution::discrete(std::vector<double> support,
                                            std::vector<double> probs) {
  if (support.size() != probs.size() || support.empty())
    throw std::invalid_argument("discrete distribution needs matching nonempty support/probs");
  double sum = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (i > 0 && !(support[i] > support[i - 1]))
      throw std::invalid_argument("support must be strictly increasing");
    if (probs[i] < 0.0) throw std::invalid_argument("probabilities must be nonnegative");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("probabilities must sum to 1");
  CostDistribution d;
  d.kind = Kind::kDiscrete;
  d.support = std::move(support);
  d.probs = std::move(probs);
  return d;
}

CostDistribution CostDistribution::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be > 0");
  CostDistribution d;
  d.kind = Kind::kExponential;
  d.rate = rate;
  return d;
}

double CostDistribution::cdf(double y) const {
  if (kind == Kind::kExponential) return y <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * y);
  double acc = 0.0;
  for (std::size_t i = 0; i < support.size() && support[i] <= y; ++i) acc += probs[i];
  return acc;
}

}  // namespace semkey
