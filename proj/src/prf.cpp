#include "semkey/prf.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semkey {

std::vector<double> gaussian_from_seed(std::span<const std::uint8_t> seed, int d) {
  if (d < 1) throw std::invalid_argument("gaussian_from_seed: d must be >= 1");
  CounterStream stream(HashDomain::kGaussBlock, seed);
  std::vector<double> out;
  out.reserve(std::size_t(d));
  while (int(out.size()) < d) {
    const double u1 = u64_to_left_open_unit(stream.next_u64());
    const double u2 = u64_to_open_unit(stream.next_u64());
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    out.push_back(radius * std::cos(theta));
    if (int(out.size()) < d) out.push_back(radius * std::sin(theta));
  }
  return out;
}

}  // namespace semkey
