#include "semkey/detect.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <unordered_set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace semkey {

namespace {

constexpr double kPruneThreshold = 1e-15;

double inclusion_boundary(double total_cost) {
  return total_cost + 1e-9 * (1.0 + std::abs(total_cost));
}

// ---- closed-form Gamma CDF -------------------------------------------------

// Lower regularized incomplete gamma P(n, x) for integer n, split into the
// stable branch per tail.
double gamma_cdf_integer_shape(int n, double x) {
  if (x <= 0.0) return 0.0;
  const double log_x = std::log(x);
  if (x < double(n)) {
    // p = e^{-x} x^n / n! * sum_j x^j / ((n+1)...(n+j)); accurate for tiny p.
    double term = 1.0;
    double sum = 1.0;
    for (int j = 1; j < 10000; ++j) {
      term *= x / double(n + j);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    const double log_p = double(n) * log_x - x - std::lgamma(double(n) + 1.0) + std::log(sum);
    return std::exp(log_p);
  }
  // p = 1 - e^{-x} sum_{m<n} x^m / m!, each term evaluated in log space.
  double sum = 0.0;
  for (int m = 0; m < n; ++m)
    sum += std::exp(double(m) * log_x - x - std::lgamma(double(m) + 1.0));
  return std::clamp(1.0 - sum, 0.0, 1.0);
}

// ---- dense convolution helpers ----------------------------------------------

void fft_inplace(std::vector<std::complex<double>>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (invert ? -2.0 : 2.0) * 3.14159265358979323846 / double(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (invert)
    for (auto& x : a) x /= double(n);
}

std::vector<double> dense_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t out_len = a.size() + b.size() - 1;
  if (a.size() * b.size() <= (std::size_t(1) << 20)) {
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) continue;
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
  }
  std::size_t fft_len = 1;
  while (fft_len < out_len) fft_len <<= 1;
  std::vector<std::complex<double>> fa(fft_len), fb(fft_len);
  std::copy(a.begin(), a.end(), fa.begin());
  std::copy(b.begin(), b.end(), fb.begin());
  fft_inplace(fa, false);
  fft_inplace(fb, false);
  for (std::size_t i = 0; i < fft_len; ++i) fa[i] *= fb[i];
  fft_inplace(fa, true);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

// PMF on the lattice {origin + i*h}.
struct LatticePmf {
  double origin = 0.0;
  double h = 1.0;
  std::vector<double> p;
};

// Conservative bookkeeping shared by one query.
struct MassLedger {
  double pruned = 0.0;  // fate unknown: added to the p-value
  double truncated = 0.0;  // provably above the query point: excluded
};

LatticePmf lattice_multiply(const LatticePmf& a, const LatticePmf& b, double boundary,
                            MassLedger& ledger, std::size_t support_cap) {
  LatticePmf out;
  out.h = a.h;
  out.origin = a.origin + b.origin;
  if (a.p.empty() || b.p.empty()) return out;
  const double max_offset = boundary - out.origin;
  if (max_offset < -1e-12) {
    // Everything the product could produce lies above the query point.
    double mass_a = 0.0, mass_b = 0.0;
    for (double x : a.p) mass_a += x;
    for (double y : b.p) mass_b += y;
    ledger.truncated += mass_a * mass_b;
    return out;
  }
  const auto limit = std::size_t(std::floor(max_offset / out.h + 1e-9)) + 1;
  if (limit > support_cap)
    throw std::runtime_error(
        "convolution support exceeds the cap; use a coarser discretization");
  std::vector<double> full = dense_convolve(a.p, b.p);
  const std::size_t keep = std::min(limit, full.size());
  out.p.assign(full.begin(), full.begin() + std::ptrdiff_t(keep));
  for (std::size_t i = keep; i < full.size(); ++i) ledger.truncated += std::max(full[i], 0.0);
  for (double& v : out.p) {
    if (v < kPruneThreshold) {
      ledger.pruned += std::abs(v);
      v = 0.0;
    }
  }
  while (!out.p.empty() && out.p.back() == 0.0) out.p.pop_back();
  return out;
}

double lattice_engine(double total_cost, int n, const CostDistribution& dist,
                      std::size_t support_cap, bool& representable) {
  const double boundary = inclusion_boundary(total_cost);
  // Infer the lattice from the minimum support gap.
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < dist.support.size(); ++i)
    h = std::min(h, dist.support[i] - dist.support[i - 1]);
  if (!(h > 0.0) || !std::isfinite(h)) {
    representable = false;
    return 0.0;
  }
  const double origin = dist.support.front();
  std::size_t max_index = 0;
  for (double x : dist.support) {
    const double offset = (x - origin) / h;
    const auto idx = std::llround(offset);
    if (idx < 0 || std::abs(offset - double(idx)) > 1e-6) {
      representable = false;
      return 0.0;
    }
    max_index = std::max(max_index, std::size_t(idx));
  }
  if (max_index + 1 > support_cap)
    throw std::runtime_error(
        "convolution support exceeds the cap; use a coarser discretization");
  representable = true;

  MassLedger ledger;
  LatticePmf base;
  base.origin = origin;
  base.h = h;
  base.p.assign(max_index + 1, 0.0);
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    const auto idx = std::size_t(std::llround((dist.support[i] - origin) / h));
    base.p[idx] += dist.probs[i];
  }
  // Pre-truncate the base itself.
  {
    LatticePmf trimmed;
    trimmed.origin = base.origin;
    trimmed.h = base.h;
    const double max_offset = boundary - base.origin;
    const std::size_t keep =
        max_offset < 0 ? 0 : std::min(base.p.size(), std::size_t(std::floor(max_offset / h + 1e-9)) + 1);
    trimmed.p.assign(base.p.begin(), base.p.begin() + std::ptrdiff_t(keep));
    for (std::size_t i = keep; i < base.p.size(); ++i) ledger.truncated += base.p[i];
    base = std::move(trimmed);
  }

  // base^n by exponentiation: every step is still a discrete PMF
  // convolution, just fewer of them than the naive n-1 chain.
  LatticePmf acc;
  bool acc_set = false;
  LatticePmf power = base;
  int remaining = n;
  while (remaining > 0) {
    if (remaining & 1) {
      if (!acc_set) {
        acc = power;
        acc_set = true;
      } else {
        acc = lattice_multiply(acc, power, boundary, ledger, support_cap);
      }
    }
    remaining >>= 1;
    if (remaining > 0) power = lattice_multiply(power, power, boundary, ledger, support_cap);
  }

  double p = 0.0;
  for (double v : acc.p) p += v;
  return std::clamp(p + ledger.pruned, 0.0, 1.0);
}

double exact_engine(double total_cost, int n, const CostDistribution& dist,
                    std::size_t support_cap) {
  const double boundary = inclusion_boundary(total_cost);
  MassLedger ledger;
  std::map<double, double> cur;
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    if (dist.support[i] <= boundary)
      cur[dist.support[i]] += dist.probs[i];
    else
      ledger.truncated += dist.probs[i];
  }
  for (int step = 2; step <= n; ++step) {
    std::map<double, double> next;
    for (const auto& [va, pa] : cur) {
      for (std::size_t i = 0; i < dist.support.size(); ++i) {
        const double v = va + dist.support[i];
        const double mass = pa * dist.probs[i];
        if (v <= boundary)
          next[v] += mass;
        else
          ledger.truncated += mass;
      }
    }
    for (auto it = next.begin(); it != next.end();) {
      if (it->second < kPruneThreshold) {
        ledger.pruned += it->second;
        it = next.erase(it);
      } else {
        ++it;
      }
    }
    if (next.size() > support_cap)
      throw std::runtime_error(
          "convolution support exceeds the cap; use a coarser discretization");
    cur = std::move(next);
  }
  double p = 0.0;
  for (const auto& [v, mass] : cur) p += mass;
  return std::clamp(p + ledger.pruned, 0.0, 1.0);
}

}  // namespace

double pvalue_gamma(double mean_cost, int n, int k) {
  if (mean_cost < 0.0) throw std::invalid_argument("mean cost must be >= 0");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return gamma_cdf_integer_shape(n, double(k) * double(n) * mean_cost);
}

CostDistribution min_of_k_cdf(const CostDistribution& dist, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!dist.is_discrete())
    throw std::invalid_argument(
        "min_of_k_cdf needs a discrete distribution; discretize the continuous tag first");
  std::vector<double> probs(dist.probs.size());
  double prev_cdf = 0.0;
  double cum = 0.0;
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    cum += dist.probs[i];
    const double cdf_min = 1.0 - std::pow(1.0 - std::min(cum, 1.0), k);
    probs[i] = cdf_min - prev_cdf;
    prev_cdf = cdf_min;
  }
  return CostDistribution::discrete(dist.support, std::move(probs));
}

double convolve_pvalue(double total_cost, int n, const CostDistribution& dist,
                       std::size_t support_cap) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!dist.is_discrete())
    throw std::invalid_argument(
        "convolve_pvalue needs a discrete distribution; discretize the continuous tag first");
  if (dist.support.front() < -1e-12)
    throw std::invalid_argument("alignment costs must be nonnegative");
  if (n == 1) return dist.cdf(inclusion_boundary(total_cost));

  if (dist.support.size() > 64) {
    bool representable = false;
    const double p = lattice_engine(total_cost, n, dist, support_cap, representable);
    if (representable) return p;
  }
  return exact_engine(total_cost, n, dist, support_cap);
}

CostDistribution discretize(double rate, int bins, double cap) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be > 0");
  if (bins < 10) throw std::invalid_argument("bins must be >= 10");
  if (!(cap > 0.0)) throw std::invalid_argument("cap must be > 0");
  const double h = cap / double(bins);
  std::vector<double> support, probs;
  support.reserve(std::size_t(bins) + 1);
  probs.reserve(std::size_t(bins) + 1);
  for (int i = 0; i < bins; ++i) {
    support.push_back((double(i) + 0.5) * h);
    probs.push_back(std::exp(-rate * double(i) * h) - std::exp(-rate * double(i + 1) * h));
  }
  support.push_back(cap);
  probs.push_back(std::exp(-rate * cap));
  return CostDistribution::discrete(std::move(support), std::move(probs));
}

DetectionReport detect(const TokenSeq& tokens, const KeyModule& key_module, Scheme scheme,
                       const MarkParams& params) {
  if (tokens.empty()) throw std::invalid_argument("detect: token sequence is empty");
  const int k = key_module.num_indices();
  const std::size_t chunk_len =
      scheme == Scheme::kWaterMax ? std::size_t(params.watermax.chunk_len) : 0;

  DetectionReport report;
  report.n = int(tokens.size());
  report.k = k;
  report.scheme = scheme_name(scheme);
  report.per_position.reserve(tokens.size());

  std::vector<WatermarkKey> cached_keys(static_cast<std::size_t>(k));
  std::size_t cached_end = std::numeric_limits<std::size_t>::max();
  const std::span<const TokenId> all(tokens);

  // Positions whose candidate key set and token coincide repeat the exact
  // same costs, so they carry no independent evidence; the p-value is
  // computed over distinct (key set, token) units to keep the null model's
  // independence assumption valid (e.g. under a fixed key, a token that
  // appears five times scores once).
  std::unordered_set<std::string> seen_units;
  int n_units = 0;
  double total_units = 0.0;

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t ctx_end = scheme == Scheme::kWaterMax ? (i / chunk_len) * chunk_len : i;
    if (ctx_end != cached_end) {
      for (int idx = 1; idx <= k; ++idx)
        cached_keys[std::size_t(idx - 1)] = key_module.derive(all.subspan(0, ctx_end), idx);
      cached_end = ctx_end;
    }
    PositionScore best{0, std::numeric_limits<double>::infinity()};
    for (int idx = 1; idx <= k; ++idx) {
      const double cand = mark_cost(scheme, params, cached_keys[std::size_t(idx - 1)], tokens[i]);
      if (cand < best.cost) best = {idx, cand};
    }
    report.per_position.push_back(best);
    report.total_cost += best.cost;

    std::string unit;
    unit.reserve(std::size_t(k) * 32 + 4);
    for (const auto& key : cached_keys)
      unit.append(reinterpret_cast<const char*>(key.bytes.data()), key.bytes.size());
    const auto tok = std::uint32_t(tokens[i]);
    for (int shift = 24; shift >= 0; shift -= 8) unit.push_back(char(tok >> shift));
    if (seen_units.insert(std::move(unit)).second) {
      ++n_units;
      total_units += best.cost;
    }
  }
  report.mean_cost = report.total_cost / double(report.n);

  if (scheme == Scheme::kTournament) {
    const CostDistribution f1 = min_of_k_cdf(null_cost_dist(scheme, params), k);
    report.p_value = convolve_pvalue(total_units, n_units, f1);
  } else {
    report.p_value = pvalue_gamma(total_units / double(n_units), n_units, k);
  }
  return report;
}

std::string DetectionReport::to_json() const {
  nlohmann::ordered_json j;
  j["p_value"] = p_value;
  j["total_cost"] = total_cost;
  j["mean_cost"] = mean_cost;
  j["n"] = n;
  j["k"] = k;
  j["scheme"] = scheme;
  auto positions = nlohmann::ordered_json::array();
  for (const auto& ps : per_position) positions.push_back({{"idx", ps.idx}, {"cost", ps.cost}});
  j["per_position"] = std::move(positions);
  return j.dump(2) + "\n";
}

DetectionReport DetectionReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DetectionReport r;
  r.p_value = j.at("p_value").get<double>();
  r.total_cost = j.at("total_cost").get<double>();
  r.mean_cost = j.at("mean_cost").get<double>();
  r.n = j.at("n").get<int>();
  r.k = j.at("k").get<int>();
  r.scheme = j.at("scheme").get<std::string>();
  for (const auto& ps : j.at("per_position"))
    r.per_position.push_back({ps.at("idx").get<int>(), ps.at("cost").get<double>()});
  return r;
}

}  // namespace semkey
