#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "drhmc/errors.hpp"

// Effective sample size and posterior summaries over multi-chain output.
// ESS is the split-chain variogram estimator: each chain is halved, the
// pooled autocorrelation sequence is built from within- and between-chain
// variances, and the sum is truncated at the first negative paired sum.

namespace drhmc::diag {

struct CoordinateSummary {
  double mean = 0.0;
  double sd = 0.0;
  double n_eff = 0.0;
  double mcse = 0.0;
  bool degenerate = false;
};

// chains[c] holds one chain's draws for a single coordinate.
inline double effective_sample_size(
    const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw InvalidArgument("ess: no chains");
  std::size_t n_min = chains.front().size();
  for (const auto& c : chains) n_min = std::min(n_min, c.size());
  if (n_min < 4) throw InvalidArgument("ess: need at least 4 draws");

  // split each chain in half
  std::vector<std::span<const double>> halves;
  const std::size_t half = n_min / 2;
  for (const auto& c : chains) {
    halves.emplace_back(c.data(), half);
    halves.emplace_back(c.data() + (n_min - half), half);
  }
  const std::size_t m = halves.size();
  const std::size_t n = half;
  const double total = static_cast<double>(chains.size() * n_min);

  std::vector<double> means(m);
  double grand = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : halves[j]) s += v;
    means[j] = s / static_cast<double>(n);
    grand += means[j];
  }
  grand /= static_cast<double>(m);

  double w = 0.0, b = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s2 = 0.0;
    for (double v : halves[j]) s2 += (v - means[j]) * (v - means[j]);
    w += s2 / static_cast<double>(n - 1);
    b += (means[j] - grand) * (means[j] - grand);
  }
  w /= static_cast<double>(m);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);

  const double var_plus = (static_cast<double>(n - 1) / n) * w + b / n;
  if (!(var_plus > 0.0) || !(w > 0.0))
    return std::numeric_limits<double>::quiet_NaN();  // degenerate coordinate

  auto rho = [&](std::size_t t) {
    // variogram estimate of the lag-t autocorrelation
    double v = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& h = halves[j];
      for (std::size_t i = t; i < n; ++i)
        v += (h[i] - h[i - t]) * (h[i] - h[i - t]);
    }
    v /= static_cast<double>(m * (n - t));
    return 1.0 - v / (2.0 * var_plus);
  };

  // paired-sum truncation: rho_0 = 1, accumulate (rho_{2k}, rho_{2k+1})
  // pairs while their sum stays positive
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1e-12);
  return std::min(total, static_cast<double>(m * n) / tau);
}

inline CoordinateSummary summarize(
    const std::vector<std::vector<double>>& chains) {
  CoordinateSummary out;
  double count = 0.0, sum = 0.0;
  for (const auto& c : chains)
    for (double v : c) {
      sum += v;
      count += 1.0;
    }
  if (count == 0.0) throw InvalidArgument("summarize: no draws");
  out.mean = sum / count;
  double ss = 0.0;
  for (const auto& c : chains)
    for (double v : c) ss += (v - out.mean) * (v - out.mean);
  out.sd = count > 1.0 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  const double ess = effective_sample_size(chains);
  if (std::isnan(ess)) {
    out.degenerate = true;
    out.n_eff = 0.0;
    out.mcse = 0.0;
  } else {
    out.n_eff = ess;
    out.mcse = out.sd / std::sqrt(ess);
  }
  return out;
}

}  // namespace drhmc::diag
