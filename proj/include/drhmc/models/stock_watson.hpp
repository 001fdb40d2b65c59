#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drhmc/blocked.hpp"
#include "drhmc/cip.hpp"
#include "drhmc/models/common.hpp"
#include "drhmc/scaling.hpp"
#include "drhmc/transform.hpp"

// Unobserved-components model for inflation rates with stochastic
// volatility on both the trend and the observation equation:
//
//   y_t | tau_t, x_t ~ N(tau_t, exp(x_t)),
//   tau_t | tau_{t-1}, z_{t-1} ~ N(tau_{t-1}, exp(z_{t-1})),
//   x_t | x_{t-1} ~ N(x_{t-1}, exp(-lambda)),
//   z_t | z_{t-1} ~ N(z_{t-1}, exp(-lambda)),    exp(lambda) ~ Gamma(5, 0.5).
//
// Blocks (lambda, z, x, tau). The three random-walk priors are intrinsic
// (singular precisions); observation information makes every scaling block
// SPD. The tau location is the exact conditional mean
// G_4^{-1} P_y(x) y, which effectively integrates tau out of the target.

namespace drhmc::models {

struct StockWatsonData {
  int t = 0;
  std::vector<double> y;
  double true_lambda = 0.0;
  std::uint64_t seed = 0;
};

inline StockWatsonData simulate_stock_watson(int t, double lambda,
                                             std::uint64_t seed,
                                             double z1 = -5.0, double x1 = -1.5,
                                             double tau1 = 0.3) {
  StockWatsonData data;
  data.t = t;
  data.true_lambda = lambda;
  data.seed = seed;
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double walk_sd = std::exp(-0.5 * lambda);
  std::vector<double> z(static_cast<std::size_t>(t) - 1);
  std::vector<double> x(static_cast<std::size_t>(t));
  std::vector<double> tau(static_cast<std::size_t>(t));
  z[0] = z1;
  for (std::size_t i = 1; i < z.size(); ++i)
    z[i] = z[i - 1] + walk_sd * normal(rng);
  x[0] = x1;
  for (std::size_t i = 1; i < x.size(); ++i)
    x[i] = x[i - 1] + walk_sd * normal(rng);
  tau[0] = tau1;
  for (std::size_t i = 1; i < tau.size(); ++i)
    tau[i] = tau[i - 1] + std::exp(0.5 * z[i - 1]) * normal(rng);
  data.y.resize(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i)
    data.y[i] = tau[i] + std::exp(0.5 * x[i]) * normal(rng);
  return data;
}

class StockWatsonModel {
 public:
  static constexpr double kGammaShape = 5.0;
  static constexpr double kGammaRate = 0.5;

  explicit StockWatsonModel(StockWatsonData data) : data_(std::move(data)) {
    if (data_.t < 3) throw InvalidArgument("stock-watson needs T >= 3");
    if (static_cast<int>(data_.y.size()) != data_.t)
      throw InvalidArgument("stock-watson: data length mismatch");
    specs_ = {BlockSpec{1, BlockStructure::kDense},
              BlockSpec{data_.t - 1, BlockStructure::kTriDiag},
              BlockSpec{data_.t, BlockStructure::kTriDiag},
              BlockSpec{data_.t, BlockStructure::kTriDiag}};
  }

  std::span<const BlockSpec> blocks() const { return specs_; }
  const StockWatsonData& data() const { return data_; }

  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> names = {"lambda"};
    for (int i = 0; i + 1 < data_.t; ++i)
      names.push_back("z." + std::to_string(i + 1));
    for (int i = 0; i < data_.t; ++i)
      names.push_back("x." + std::to_string(i + 1));
    for (int i = 0; i < data_.t; ++i)
      names.push_back("tau." + std::to_string(i + 1));
    return names;
  }

  template <class S>
  ScalingBlock<S> scaling(int r, const Prefix<S>& q) const {
    const int t = data_.t;
    using std::exp;
    switch (r) {
      case 0: {
        auto g = linalg::DenseSym<S>::zero(1);
        g.at(0, 0) = S(kGammaShape + 0.5 * (t - 1) + 0.5 * (t - 2));
        return g;
      }
      case 1: {
        const InfoTerm<S> terms[] = {
            InfoTerm<S>{cip::rw1_precision(q.block(0)[0], t - 1)},
            InfoTerm<S>{S(0.5)}};
        return assemble_block<S>(t - 1, BlockStructure::kTriDiag, terms);
      }
      case 2: {
        const InfoTerm<S> terms[] = {
            InfoTerm<S>{cip::rw1_precision(q.block(0)[0], t)},
            InfoTerm<S>{S(0.5)}};
        return assemble_block<S>(t, BlockStructure::kTriDiag, terms);
      }
      default: {
        const InfoTerm<S> terms[] = {InfoTerm<S>{tau_prior_precision(q)},
                                     InfoTerm<S>{obs_precision_diag(q)}};
        return assemble_block<S>(t, BlockStructure::kTriDiag, terms);
      }
    }
  }

  template <class S>
  std::vector<S> location(int r, const Prefix<S>& q) const {
    const int t = data_.t;
    if (r < 3)
      return std::vector<S>(static_cast<std::size_t>(specs_[r].dim), S(0.0));
    // h_4 = G_4^{-1} P_y(x) y; the intrinsic prior contributes no
    // information vector
    const InfoTerm<S> terms[] = {InfoTerm<S>{tau_prior_precision(q)},
                                 InfoTerm<S>{obs_precision_diag(q)}};
    const auto g = assemble_block<S>(t, BlockStructure::kTriDiag, terms);
    const auto factor = factorize(g);
    std::vector<S> zeros(static_cast<std::size_t>(t), S(0.0));
    std::vector<S> yv(data_.y.begin(), data_.y.end());
    return approx_conditional_mean<S>(
        factor, InfoTerm<S>{S(0.0)}, std::span<const S>(zeros),
        InfoTerm<S>{obs_precision_diag(q)}, std::span<const S>(yv));
  }

  template <class S>
  S log_density(const Blocked<S>& q) const {
    S total(0.0);
    for_each_term(q, [&](const char*, const S& v) { total += v; });
    return total;
  }

  template <class S, class Fn>
  void for_each_term(const Blocked<S>& q, Fn&& fn) const {
    using std::exp;
    const int t = data_.t;
    const S& lambda = q.block(0)[0];
    const auto z = q.block(1);
    const auto x = q.block(2);
    const auto tau = q.block(3);
    fn("prior_lambda", kGammaShape * lambda - kGammaRate * exp(lambda));
    const S walk_prec = exp(lambda);
    S zsum(0.0);
    for (int i = 1; i + 1 < t; ++i) zsum += sq(z[i] - z[i - 1]);
    fn("walk_z", 0.5 * (t - 2) * lambda - 0.5 * walk_prec * zsum);
    S xsum(0.0);
    for (int i = 1; i < t; ++i) xsum += sq(x[i] - x[i - 1]);
    fn("walk_x", 0.5 * (t - 1) * lambda - 0.5 * walk_prec * xsum);
    S trend(0.0);
    for (int i = 1; i < t; ++i)
      trend += -0.5 * z[i - 1] - 0.5 * exp(-z[i - 1]) * sq(tau[i] - tau[i - 1]);
    fn("trend_tau", trend);
    S obs(0.0);
    for (int i = 0; i < t; ++i)
      obs += -0.5 * x[i] - 0.5 * exp(-x[i]) * sq(data_.y[i] - tau[i]);
    fn("obs_y", obs);
  }

  std::vector<std::pair<std::string, double>> log_density_terms(
      const Blocked<double>& q) const {
    std::vector<std::pair<std::string, double>> out;
    for_each_term(q, [&](const char* name, double v) { out.emplace_back(name, v); });
    return out;
  }

 private:
  template <class S>
  linalg::TriDiagSym<S> tau_prior_precision(const Prefix<S>& q) const {
    using std::exp;
    const auto z = q.block(1);
    std::vector<S> weights(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) weights[i] = exp(-z[i]);
    return cip::rw1_weighted_precision(std::span<const S>(weights));
  }

  template <class S>
  std::vector<S> obs_precision_diag(const Prefix<S>& q) const {
    using std::exp;
    const auto x = q.block(2);
    std::vector<S> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = exp(-x[i]);
    return d;
  }

  template <class S>
  static S sq(const S& v) {
    return v * v;
  }

  StockWatsonData data_;
  std::vector<BlockSpec> specs_;
};

}  // namespace drhmc::models
