#pragma once

#include <algorithm>
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

// Basic stochastic volatility model:
//
//   y_t | x_t ~ N(0, exp(x_t)),   x | lambda, omega, mu stationary AR(1),
//   exp(lambda) ~ Gamma(5, 0.05),  (phi(omega)+1)/2 ~ Beta(20, 1.5),
//   mu ~ N(0, 10^2).
//
// Blocks (lambda, omega, mu, x) with scaling terms
//   G_1 = 5 + T/2, G_2 = xi(T) + T/2, G_3 = 1/100 + F_mu(lambda, omega),
//   G_4 = Prec(x|lambda,omega) + I/2 (tridiagonal).

namespace drhmc::models {

inline std::vector<double> simulate_sv(int t, double lambda, double omega,
                                       double mu, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double phi = cip::ar1_phi(omega, t);
  const double sd = std::exp(-0.5 * lambda);
  double x = mu + sd / std::sqrt(1.0 - phi * phi) * normal(rng);
  std::vector<double> y(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    y[i] = std::exp(0.5 * x) * normal(rng);
    x = mu + phi * (x - mu) + sd * normal(rng);
  }
  return y;
}

class SvModel {
 public:
  static constexpr double kGammaShape = 5.0;
  static constexpr double kGammaRate = 0.05;
  static constexpr double kBetaA = 20.0;
  static constexpr double kBetaB = 1.5;
  static constexpr double kMuPriorVar = 100.0;

  explicit SvModel(std::vector<double> y,
                   HStrategy h4 = HStrategy::kConditionalMean)
      : y_(std::move(y)), t_(static_cast<int>(y_.size())), h4_(h4) {
    if (t_ < 4) throw InvalidArgument("sv model needs T >= 4");
    specs_ = {BlockSpec{1, BlockStructure::kDense},
              BlockSpec{1, BlockStructure::kDense},
              BlockSpec{1, BlockStructure::kDense},
              BlockSpec{t_, BlockStructure::kTriDiag}};
    xi_ = cip::ar1_omega_prior_prec(kBetaA, kBetaB, t_);
    // proxy observations log(y_t^2), clamped away from log(0)
    x_hat_.resize(y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i)
      x_hat_[i] = std::log(std::max(y_[i] * y_[i], 1e-12));
  }

  std::span<const BlockSpec> blocks() const { return specs_; }
  int series_length() const { return t_; }
  double xi() const { return xi_; }
  const std::vector<double>& observations() const { return y_; }
  HStrategy h_strategy() const { return h4_; }

  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> names = {"lambda", "omega", "mu"};
    for (int i = 0; i < t_; ++i) names.push_back("x." + std::to_string(i + 1));
    return names;
  }

  template <class S>
  ScalingBlock<S> scaling(int r, const Prefix<S>& q) const {
    if (r < 3) {
      auto g = linalg::DenseSym<S>::zero(1);
      if (r == 0) {
        g.at(0, 0) = S(kGammaShape + 0.5 * t_);
      } else if (r == 1) {
        g.at(0, 0) = S(xi_ + 0.5 * t_);
      } else {
        const auto fisher = cip::ar1_fisher(q.block(0)[0], q.block(1)[0], t_);
        g.at(0, 0) = 1.0 / kMuPriorVar + fisher[2];
      }
      return g;
    }
    const InfoTerm<S> terms[] = {
        InfoTerm<S>{cip::ar1_precision(q.block(0)[0], q.block(1)[0], t_)},
        InfoTerm<S>{S(0.5)}};
    return assemble_block<S>(t_, BlockStructure::kTriDiag, terms);
  }

  template <class S>
  std::vector<S> location(int r, const Prefix<S>& q) const {
    if (r < 3) return {S(0.0)};
    switch (h4_) {
      case HStrategy::kZero:
        return std::vector<S>(static_cast<std::size_t>(t_), S(0.0));
      case HStrategy::kModelCustom:
        // mu * 1
        return std::vector<S>(static_cast<std::size_t>(t_), q.block(2)[0]);
      case HStrategy::kConditionalMean: {
        // G_4^{-1} (mu Prec(x|lambda,omega) 1 + x_hat / 2)
        const auto prec =
            cip::ar1_precision(q.block(0)[0], q.block(1)[0], t_);
        const InfoTerm<S> terms[] = {InfoTerm<S>{prec}, InfoTerm<S>{S(0.5)}};
        const auto g = assemble_block<S>(t_, BlockStructure::kTriDiag, terms);
        const auto factor = factorize(g);
        std::vector<S> prior_mean(static_cast<std::size_t>(t_), q.block(2)[0]);
        std::vector<S> proxy(x_hat_.begin(), x_hat_.end());
        return approx_conditional_mean<S>(
            factor, InfoTerm<S>{prec}, std::span<const S>(prior_mean),
            InfoTerm<S>{S(0.5)}, std::span<const S>(proxy));
      }
      default:
        throw InvalidArgument("sv supports h4 in {zero, custom, mean}");
    }
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
    using std::log;
    const S& lambda = q.block(0)[0];
    const S& omega = q.block(1)[0];
    const S& mu = q.block(2)[0];
    fn("prior_lambda", kGammaShape * lambda - kGammaRate * exp(lambda));
    fn("prior_omega", omega_log_prior(omega));
    fn("prior_mu", -0.5 * mu * mu / kMuPriorVar);
    fn("latent_x", ar1_logdensity(q.block(3), lambda, omega, mu));
    S obs(0.0);
    const auto x = q.block(3);
    for (int i = 0; i < t_; ++i)
      obs += -0.5 * x[i] - 0.5 * y_[i] * y_[i] * exp(-x[i]);
    fn("obs_y", obs);
  }

  std::vector<std::pair<std::string, double>> log_density_terms(
      const Blocked<double>& q) const {
    std::vector<std::pair<std::string, double>> out;
    for_each_term(q, [&](const char* name, double v) { out.emplace_back(name, v); });
    return out;
  }

  // log prior density kernel of omega: Beta(a,b) on (phi+1)/2 plus the
  // Jacobian of phi(omega).
  template <class S>
  S omega_log_prior(const S& omega) const {
    using std::cosh;
    using std::log;
    using std::tanh;
    const S psi = cip::ar1_psi(omega, t_);
    const S phi = tanh(psi);
    const S u = cip::detail::ar1_u_generic(psi, t_);
    return (kBetaA - 1.0) * log(S(1.0) + phi) +
           (kBetaB - 1.0) * log(S(1.0) - phi) +
           log(S(1.0) - phi * phi) - log(u);
  }

 private:
  template <class S>
  S ar1_logdensity(std::span<const S> x, const S& lambda, const S& omega,
                   const S& mu) const {
    using std::exp;
    using std::log;
    using std::tanh;
    const S phi = cip::ar1_phi(omega, t_);
    const S prec = exp(lambda);
    S quad_sum = (S(1.0) - phi * phi) * sq(x[0] - mu);
    for (int i = 1; i < t_; ++i)
      quad_sum += sq(x[i] - mu - phi * (x[i - 1] - mu));
    return 0.5 * t_ * lambda + 0.5 * log(S(1.0) - phi * phi) -
           0.5 * prec * quad_sum;
  }

  template <class S>
  static S sq(const S& v) {
    return v * v;
  }

  std::vector<double> y_;
  int t_;
  HStrategy h4_;
  double xi_ = 0.0;
  std::vector<double> x_hat_;
  std::vector<BlockSpec> specs_;
};

// Prior-standardised reference for the stochastic volatility model: the
// latent block is replaced by its prior innovations. Parameters stay on
// their scales, including the omega mapping.
class SvPriorStdTarget {
 public:
  explicit SvPriorStdTarget(const SvModel& model) : model_(&model) {}

  int dim() const { return 3 + model_->series_length(); }
  std::vector<std::string> coordinate_names() const {
    return model_->coordinate_names();
  }

  TargetEval eval_with_gradient(std::span<const double> q) {
    tape_.clear();
    TargetEval out;
    const int t = model_->series_length();
    try {
      std::vector<ad::Var> vars;
      vars.reserve(q.size());
      for (double v : q) vars.push_back(tape_.input(v));
      const ad::Var& lambda = vars[0];
      const ad::Var& omega = vars[1];
      const ad::Var& mu = vars[2];
      using drhmc::ad::exp;
      using drhmc::ad::tanh;
      const ad::Var phi = tanh(cip::ar1_psi(omega, t));
      const ad::Var sd = exp(-0.5 * lambda);
      const ad::Var sd0 = sd / ad::sqrt(ad::Var(1.0) - phi * phi);
      ad::Var value = SvModel::kGammaShape * lambda -
                      SvModel::kGammaRate * exp(lambda) +
                      model_->omega_log_prior(omega) -
                      0.5 * mu * mu / SvModel::kMuPriorVar;
      std::vector<ad::Var> x(static_cast<std::size_t>(t));
      value += -0.5 * vars[3] * vars[3];
      x[0] = mu + vars[3] * sd0;
      for (int i = 1; i < t; ++i) {
        const ad::Var& z = vars[3 + i];
        value += -0.5 * z * z;
        x[i] = mu + phi * (x[i - 1] - mu) + z * sd;
      }
      const auto& y = model_->observations();
      for (int i = 0; i < t; ++i)
        value += -0.5 * x[i] - 0.5 * y[i] * y[i] * exp(-x[i]);
      out.value = value.value();
      out.grad.resize(q.size());
      tape_.gradient(value, out.grad);
      out.original.resize(q.size());
      out.original[0] = q[0];
      out.original[1] = q[1];
      out.original[2] = q[2];
      for (int i = 0; i < t; ++i) out.original[3 + i] = x[i].value();
    } catch (const Error&) {
      out.value = -std::numeric_limits<double>::infinity();
      out.grad.clear();
      out.original.clear();
      out.divergent = true;
    }
    return out;
  }

 private:
  const SvModel* model_;
  ad::Tape tape_;
};

}  // namespace drhmc::models
