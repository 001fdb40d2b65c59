#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drhmc/blocked.hpp"
#include "drhmc/cip.hpp"
#include "drhmc/models/common.hpp"
#include "drhmc/quadrature.hpp"
#include "drhmc/scaling.hpp"
#include "drhmc/transform.hpp"

// Linear Gaussian state-space model with a stationary AR(1) latent state:
//
//   x_1 ~ N(mu, exp(-lambda)/(1-phi^2)),
//   x_{t+1} | x_t ~ N(mu + phi (x_t - mu), exp(-lambda)),
//   y_t | x_t ~ N(x_t, exp(-tau)),
//
// phi = tanh(psi(omega)); mu and omega are fixed. Three variants:
//   1: lambda sampled (flat prior), tau fixed
//   2: tau sampled (N(0,3^2) prior), lambda fixed
//   3: both sampled
// The latent scaling block is Prec(x|lambda) + exp(tau) I, tridiagonal.
// The Kalman filter provides the exact oracle for everything.

namespace drhmc::models {

struct LgssmData {
  int t = 0;
  std::vector<double> y;
  double true_lambda = 0.0;
  double true_tau = 0.0;
  double omega = 2.2;
  double mu = 0.0;
  std::uint64_t seed = 0;
};

inline LgssmData simulate_lgssm(int t, double lambda, double tau, double omega,
                                double mu, std::uint64_t seed) {
  LgssmData data;
  data.t = t;
  data.true_lambda = lambda;
  data.true_tau = tau;
  data.omega = omega;
  data.mu = mu;
  data.seed = seed;
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double phi = cip::ar1_phi(omega, t);
  const double sd = std::exp(-0.5 * lambda);
  double x = mu + sd / std::sqrt(1.0 - phi * phi) * normal(rng);
  const double obs_sd = std::exp(-0.5 * tau);
  data.y.resize(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    data.y[i] = x + obs_sd * normal(rng);
    x = mu + phi * (x - mu) + sd * normal(rng);
  }
  return data;
}

// Log marginal likelihood p(y | lambda, tau) by the scalar Kalman filter.
inline double kalman_loglik(std::span<const double> y, double lambda,
                            double tau, double omega, double mu) {
  const int t = static_cast<int>(y.size());
  const double phi = cip::ar1_phi(omega, t);
  const double var_x = std::exp(-lambda);
  const double var_y = std::exp(-tau);
  double m = mu;
  double p = var_x / (1.0 - phi * phi);
  double loglik = 0.0;
  for (int i = 0; i < t; ++i) {
    const double s = p + var_y;
    const double resid = y[i] - m;
    loglik += -0.5 * std::log(2.0 * std::numbers::pi * s) -
              0.5 * resid * resid / s;
    const double gain = p / s;
    m += gain * resid;
    p *= 1.0 - gain;
    if (i + 1 < t) {
      m = mu + phi * (m - mu);
      p = phi * phi * p + var_x;
    }
  }
  return loglik;
}

// E(x | y, lambda, tau) by the Rauch-Tung-Striebel smoother.
inline std::vector<double> kalman_smoother_mean(std::span<const double> y,
                                                double lambda, double tau,
                                                double omega, double mu) {
  const int t = static_cast<int>(y.size());
  const double phi = cip::ar1_phi(omega, t);
  const double var_x = std::exp(-lambda);
  const double var_y = std::exp(-tau);
  std::vector<double> mf(y.size()), pf(y.size()), mp(y.size()), pp(y.size());
  double m = mu;
  double p = var_x / (1.0 - phi * phi);
  for (int i = 0; i < t; ++i) {
    mp[i] = m;
    pp[i] = p;
    const double s = p + var_y;
    const double gain = p / s;
    m += gain * (y[i] - m);
    p *= 1.0 - gain;
    mf[i] = m;
    pf[i] = p;
    if (i + 1 < t) {
      m = mu + phi * (m - mu);
      p = phi * phi * p + var_x;
    }
  }
  std::vector<double> ms(y.size());
  ms[t - 1] = mf[t - 1];
  for (int i = t - 2; i >= 0; --i) {
    const double c = pf[i] * phi / pp[i + 1];
    ms[i] = mf[i] + c * (ms[i + 1] - mp[i + 1]);
  }
  return ms;
}

class LgssmModel {
 public:
  LgssmModel(int variant, LgssmData data,
             HStrategy h2 = HStrategy::kConditionalMean)
      : variant_(variant), data_(std::move(data)), h2_(h2) {
    if (variant < 1 || variant > 3)
      throw InvalidArgument("lgssm variant must be 1, 2 or 3");
    const int np = variant == 3 ? 2 : 1;
    specs_ = {BlockSpec{np, BlockStructure::kDense},
              BlockSpec{data_.t, BlockStructure::kTriDiag}};
  }

  std::span<const BlockSpec> blocks() const { return specs_; }
  const LgssmData& data() const { return data_; }
  int variant() const { return variant_; }
  HStrategy h_strategy() const { return h2_; }
  int param_count() const { return variant_ == 3 ? 2 : 1; }

  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> names;
    if (variant_ == 1 || variant_ == 3) names.push_back("lambda");
    if (variant_ == 2 || variant_ == 3) names.push_back("tau");
    for (int i = 0; i < data_.t; ++i)
      names.push_back("x." + std::to_string(i + 1));
    return names;
  }

  template <class S>
  S lambda_of(const Blocked<S>& q) const {
    if (variant_ == 2) return S(data_.true_lambda);
    return q.block(0)[0];
  }
  template <class S>
  S tau_of(const Blocked<S>& q) const {
    switch (variant_) {
      case 1: return S(data_.true_tau);
      case 2: return q.block(0)[0];
      default: return q.block(0)[1];
    }
  }

  template <class S>
  ScalingBlock<S> scaling(int r, const Prefix<S>& q) const {
    if (r == 0) {
      const double t_half = 0.5 * data_.t;
      auto g = linalg::DenseSym<S>::zero(param_count());
      if (variant_ == 1) {
        g.at(0, 0) = S(t_half);
      } else if (variant_ == 2) {
        g.at(0, 0) = S(1.0 / 9.0 + t_half);
      } else {
        g.at(0, 0) = S(t_half);
        g.at(1, 1) = S(1.0 / 9.0 + t_half);
      }
      return g;
    }
    const auto [lambda, tau] = params_from_prefix(q);
    using std::exp;
    const InfoTerm<S> terms[] = {
        InfoTerm<S>{cip::ar1_precision(lambda, S(data_.omega), data_.t)},
        InfoTerm<S>{exp(tau)}};
    return assemble_block<S>(data_.t, BlockStructure::kTriDiag, terms);
  }

  template <class S>
  std::vector<S> location(int r, const Prefix<S>& q) const {
    if (r == 0) return std::vector<S>(static_cast<std::size_t>(param_count()), S(0.0));
    switch (h2_) {
      case HStrategy::kZero:
        return std::vector<S>(static_cast<std::size_t>(data_.t), S(0.0));
      case HStrategy::kFixedData:
        return std::vector<S>(data_.y.begin(), data_.y.end());
      case HStrategy::kConditionalMean: {
        // exact: G_2^{-1} [Prec(x|lambda) mu 1 + exp(tau) y]; mu = 0 here
        const auto [lambda, tau] = params_from_prefix(q);
        using std::exp;
        const auto prec = cip::ar1_precision(lambda, S(data_.omega), data_.t);
        const InfoTerm<S> terms[] = {InfoTerm<S>{prec}, InfoTerm<S>{exp(tau)}};
        const auto g = assemble_block<S>(data_.t, BlockStructure::kTriDiag, terms);
        const auto factor = factorize(g);
        std::vector<S> prior_mean(static_cast<std::size_t>(data_.t),
                                  S(data_.mu));
        std::vector<S> yv(data_.y.begin(), data_.y.end());
        return approx_conditional_mean<S>(
            factor, InfoTerm<S>{prec}, std::span<const S>(prior_mean),
            InfoTerm<S>{exp(tau)}, std::span<const S>(yv));
      }
      default:
        throw InvalidArgument("lgssm supports h2 in {zero, fixed, mean}");
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
    const S lambda = lambda_of(q);
    const S tau = tau_of(q);
    if (variant_ != 1) fn("prior_tau", -tau * tau / 18.0);
    fn("latent_x", ar1_logdensity(q.block(1), lambda));
    using std::exp;
    const S obs_prec = exp(tau);
    S obs(0.0);
    const auto x = q.block(1);
    for (int i = 0; i < data_.t; ++i) {
      const S resid = data_.y[i] - x[i];
      obs += 0.5 * tau - 0.5 * resid * resid * obs_prec;
    }
    fn("obs_y", obs);
  }

  std::vector<std::pair<std::string, double>> log_density_terms(
      const Blocked<double>& q) const {
    std::vector<std::pair<std::string, double>> out;
    for_each_term(q, [&](const char* name, double v) { out.emplace_back(name, v); });
    return out;
  }

  // Posterior mean/sd of the free parameter(s) by adaptive quadrature of
  // prior x kalman_loglik; the exact reference for MCMC output.
  struct ExactPosterior {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> sd;
  };

  ExactPosterior exact_posterior(double tol = 1e-9) const {
    ExactPosterior out;
    if (variant_ == 1 || variant_ == 2) {
      out.names.push_back(variant_ == 1 ? "lambda" : "tau");
      auto logpost = [&](double v) { return log_posterior_1d(v); };
      const auto [mean, sd] = posterior_moments_1d(logpost, center_guess(), tol);
      out.mean.push_back(mean);
      out.sd.push_back(sd);
      return out;
    }
    out.names = {"lambda", "tau"};
    // tensorized adaptive quadrature over (lambda, tau)
    auto logpost = [&](double lambda, double tau) {
      return -tau * tau / 18.0 +
             kalman_loglik(data_.y, lambda, tau, data_.omega, data_.mu);
    };
    const double lam0 = data_.true_lambda;
    const double tau0 = data_.true_tau;
    const auto [lam_lo, lam_hi] =
        bracket_1d([&](double l) { return logpost(l, tau0); }, lam0);
    const auto [tau_lo, tau_hi] =
        bracket_1d([&](double t) { return logpost(lam0, t); }, tau0);
    const double shift = logpost(lam0, tau0);
    // min_depth keeps the posterior bump resolved within the wide bracket
    auto weighted = [&](auto&& f) {
      return quad::integrate(
          [&](double l) {
            return quad::integrate(
                [&](double t) {
                  return std::exp(logpost(l, t) - shift) * f(l, t);
                },
                tau_lo, tau_hi, tol, 4);
          },
          lam_lo, lam_hi, tol, 4);
    };
    const double z = weighted([](double, double) { return 1.0; });
    const double ml = weighted([](double l, double) { return l; }) / z;
    const double mt = weighted([](double, double t) { return t; }) / z;
    const double vl = weighted([&](double l, double) { return (l - ml) * (l - ml); }) / z;
    const double vt = weighted([&](double, double t) { return (t - mt) * (t - mt); }) / z;
    out.mean = {ml, mt};
    out.sd = {std::sqrt(vl), std::sqrt(vt)};
    return out;
  }

  double log_posterior_1d(double v) const {
    if (variant_ == 1)
      return kalman_loglik(data_.y, v, data_.true_tau, data_.omega, data_.mu);
    return -v * v / 18.0 +
           kalman_loglik(data_.y, data_.true_lambda, v, data_.omega, data_.mu);
  }

 private:
  double center_guess() const {
    return variant_ == 1 ? data_.true_lambda : data_.true_tau;
  }

  template <class F>
  static std::pair<double, double> bracket_1d(F&& logpost, double center) {
    // walk out from the mode until the log posterior has dropped by 60
    const double peak_loc = quad::maximize_1d(logpost, center, 1e-6, 1e-8);
    const double peak = logpost(peak_loc);
    double lo = peak_loc, hi = peak_loc;
    double step = 0.25;
    while (logpost(lo) > peak - 60.0) { lo -= step; step *= 1.5; }
    step = 0.25;
    while (logpost(hi) > peak - 60.0) { hi += step; step *= 1.5; }
    return {lo, hi};
  }

  template <class F>
  static std::pair<double, double> posterior_moments_1d(F&& logpost,
                                                        double center,
                                                        double tol) {
    const auto [lo, hi] = bracket_1d(logpost, center);
    const double peak = logpost(quad::maximize_1d(logpost, center, 1e-6, 1e-8));
    auto w = [&](double v) { return std::exp(logpost(v) - peak); };
    const double z = quad::integrate(w, lo, hi, tol, 4);
    const double mean =
        quad::integrate([&](double v) { return v * w(v); }, lo, hi, tol, 4) / z;
    const double var = quad::integrate(
                           [&](double v) { return (v - mean) * (v - mean) * w(v); },
                           lo, hi, tol, 4) /
                       z;
    return {mean, std::sqrt(var)};
  }

  template <class S>
  std::pair<S, S> params_from_prefix(const Prefix<S>& q) const {
    switch (variant_) {
      case 1: return {q.block(0)[0], S(data_.true_tau)};
      case 2: return {S(data_.true_lambda), q.block(0)[0]};
      default: return {q.block(0)[0], q.block(0)[1]};
    }
  }

  template <class S>
  S ar1_logdensity(std::span<const S> x, const S& lambda) const {
    using std::exp;
    using std::log;
    const int t = data_.t;
    const double phi = cip::ar1_phi(data_.omega, t);
    const double mu = data_.mu;
    const S prec = exp(lambda);
    S quad_sum = (1.0 - phi * phi) * square_s(x[0] - mu);
    for (int i = 1; i < t; ++i)
      quad_sum += square_s(x[i] - mu - phi * (x[i - 1] - mu));
    return 0.5 * t * lambda + 0.5 * std::log1p(-phi * phi) -
           0.5 * prec * quad_sum;
  }

  template <class S>
  static S square_s(const S& v) {
    return v * v;
  }

  int variant_;
  LgssmData data_;
  HStrategy h2_;
  std::vector<BlockSpec> specs_;
};

// Reference reparameterization: the latent block is replaced by its
// standardized prior innovations z, z_1 = x_1 exp(lambda/2) sqrt(1-phi^2),
// z_t = (x_t - phi x_{t-1}) exp(lambda/2) (mu = 0 throughout). Sampled
// coordinates are (free params, z); recorded coordinates are (params, x).
class LgssmPriorStdTarget {
 public:
  explicit LgssmPriorStdTarget(const LgssmModel& model) : model_(&model) {}

  int dim() const { return model_->param_count() + model_->data().t; }
  std::vector<std::string> coordinate_names() const {
    return model_->coordinate_names();
  }

  static std::vector<double> to_innovations(std::span<const double> x,
                                            double lambda, double phi,
                                            double mu) {
    const double sd_inv = std::exp(0.5 * lambda);
    std::vector<double> z(x.size());
    z[0] = (x[0] - mu) * sd_inv * std::sqrt(1.0 - phi * phi);
    for (std::size_t i = 1; i < x.size(); ++i)
      z[i] = (x[i] - mu - phi * (x[i - 1] - mu)) * sd_inv;
    return z;
  }

  template <class S>
  static std::vector<S> from_innovations(std::span<const S> z, const S& lambda,
                                         double phi, double mu) {
    using std::exp;
    using std::sqrt;
    const S sd = exp(-0.5 * lambda);
    std::vector<S> x(z.size());
    x[0] = mu + z[0] * sd / std::sqrt(1.0 - phi * phi);
    for (std::size_t i = 1; i < z.size(); ++i)
      x[i] = mu + phi * (x[i - 1] - mu) + z[i] * sd;
    return x;
  }

  TargetEval eval_with_gradient(std::span<const double> q) {
    tape_.clear();
    TargetEval out;
    const auto& data = model_->data();
    const int np = model_->param_count();
    try {
      std::vector<ad::Var> vars;
      vars.reserve(q.size());
      for (double v : q) vars.push_back(tape_.input(v));
      ad::Var lambda(data.true_lambda), tau(data.true_tau);
      if (model_->variant() == 1) lambda = vars[0];
      if (model_->variant() == 2) tau = vars[0];
      if (model_->variant() == 3) { lambda = vars[0]; tau = vars[1]; }
      const double phi = cip::ar1_phi(data.omega, data.t);
      const std::span<const ad::Var> z(vars.data() + np,
                                       static_cast<std::size_t>(data.t));
      const std::vector<ad::Var> x =
          from_innovations(z, lambda, phi, data.mu);
      ad::Var value(0.0);
      if (model_->variant() != 1) value += -tau * tau / 18.0;
      for (const auto& zi : z) value += -0.5 * zi * zi;
      using drhmc::ad::exp;
      const ad::Var obs_prec = exp(tau);
      for (int i = 0; i < data.t; ++i) {
        const ad::Var resid = data.y[i] - x[i];
        value += 0.5 * tau - 0.5 * resid * resid * obs_prec;
      }
      out.value = value.value();
      out.grad.resize(q.size());
      tape_.gradient(value, out.grad);
      out.original.resize(q.size());
      for (int i = 0; i < np; ++i) out.original[i] = q[i];
      for (int i = 0; i < data.t; ++i) out.original[np + i] = x[i].value();
    } catch (const Error&) {
      out.value = -std::numeric_limits<double>::infinity();
      out.grad.clear();
      out.original.clear();
      out.divergent = true;
    }
    return out;
  }

 private:
  const LgssmModel* model_;
  ad::Tape tape_;
};

}  // namespace drhmc::models
