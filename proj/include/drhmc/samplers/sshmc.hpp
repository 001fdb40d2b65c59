#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "drhmc/samplers/hmc.hpp"
#include "drhmc/transform.hpp"

// Semi-separable HMC with the alternating block-wise leapfrog algorithm,
// for two-block models q = (phi, x) with metric bdiag(G_1, G_2(phi)):
//
//   H(phi, x, p_phi, p_x) = -log pi(phi, x) + log|L_2(phi)|
//                           + 1/2 p_x' G_2^{-1}(phi) p_x
//                           + 1/2 p_phi' G_1^{-1} p_phi.
//
// Each proposal alternates leapfrog legs on the (phi, p_phi) and (x, p_x)
// conditional Hamiltonians, then accepts on the total energy change.

namespace drhmc {

struct SshmcConfig {
  int abla_steps = 10;
  int param_leapfrogs = 6;
  double param_step_size = 0.7;
  int latent_leapfrogs = 1;
  double latent_step_size = 0.25;
  int warmup = 1000;
  int iters = 1000;
  double max_divergence_rate = 0.5;
};

template <class Model>
class SshmcSampler {
 public:
  explicit SshmcSampler(const Model& model)
      : model_(&model),
        specs_(model.blocks().begin(), model.blocks().end()),
        dim_(total_dim(specs_)) {
    if (specs_.size() != 2)
      throw InvalidArgument("sshmc requires a two-block model");
    d1_ = specs_[0].dim;
    d2_ = specs_[1].dim;
  }

  int dim() const { return dim_; }

  ChainDraws run_chain(const SshmcConfig& config, std::uint64_t seed,
                       int chain_index = 0) {
    ChainState state;
    state.q.assign(static_cast<std::size_t>(dim_), 0.0);
    state.rng = chain_rng(seed, chain_index);

    ChainDraws out;
    out.dim = dim_;
    for (int it = 0; it < config.warmup; ++it) transition(state, config);
    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 0; it < config.iters; ++it) {
      const TransitionDiag diag = transition(state, config);
      out.diags.push_back(diag);
      if (diag.divergent) ++out.divergences;
      out.modified.insert(out.modified.end(), state.q.begin(), state.q.end());
      out.original.insert(out.original.end(), state.q.begin(), state.q.end());
      if (it >= 100 &&
          out.divergences >
              config.max_divergence_rate * static_cast<double>(it + 1)) {
        out.aborted = true;
        break;
      }
    }
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
  }

  TransitionDiag transition(ChainState& state, const SshmcConfig& config) {
    TransitionDiag diag;
    std::vector<double> phi(state.q.begin(), state.q.begin() + d1_);
    std::vector<double> x(state.q.begin() + d1_, state.q.end());
    std::vector<double> p_phi(static_cast<std::size_t>(d1_));
    std::vector<double> p_x(static_cast<std::size_t>(d2_));
    std::normal_distribution<double> normal(0.0, 1.0);
    double h0;
    try {
      const auto f1 = param_factor();
      const auto f2 = latent_factor(phi);
      std::vector<double> z1(static_cast<std::size_t>(d1_));
      for (auto& z : z1) z = normal(state.rng);
      p_phi = factor_mult_L(f1, std::span<const double>(z1));
      std::vector<double> z2(static_cast<std::size_t>(d2_));
      for (auto& z : z2) z = normal(state.rng);
      p_x = factor_mult_L(f2, std::span<const double>(z2));
      h0 = total_energy(phi, x, p_phi, p_x);
    } catch (const Error&) {
      diag.divergent = true;
      return diag;
    }

    try {
      for (int step = 0; step < config.abla_steps; ++step) {
        for (int l = 0; l < config.param_leapfrogs; ++l)
          param_leapfrog(phi, x, p_phi, p_x, config.param_step_size);
        for (int l = 0; l < config.latent_leapfrogs; ++l)
          latent_leapfrog(phi, x, p_x, config.latent_step_size);
        for (int l = 0; l < config.param_leapfrogs; ++l)
          param_leapfrog(phi, x, p_phi, p_x, config.param_step_size);
      }
      const double h1 = total_energy(phi, x, p_phi, p_x);
      diag.energy_error = h1 - h0;
      if (!std::isfinite(diag.energy_error)) {
        diag.divergent = true;
        return diag;
      }
      diag.accept_prob = std::min(1.0, std::exp(h0 - h1));
    } catch (const Error&) {
      diag.divergent = true;
      return diag;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(state.rng) < diag.accept_prob) {
      std::copy(phi.begin(), phi.end(), state.q.begin());
      std::copy(x.begin(), x.end(), state.q.begin() + d1_);
    }
    return diag;
  }

  double total_energy(std::span<const double> phi, std::span<const double> x,
                      std::span<const double> p_phi,
                      std::span<const double> p_x) const {
    const auto f1 = param_factor();
    const auto f2 = latent_factor(phi);
    double h = -log_density(phi, x) + ad::value_of(factor_log_det(f2));
    const auto w1 = factor_solve_L(f1, p_phi);
    for (double w : w1) h += 0.5 * w * w;
    const auto w2 = factor_solve_L(f2, p_x);
    for (double w : w2) h += 0.5 * w * w;
    return h;
  }

 private:
  BlockFactor<double> param_factor() const {
    const Blocked<double> dummy = Blocked<double>::zeros(specs_);
    return factorize(model_->scaling(0, Prefix<double>(dummy, 0)));
  }

  BlockFactor<double> latent_factor(std::span<const double> phi) const {
    Blocked<double> q = Blocked<double>::zeros(specs_);
    std::copy(phi.begin(), phi.end(), q.mutable_block(0).begin());
    return factorize(model_->scaling(1, Prefix<double>(q, 1)));
  }

  double log_density(std::span<const double> phi,
                     std::span<const double> x) const {
    Blocked<double> q = Blocked<double>::zeros(specs_);
    std::copy(phi.begin(), phi.end(), q.mutable_block(0).begin());
    std::copy(x.begin(), x.end(), q.mutable_block(1).begin());
    return model_->log_density(q);
  }

  // grad_phi of U_phi = -log pi + log|L_2(phi)| + 1/2 p_x' G_2^{-1}(phi) p_x.
  std::vector<double> grad_param_potential(std::span<const double> phi,
                                           std::span<const double> x,
                                           std::span<const double> p_x) {
    tape_.clear();
    Blocked<ad::Var> q = Blocked<ad::Var>::zeros(specs_);
    for (int i = 0; i < d1_; ++i) q.mutable_block(0)[i] = tape_.input(phi[i]);
    for (int i = 0; i < d2_; ++i) q.mutable_block(1)[i] = ad::Var(x[i]);
    const auto f2 = factorize(model_->scaling(1, Prefix<ad::Var>(q, 1)));
    ad::Var value = -model_->log_density(q) + factor_log_det(f2);
    std::vector<ad::Var> px(p_x.begin(), p_x.end());
    const auto w = factor_solve_L(f2, std::span<const ad::Var>(px));
    for (const auto& wi : w) value += 0.5 * wi * wi;
    std::vector<double> grad(static_cast<std::size_t>(d1_));
    tape_.gradient(value, grad);
    return grad;
  }

  // grad_x of U_x = -log pi (the x-kinetic mass is fixed during this leg).
  std::vector<double> grad_latent_potential(std::span<const double> phi,
                                            std::span<const double> x) {
    tape_.clear();
    Blocked<ad::Var> q = Blocked<ad::Var>::zeros(specs_);
    for (int i = 0; i < d1_; ++i) q.mutable_block(0)[i] = ad::Var(phi[i]);
    for (int i = 0; i < d2_; ++i) q.mutable_block(1)[i] = tape_.input(x[i]);
    const ad::Var value = -model_->log_density(q);
    std::vector<double> grad(static_cast<std::size_t>(d2_));
    tape_.gradient(value, grad);
    return grad;
  }

  void param_leapfrog(std::vector<double>& phi, std::span<const double> x,
                      std::vector<double>& p_phi, std::span<const double> p_x,
                      double eps) {
    const auto f1 = param_factor();
    std::vector<double> g = grad_param_potential(phi, x, p_x);
    for (int i = 0; i < d1_; ++i) p_phi[i] -= 0.5 * eps * g[i];
    const auto drift = factor_solve_LLT(f1, std::span<const double>(p_phi));
    for (int i = 0; i < d1_; ++i) phi[i] += eps * drift[i];
    g = grad_param_potential(phi, x, p_x);
    for (int i = 0; i < d1_; ++i) p_phi[i] -= 0.5 * eps * g[i];
  }

  void latent_leapfrog(std::span<const double> phi, std::vector<double>& x,
                       std::vector<double>& p_x, double eps) {
    const auto f2 = latent_factor(phi);
    std::vector<double> g = grad_latent_potential(phi, x);
    for (int i = 0; i < d2_; ++i) p_x[i] -= 0.5 * eps * g[i];
    const auto drift = factor_solve_LLT(f2, std::span<const double>(p_x));
    for (int i = 0; i < d2_; ++i) x[i] += eps * drift[i];
    g = grad_latent_potential(phi, x);
    for (int i = 0; i < d2_; ++i) p_x[i] -= 0.5 * eps * g[i];
  }

  const Model* model_;
  std::vector<BlockSpec> specs_;
  int dim_;
  int d1_ = 0, d2_ = 0;
  ad::Tape tape_;
};

}  // namespace drhmc
