#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "drhmc/samplers/hmc.hpp"
#include "drhmc/transform.hpp"

// Reference Riemann-manifold HMC with the block metric G(q) taken from the
// model's scaling blocks. Because the metric is sequentially dependent
// block diagonal, the generalized leapfrog integrator is explicit: momentum
// blocks update in descending order, position blocks in ascending order
// with averaged inverse-metric drifts, then a final half kick.
//
//   H(q, r) = -log pi(q) + sum_r log|L_r(q)| + 1/2 sum_r r_r' G_r^{-1}(q) r_r.

namespace drhmc {

template <class Model>
class RmhmcSampler {
 public:
  explicit RmhmcSampler(const Model& model)
      : model_(&model),
        specs_(model.blocks().begin(), model.blocks().end()),
        dim_(total_dim(specs_)) {}

  int dim() const { return dim_; }
  int block_count() const { return static_cast<int>(specs_.size()); }

  std::vector<BlockFactor<double>> factors_at(
      std::span<const double> q) const {
    Blocked<double> qb(std::vector<double>(q.begin(), q.end()), specs_);
    std::vector<BlockFactor<double>> out;
    out.reserve(specs_.size());
    for (int r = 0; r < block_count(); ++r)
      out.push_back(factorize(model_->scaling(r, Prefix<double>(qb, r))));
    return out;
  }

  // phi(q) = -log pi(q) + sum_r log|L_r|.
  double potential(std::span<const double> q,
                   const std::vector<BlockFactor<double>>& factors) const {
    Blocked<double> qb(std::vector<double>(q.begin(), q.end()), specs_);
    double value = -model_->log_density(qb);
    for (const auto& f : factors) value += factor_log_det(f);
    return value;
  }

  double kinetic(std::span<const double> r,
                 const std::vector<BlockFactor<double>>& factors) const {
    double k = 0.0;
    int off = 0;
    for (int s = 0; s < block_count(); ++s) {
      const int d = specs_[s].dim;
      const std::vector<double> w = factor_solve_L(
          factors[s], r.subspan(static_cast<std::size_t>(off),
                                static_cast<std::size_t>(d)));
      for (double wi : w) k += wi * wi;
      off += d;
    }
    return 0.5 * k;
  }

  double hamiltonian(std::span<const double> q,
                     std::span<const double> r) const {
    const auto factors = factors_at(q);
    return potential(q, factors) + kinetic(r, factors);
  }

  // grad_q of phi(q) + 1/2 sum_{s >= quad_from} r_s' G_s^{-1}(q) r_s, with
  // the momenta held fixed. include_phi toggles the phi part.
  void grad_q(std::span<const double> q, std::span<const double> r,
              bool include_phi, int quad_from, std::span<double> out) {
    tape_.clear();
    std::vector<ad::Var> vars;
    vars.reserve(q.size());
    for (double v : q) vars.push_back(tape_.input(v));
    Blocked<ad::Var> qb(std::move(vars), specs_);
    ad::Var value(0.0);
    if (include_phi) {
      value = -model_->log_density(qb);
      for (int s = 0; s < block_count(); ++s) {
        const auto f = factorize(model_->scaling(s, Prefix<ad::Var>(qb, s)));
        value += factor_log_det(f);
      }
    }
    int off = 0;
    for (int s = 0; s < block_count(); ++s) {
      const int d = specs_[s].dim;
      if (s >= quad_from) {
        const auto f = factorize(model_->scaling(s, Prefix<ad::Var>(qb, s)));
        std::vector<ad::Var> rs;
        rs.reserve(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) rs.push_back(ad::Var(r[off + i]));
        const std::vector<ad::Var> w =
            factor_solve_L(f, std::span<const ad::Var>(rs));
        for (const auto& wi : w) value += 0.5 * wi * wi;
      }
      off += d;
    }
    if (!value.taped()) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    tape_.gradient(value, out);
  }

  // grad_q of the single quadratic form 1/2 r_s' G_s^{-1}(q) r_s.
  void grad_quad_single(std::span<const double> q, std::span<const double> r_s,
                        int s, std::span<double> out) {
    tape_.clear();
    std::vector<ad::Var> vars;
    vars.reserve(q.size());
    for (double v : q) vars.push_back(tape_.input(v));
    Blocked<ad::Var> qb(std::move(vars), specs_);
    const auto f = factorize(model_->scaling(s, Prefix<ad::Var>(qb, s)));
    std::vector<ad::Var> rs(r_s.begin(), r_s.end());
    const std::vector<ad::Var> w =
        factor_solve_L(f, std::span<const ad::Var>(rs));
    ad::Var value(0.0);
    for (const auto& wi : w) value += 0.5 * wi * wi;
    if (!value.taped()) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    tape_.gradient(value, out);
  }

  // Full grad_q H(q, r); used by the implicit-integrator oracle in tests.
  void grad_q_hamiltonian(std::span<const double> q, std::span<const double> r,
                          std::span<double> out) {
    grad_q(q, r, true, 0, out);
  }

  // grad_p H(q, r) = blockwise G_s^{-1}(q) r_s.
  std::vector<double> inv_metric(const std::vector<BlockFactor<double>>& factors,
                                 std::span<const double> r) const {
    std::vector<double> out(r.size());
    int off = 0;
    for (int s = 0; s < block_count(); ++s) {
      const int d = specs_[s].dim;
      const std::vector<double> v = factor_solve_LLT(
          factors[s], r.subspan(static_cast<std::size_t>(off),
                                static_cast<std::size_t>(d)));
      std::copy(v.begin(), v.end(), out.begin() + off);
      off += d;
    }
    return out;
  }

  // One explicit generalized-leapfrog step. Returns false on a divergent
  // evaluation (caller rejects).
  bool glf_step(std::vector<double>& q, std::vector<double>& r,
                double step_size) {
    const int nb = block_count();
    try {
      std::vector<double> grad(static_cast<std::size_t>(dim_));
      // momentum half-kicks, blocks R..1: each sees phi plus the quadratic
      // forms of strictly later blocks (already half-kicked)
      grad_q(q, r, true, nb, grad);  // phi only
      std::vector<double> rstar(r);
      std::vector<double> extra(static_cast<std::size_t>(dim_));
      for (int s = nb - 1; s >= 0; --s) {
        const int off = offset(s);
        for (int i = 0; i < specs_[s].dim; ++i)
          rstar[off + i] = r[off + i] - 0.5 * step_size * grad[off + i];
        if (s > 0) {
          const std::span<const double> rs(rstar.data() + off,
                                           static_cast<std::size_t>(specs_[s].dim));
          grad_quad_single(q, rs, s, extra);
          for (int i = 0; i < dim_; ++i) grad[i] += extra[i];
        }
      }
      // position updates, blocks 1..R, averaged inverse metrics
      const auto factors_old = factors_at(q);
      std::vector<double> qnew(q);
      for (int s = 0; s < nb; ++s) {
        const int off = offset(s);
        const int d = specs_[s].dim;
        const std::span<const double> rs(rstar.data() + off,
                                         static_cast<std::size_t>(d));
        const std::vector<double> drift_old =
            factor_solve_LLT(factors_old[s], rs);
        std::vector<double> drift_new = drift_old;
        if (s > 0) {
          Blocked<double> qb(qnew, specs_);
          const auto f_new =
              factorize(model_->scaling(s, Prefix<double>(qb, s)));
          drift_new = factor_solve_LLT(f_new, rs);
        }
        for (int i = 0; i < d; ++i)
          qnew[off + i] =
              q[off + i] + 0.5 * step_size * (drift_old[i] + drift_new[i]);
      }
      // final half kick with the full Hamiltonian gradient at the new point
      grad_q(qnew, rstar, true, 0, grad);
      for (int i = 0; i < dim_; ++i) rstar[i] -= 0.5 * step_size * grad[i];
      q = std::move(qnew);
      r = std::move(rstar);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  TransitionDiag transition(ChainState& state, double step_size,
                            const PathLength& path) {
    TransitionDiag diag;
    std::vector<double> q = state.q;
    std::vector<double> r(static_cast<std::size_t>(dim_));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<BlockFactor<double>> factors;
    double h0;
    try {
      factors = factors_at(q);
      int off = 0;
      for (int s = 0; s < block_count(); ++s) {
        const int d = specs_[s].dim;
        std::vector<double> z(static_cast<std::size_t>(d));
        for (auto& zi : z) zi = normal(state.rng);
        const std::vector<double> rs =
            factor_mult_L(factors[s], std::span<const double>(z));
        std::copy(rs.begin(), rs.end(), r.begin() + off);
        off += d;
      }
      h0 = potential(q, factors) + kinetic(r, factors);
    } catch (const Error&) {
      diag.divergent = true;
      return diag;
    }

    int steps = path.min_steps;
    if (path.max_steps > path.min_steps) {
      std::uniform_int_distribution<int> jitter(path.min_steps,
                                                path.max_steps);
      steps = jitter(state.rng);
    }
    diag.leapfrog_steps = steps;
    for (int l = 0; l < steps; ++l) {
      if (!glf_step(q, r, step_size)) {
        diag.divergent = true;
        return diag;
      }
    }
    double h1;
    try {
      h1 = hamiltonian(q, r);
    } catch (const Error&) {
      diag.divergent = true;
      return diag;
    }
    diag.energy_error = h1 - h0;
    if (!std::isfinite(diag.energy_error)) {
      diag.divergent = true;
      return diag;
    }
    diag.accept_prob = std::min(1.0, std::exp(h0 - h1));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(state.rng) < diag.accept_prob) {
      state.q = std::move(q);
      state.eval.original = state.q;
    }
    return diag;
  }

  // Fixed step size (0.1 unless configured) and jittered path length; no
  // adaptation. Draws are in the original parameterisation.
  ChainDraws run_chain(const HmcConfig& config, std::uint64_t seed,
                       int chain_index = 0) {
    ChainState state;
    state.q.assign(static_cast<std::size_t>(dim_), 0.0);
    state.eval.original = state.q;
    state.rng = chain_rng(seed, chain_index);
    const double eps =
        config.init_step_size > 0.0 ? config.init_step_size : 0.1;

    ChainDraws out;
    out.dim = dim_;
    out.step_size = eps;
    for (int it = 0; it < config.warmup; ++it)
      transition(state, eps, config.path);
    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 0; it < config.iters; ++it) {
      const TransitionDiag diag = transition(state, eps, config.path);
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

 private:
  int offset(int r) const {
    int off = 0;
    for (int s = 0; s < r; ++s) off += specs_[s].dim;
    return off;
  }

  const Model* model_;
  std::vector<BlockSpec> specs_;
  int dim_;
  ad::Tape tape_;
};

}  // namespace drhmc
