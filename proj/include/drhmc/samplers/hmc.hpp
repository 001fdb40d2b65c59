#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "drhmc/samplers/dual_average.hpp"
#include "drhmc/special.hpp"
#include "drhmc/transform.hpp"

// Fixed/jittered path-length HMC with leapfrog integration and
// dual-averaging step-size adaptation. Path length is drawn uniformly from
// {min_steps, ..., max_steps} each transition; there is no tree building.

namespace drhmc {

struct PathLength {
  int min_steps = 8;
  int max_steps = 24;
};

struct HmcConfig {
  double target_accept = 0.8;
  int warmup = 1000;
  int iters = 1000;
  PathLength path{};
  std::vector<double> mass_diag{};  // empty: identity
  double init_step_size = 0.0;      // <= 0: bracketing heuristic
  bool adapt_mass = false;          // windowed diagonal estimate, off by default
  double max_divergence_rate = 0.5; // sampling-phase abort threshold
};

struct TransitionDiag {
  double accept_prob = 0.0;
  bool divergent = false;
  int leapfrog_steps = 0;
  double energy_error = 0.0;
};

// One chain's output: per-iteration draws in both parameterisations plus
// transition diagnostics. Row i is iteration i after warmup.
struct ChainDraws {
  int dim = 0;
  std::vector<double> original;  // iters x dim, row-major
  std::vector<double> modified;
  std::vector<TransitionDiag> diags;
  double seconds = 0.0;
  int divergences = 0;
  double step_size = 0.0;
  bool aborted = false;

  std::span<const double> original_row(int i) const {
    return {original.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> modified_row(int i) const {
    return {modified.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  int rows() const { return dim == 0 ? 0 : static_cast<int>(modified.size()) / dim; }
};

inline std::mt19937_64 chain_rng(std::uint64_t seed, int chain_index) {
  // seed xor chain index, mixed so adjacent chains decorrelate
  return std::mt19937_64(
      splitmix64(seed ^ static_cast<std::uint64_t>(chain_index)));
}

namespace hmc_detail {

struct Phase {
  std::vector<double> q;
  std::vector<double> p;
  TargetEval eval;
};

inline double kinetic(std::span<const double> p,
                      std::span<const double> mass_diag) {
  double k = 0.0;
  if (mass_diag.empty()) {
    for (double pi : p) k += pi * pi;
  } else {
    for (std::size_t i = 0; i < p.size(); ++i)
      k += p[i] * p[i] / mass_diag[i];
  }
  return 0.5 * k;
}

}  // namespace hmc_detail

// One leapfrog step: half kick, drift with M^-1 p, half kick. Returns false
// (state untouched beyond the attempted move) on a divergent evaluation.
template <class Target>
bool leapfrog_step(Target& target, hmc_detail::Phase& s, double step_size,
                   std::span<const double> mass_diag) {
  const std::size_t d = s.q.size();
  for (std::size_t i = 0; i < d; ++i)
    s.p[i] += 0.5 * step_size * s.eval.grad[i];
  for (std::size_t i = 0; i < d; ++i) {
    const double m = mass_diag.empty() ? 1.0 : mass_diag[i];
    s.q[i] += step_size * s.p[i] / m;
  }
  s.eval = target.eval_with_gradient(s.q);
  if (s.eval.divergent) return false;
  for (std::size_t i = 0; i < d; ++i)
    s.p[i] += 0.5 * step_size * s.eval.grad[i];
  return true;
}

// Sampler state for one chain.
struct ChainState {
  std::vector<double> q;  // current point in the sampled parameterisation
  TargetEval eval;        // refreshed on acceptance only
  std::mt19937_64 rng;
  DualAveraging adapt;
  int iteration = 0;
};

// Momentum refresh, L leapfrog steps, Metropolis correction. Rejection
// preserves the current state bit-exactly.
template <class Target>
TransitionDiag hmc_transition(Target& target, ChainState& state,
                              double step_size, const PathLength& path,
                              std::span<const double> mass_diag) {
  TransitionDiag diag;
  const std::size_t d = state.q.size();
  hmc_detail::Phase s;
  s.q = state.q;
  s.p.resize(d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double m = mass_diag.empty() ? 1.0 : mass_diag[i];
    s.p[i] = std::sqrt(m) * normal(state.rng);
  }
  s.eval = state.eval;

  const double h0 = -state.eval.value + hmc_detail::kinetic(s.p, mass_diag);

  int steps = path.min_steps;
  if (path.max_steps > path.min_steps) {
    std::uniform_int_distribution<int> jitter(path.min_steps, path.max_steps);
    steps = jitter(state.rng);
  }
  diag.leapfrog_steps = steps;

  for (int l = 0; l < steps; ++l) {
    if (!leapfrog_step(target, s, step_size, mass_diag)) {
      diag.divergent = true;
      diag.accept_prob = 0.0;
      diag.energy_error = std::numeric_limits<double>::infinity();
      return diag;
    }
  }

  const double h1 = -s.eval.value + hmc_detail::kinetic(s.p, mass_diag);
  diag.energy_error = h1 - h0;
  if (!std::isfinite(diag.energy_error)) {
    diag.divergent = true;
    diag.accept_prob = 0.0;
    return diag;
  }
  diag.accept_prob = std::min(1.0, std::exp(h0 - h1));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (unif(state.rng) < diag.accept_prob) {
    state.q = std::move(s.q);
    state.eval = std::move(s.eval);
  }
  return diag;
}

// Doubling/halving heuristic for the initial step size: target acceptance
// of roughly 1/2 on a single trial leapfrog step.
template <class Target>
double initial_step_size(Target& target, const ChainState& state,
                         std::span<const double> mass_diag,
                         std::mt19937_64& rng) {
  const std::size_t d = state.q.size();
  std::vector<double> p(d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double m = mass_diag.empty() ? 1.0 : mass_diag[i];
    p[i] = std::sqrt(m) * normal(rng);
  }
  auto accept_of = [&](double eps) {
    hmc_detail::Phase s{state.q, p, state.eval};
    if (!leapfrog_step(target, s, eps, mass_diag)) return 0.0;
    const double h0 = -state.eval.value + hmc_detail::kinetic(p, mass_diag);
    const double h1 = -s.eval.value + hmc_detail::kinetic(s.p, mass_diag);
    return std::isfinite(h1) ? std::exp(std::min(0.0, h0 - h1)) : 0.0;
  };
  double eps = 1.0;
  double a = accept_of(eps);
  const bool grow = a > 0.5;
  for (int k = 0; k < 40; ++k) {
    if (grow) {
      if (a <= 0.5) break;
      eps *= 2.0;
    } else {
      if (a >= 0.5) break;
      eps *= 0.5;
    }
    a = accept_of(eps);
  }
  return grow ? 0.5 * eps : eps;  // last size on the conservative side
}

// Runs one chain: q starts at zero (the modified parameterisation's natural
// origin), step size is dual-averaged during warmup then frozen at the
// averaged value, and post-warmup draws are recorded. Deterministic given
// (seed, chain_index).
template <class Target>
ChainDraws run_chain(Target& target, const HmcConfig& config,
                     std::uint64_t seed, int chain_index = 0) {
  const int d = target.dim();
  ChainState state;
  state.q.assign(static_cast<std::size_t>(d), 0.0);
  state.rng = chain_rng(seed, chain_index);
  state.eval = target.eval_with_gradient(state.q);
  if (state.eval.divergent)
    throw NumericError("run_chain: divergent evaluation at the initial point");

  std::vector<double> mass = config.mass_diag;
  double eps = config.init_step_size > 0.0
                   ? config.init_step_size
                   : initial_step_size(target, state, mass, state.rng);
  state.adapt.init(eps);

  ChainDraws out;
  out.dim = d;
  out.original.reserve(static_cast<std::size_t>(config.iters) * d);
  out.modified.reserve(static_cast<std::size_t>(config.iters) * d);
  out.diags.reserve(static_cast<std::size_t>(config.iters));

  // optional diagonal mass adaptation window in the second half of warmup
  const int window_begin = config.warmup / 2;
  const int window_end = config.warmup - config.warmup / 10;
  std::vector<double> wsum, wsum2;
  int wcount = 0;
  if (config.adapt_mass) {
    wsum.assign(static_cast<std::size_t>(d), 0.0);
    wsum2.assign(static_cast<std::size_t>(d), 0.0);
  }

  for (int it = 0; it < config.warmup; ++it) {
    const TransitionDiag diag =
        hmc_transition(target, state, state.adapt.current(), config.path, mass);
    state.adapt.update(diag.divergent ? 0.0 : diag.accept_prob,
                       config.target_accept);
    if (config.adapt_mass && it >= window_begin && it < window_end) {
      for (int i = 0; i < d; ++i) {
        wsum[i] += state.q[i];
        wsum2[i] += state.q[i] * state.q[i];
      }
      ++wcount;
      if (it + 1 == window_end && wcount > 10) {
        mass.assign(static_cast<std::size_t>(d), 1.0);
        for (int i = 0; i < d; ++i) {
          const double mean = wsum[i] / wcount;
          const double var = wsum2[i] / wcount - mean * mean;
          if (var > 1e-12) mass[i] = 1.0 / var;
        }
        eps = initial_step_size(target, state, mass, state.rng);
        state.adapt.init(eps);
      }
    }
  }
  const double frozen = config.warmup > 0 ? state.adapt.averaged()
                                          : state.adapt.current();
  out.step_size = frozen;

  const auto t0 = std::chrono::steady_clock::now();
  for (int it = 0; it < config.iters; ++it) {
    const TransitionDiag diag =
        hmc_transition(target, state, frozen, config.path, mass);
    out.diags.push_back(diag);
    if (diag.divergent) ++out.divergences;
    out.modified.insert(out.modified.end(), state.q.begin(), state.q.end());
    out.original.insert(out.original.end(), state.eval.original.begin(),
                        state.eval.original.end());
    if (it >= 100 &&
        out.divergences >
            config.max_divergence_rate * static_cast<double>(it + 1)) {
      out.aborted = true;
      break;
    }
  }
  out.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

}  // namespace drhmc
