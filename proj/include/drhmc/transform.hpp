#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drhmc/autodiff.hpp"
#include "drhmc/blocked.hpp"
#include "drhmc/errors.hpp"
#include "drhmc/scaling.hpp"

// The rescaling bijection. Block by block,
//
//   q_(r) = h_(r)(q_(1:r-1)) + L_(r)^{-T}(q_(1:r-1)) q_bar_(r),
//
// where L_(r) is the lower Cholesky factor of the model's scaling block
// G_(r). Sequential dependence of G and h makes the map explicit in both
// directions, and its log Jacobian determinant is -sum_r log|L_(r)|.
// The modified target adds that Jacobian term to the original log density.

namespace drhmc {

// Common result shape consumed by the samplers. `original` carries the
// coordinates to record (the original parameterisation for transformed
// targets). A divergent evaluation has value -inf and no usable gradient.
struct TargetEval {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> original;
  bool divergent = false;
};

// Model requirements (duck-typed; S ranges over double and ad::Var):
//   std::span<const BlockSpec> blocks() const;
//   S log_density(const Blocked<S>& q) const;
//   ScalingBlock<S> scaling(int r, const Prefix<S>& prefix) const;
//   std::vector<S> location(int r, const Prefix<S>& prefix) const;
//   std::vector<std::string> coordinate_names() const;
template <class Model>
class ModifiedTarget {
 public:
  explicit ModifiedTarget(const Model& model)
      : model_(&model),
        specs_(model.blocks().begin(), model.blocks().end()),
        dim_(total_dim(specs_)) {}

  int dim() const { return dim_; }
  const Model& model() const { return *model_; }
  std::vector<std::string> coordinate_names() const {
    return model_->coordinate_names();
  }

  template <class S>
  struct ForwardData {
    Blocked<S> original;
    S log_jac;
  };

  // q = Psi(q_bar) and the Jacobian log-determinant, sequentially over
  // blocks. Throws NotSpdError when a scaling block fails to factorize.
  template <class S>
  ForwardData<S> forward_blocks(const Blocked<S>& q_bar) const {
    ForwardData<S> out{Blocked<S>::zeros(specs_), S(0.0)};
    for (int r = 0; r < static_cast<int>(specs_.size()); ++r) {
      const Prefix<S> prefix(out.original, r);
      const BlockFactor<S> factor = factorize(model_->scaling(r, prefix));
      const std::vector<S> h = model_->location(r, prefix);
      const std::vector<S> shift = factor_solve_LT(factor, q_bar.block(r));
      auto dest = out.original.mutable_block(r);
      for (int i = 0; i < static_cast<int>(dest.size()); ++i)
        dest[i] = h[i] + shift[i];
      out.log_jac -= factor_log_det(factor);
    }
    return out;
  }

  struct Forward {
    std::vector<double> original;
    double log_jac;
  };

  Forward forward(std::span<const double> q_bar) const {
    Blocked<double> in(std::vector<double>(q_bar.begin(), q_bar.end()),
                       specs_);
    auto data = forward_blocks(in);
    return {std::move(data.original.mutable_flat()), data.log_jac};
  }

  // q_bar_(r) = L_(r)^T (q_(r) - h_(r)); inverse of forward().
  std::vector<double> inverse(std::span<const double> q_orig) const {
    Blocked<double> q(std::vector<double>(q_orig.begin(), q_orig.end()),
                      specs_);
    std::vector<double> out(static_cast<std::size_t>(dim_));
    for (int r = 0; r < static_cast<int>(specs_.size()); ++r) {
      const Prefix<double> prefix(q, r);
      const BlockFactor<double> factor = factorize(model_->scaling(r, prefix));
      const std::vector<double> h = model_->location(r, prefix);
      std::vector<double> centered(q.block(r).begin(), q.block(r).end());
      for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= h[i];
      const std::vector<double> qb = factor_mult_LT(
          factor, std::span<const double>(centered));
      std::copy(qb.begin(), qb.end(), out.begin() + q.offset(r));
    }
    return out;
  }

  // Modified log density log pi(Psi(q_bar)) + log|grad Psi| and its
  // gradient in one taped sweep; Cholesky factors and solves are recorded
  // once and shared by value and gradient. Recoverable numerical failures
  // surface as a divergent evaluation.
  TargetEval eval_with_gradient(std::span<const double> q_bar) {
    tape_.clear();
    TargetEval out;
    try {
      std::vector<ad::Var> vars;
      vars.reserve(q_bar.size());
      for (double v : q_bar) vars.push_back(tape_.input(v));
      Blocked<ad::Var> in(std::move(vars), specs_);
      auto data = forward_blocks(in);
      const ad::Var value = model_->log_density(data.original) + data.log_jac;
      out.value = value.value();
      out.grad.resize(q_bar.size());
      tape_.gradient(value, out.grad);
      out.original.resize(q_bar.size());
      for (std::size_t i = 0; i < out.original.size(); ++i)
        out.original[i] = data.original.flat()[i].value();
    } catch (const Error&) {
      out.value = -std::numeric_limits<double>::infinity();
      out.grad.clear();
      out.original.clear();
      out.divergent = true;
    }
    return out;
  }

 private:
  const Model* model_;
  std::vector<BlockSpec> specs_;
  int dim_;
  ad::Tape tape_;  // confined to one chain, rebuilt per evaluation
};

// HMC on the original parameterisation, for reference runs.
template <class Model>
class DirectTarget {
 public:
  explicit DirectTarget(const Model& model)
      : model_(&model),
        specs_(model.blocks().begin(), model.blocks().end()),
        dim_(total_dim(specs_)) {}

  int dim() const { return dim_; }
  std::vector<std::string> coordinate_names() const {
    return model_->coordinate_names();
  }

  TargetEval eval_with_gradient(std::span<const double> q) {
    tape_.clear();
    TargetEval out;
    try {
      std::vector<ad::Var> vars;
      vars.reserve(q.size());
      for (double v : q) vars.push_back(tape_.input(v));
      Blocked<ad::Var> in(std::move(vars), specs_);
      const ad::Var value = model_->log_density(in);
      out.value = value.value();
      out.grad.resize(q.size());
      tape_.gradient(value, out.grad);
      out.original.assign(q.begin(), q.end());
    } catch (const Error&) {
      out.value = -std::numeric_limits<double>::infinity();
      out.grad.clear();
      out.original.clear();
      out.divergent = true;
    }
    return out;
  }

 private:
  const Model* model_;
  std::vector<BlockSpec> specs_;
  int dim_;
  ad::Tape tape_;
};

// h_(R) = G_(R)^{-1} [ I_A * prior_mean + I_C * obs_mode ]: the two-source
// Gaussian information combination. Exact when the conditional of the block
// given its predecessors and the data is Gaussian.
template <class S>
std::vector<S> approx_conditional_mean(const BlockFactor<S>& g_factor,
                                       const InfoTerm<S>& prior_info,
                                       std::span<const S> prior_mean,
                                       const InfoTerm<S>& obs_info,
                                       std::span<const S> obs_mode) {
  std::vector<S> rhs = info_matvec(prior_info, prior_mean);
  const std::vector<S> obs = info_matvec(obs_info, obs_mode);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += obs[i];
  return factor_solve_LLT(g_factor, std::span<const S>(rhs));
}

}  // namespace drhmc
