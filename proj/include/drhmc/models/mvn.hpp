#pragma once

#include <string>
#include <vector>

#include "drhmc/blocked.hpp"
#include "drhmc/linalg.hpp"
#include "drhmc/scaling.hpp"

// Gaussian target N(mu, Q^{-1}) with a fixed block split. Scaling blocks
// are the conditional precisions Q_rr; each block's location is the
// conditional mean given its predecessor blocks. With a single block the
// rescaling whitens the target exactly. Used as a reference target in
// tests and for sampler stationarity checks.

namespace drhmc::models {

class MvnModel {
 public:
  MvnModel(linalg::DenseSym<double> precision, std::vector<double> mean,
           std::vector<int> block_dims, bool conditional_h = true)
      : q_(std::move(precision)),
        mean_(std::move(mean)),
        conditional_h_(conditional_h) {
    int off = 0;
    for (int d : block_dims) {
      specs_.push_back(BlockSpec{d, BlockStructure::kDense});
      offsets_.push_back(off);
      off += d;
    }
    if (off != q_.n || static_cast<int>(mean_.size()) != q_.n)
      throw InvalidArgument("MvnModel: dimension mismatch");
  }

  std::span<const BlockSpec> blocks() const { return specs_; }
  std::vector<std::string> coordinate_names() const {
    std::vector<std::string> names;
    for (int i = 0; i < q_.n; ++i) names.push_back("q." + std::to_string(i + 1));
    return names;
  }
  const linalg::DenseSym<double>& precision() const { return q_; }
  const std::vector<double>& mean() const { return mean_; }

  template <class S>
  ScalingBlock<S> scaling(int r, const Prefix<S>&) const {
    const int d = specs_[r].dim;
    const int off = offsets_[r];
    auto g = linalg::DenseSym<S>::zero(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) g.at(i, j) = S(q_element(off + i, off + j));
    return g;
  }

  template <class S>
  std::vector<S> location(int r, const Prefix<S>& q) const {
    const int d = specs_[r].dim;
    const int off = offsets_[r];
    std::vector<S> h(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) h[i] = S(mean_[off + i]);
    if (!conditional_h_ || r == 0) return h;
    // mu_r - Q_rr^{-1} sum_{s<r} Q_rs (q_s - mu_s)
    std::vector<S> rhs(static_cast<std::size_t>(d), S(0.0));
    for (int s = 0; s < r; ++s) {
      const auto qs = q.block(s);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < specs_[s].dim; ++j)
          rhs[i] += q_element(off + i, offsets_[s] + j) *
                    (qs[j] - mean_[offsets_[s] + j]);
    }
    auto g = linalg::DenseSym<S>::zero(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) g.at(i, j) = S(q_element(off + i, off + j));
    const auto f = linalg::dense_chol(g);
    const auto shift = linalg::dense_solve_LLT(f, std::span<const S>(rhs));
    for (int i = 0; i < d; ++i) h[i] -= shift[i];
    return h;
  }

  template <class S>
  S log_density(const Blocked<S>& q) const {
    std::vector<S> centered(q.flat());
    for (int i = 0; i < q_.n; ++i) centered[i] -= mean_[i];
    S quad(0.0);
    for (int i = 0; i < q_.n; ++i)
      for (int j = 0; j < q_.n; ++j)
        quad += centered[i] * q_element(i, j) * centered[j];
    return -0.5 * quad;
  }

 private:
  double q_element(int i, int j) const {
    return j <= i ? q_.at(i, j) : q_.at(j, i);
  }

  linalg::DenseSym<double> q_;
  std::vector<double> mean_;
  bool conditional_h_;
  std::vector<BlockSpec> specs_;
  std::vector<int> offsets_;
};

}  // namespace drhmc::models
