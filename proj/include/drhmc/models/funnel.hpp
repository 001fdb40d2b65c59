#pragma once

#include <string>
#include <vector>

#include "drhmc/blocked.hpp"
#include "drhmc/models/common.hpp"
#include "drhmc/scaling.hpp"

// Two-dimensional funnel:
//
//   y1 | q1, q2 ~ N(q2, exp(-3 q1)),   q1 ~ N(0,1),   q2 ~ N(0,1).
//
// Scaling matrix diag(1 + 9/2, 1 + exp(3 q1)); the optional second-block
// location is the exact conditional mean E(q2 | y1, q1).

namespace drhmc::models {

class FunnelModel {
 public:
  explicit FunnelModel(double y1, HStrategy h2 = HStrategy::kConditionalMean)
      : y1_(y1), h2_(h2) {
    if (h2 != HStrategy::kZero && h2 != HStrategy::kConditionalMean)
      throw InvalidArgument("funnel supports h2 in {zero, mean}");
    specs_ = {BlockSpec{1, BlockStructure::kDense},
              BlockSpec{1, BlockStructure::kDense}};
  }

  std::span<const BlockSpec> blocks() const { return specs_; }
  std::vector<std::string> coordinate_names() const { return {"q1", "q2"}; }
  double observation() const { return y1_; }
  HStrategy h_strategy() const { return h2_; }

  template <class S>
  ScalingBlock<S> scaling(int r, const Prefix<S>& q) const {
    if (r == 0) {
      const InfoTerm<S> terms[] = {InfoTerm<S>{S(1.0)}, InfoTerm<S>{S(4.5)}};
      return assemble_block<S>(1, BlockStructure::kDense, terms);
    }
    using std::exp;
    const S obs_info = exp(3.0 * q.block(0)[0]);
    const InfoTerm<S> terms[] = {InfoTerm<S>{S(1.0)}, InfoTerm<S>{obs_info}};
    return assemble_block<S>(1, BlockStructure::kDense, terms);
  }

  template <class S>
  std::vector<S> location(int r, const Prefix<S>& q) const {
    if (r == 0 || h2_ == HStrategy::kZero) return {S(0.0)};
    // E(q2 | y1, q1) = y1 / (1 + exp(-3 q1))
    using std::exp;
    return {y1_ / (S(1.0) + exp(-3.0 * q.block(0)[0]))};
  }

  template <class S>
  S log_density(const Blocked<S>& q) const {
    S total(0.0);
    for_each_term(q, [&](const char*, const S& v) { total += v; });
    return total;
  }

  template <class S, class Fn>
  void for_each_term(const Blocked<S>& q, Fn&& fn) const {
    const S& q1 = q.block(0)[0];
    const S& q2 = q.block(1)[0];
    fn("prior_q1", -0.5 * q1 * q1);
    fn("prior_q2", -0.5 * q2 * q2);
    using std::exp;
    const S resid = y1_ - q2;
    fn("obs_y1", 1.5 * q1 - 0.5 * resid * resid * exp(3.0 * q1));
  }

  std::vector<std::pair<std::string, double>> log_density_terms(
      const Blocked<double>& q) const {
    std::vector<std::pair<std::string, double>> out;
    for_each_term(q, [&](const char* name, double v) { out.emplace_back(name, v); });
    return out;
  }

 private:
  double y1_;
  HStrategy h2_;
  std::vector<BlockSpec> specs_;
};

}  // namespace drhmc::models
