#pragma once

#include <cmath>

namespace drhmc {

// Dual-averaging step-size adaptation driving the observed acceptance
// probability toward a target. Constants gamma = 0.05, t0 = 10,
// kappa = 0.75 are the standard published values.
class DualAveraging {
 public:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  void init(double step_size0) {
    mu_ = std::log(10.0 * step_size0);
    log_step_ = std::log(step_size0);
    log_step_avg_ = log_step_;
    h_bar_ = 0.0;
    count_ = 0;
  }

  void update(double observed_accept, double target_accept) {
    ++count_;
    const double m = static_cast<double>(count_);
    const double w = 1.0 / (m + kT0);
    h_bar_ = (1.0 - w) * h_bar_ + w * (target_accept - observed_accept);
    log_step_ = mu_ - std::sqrt(m) / kGamma * h_bar_;
    const double eta = std::pow(m, -kKappa);
    log_step_avg_ = eta * log_step_ + (1.0 - eta) * log_step_avg_;
  }

  double current() const { return std::exp(log_step_); }
  double averaged() const { return std::exp(log_step_avg_); }
  double log_averaged() const { return log_step_avg_; }
  int count() const { return count_; }

 private:
  double mu_ = 0.0;
  double log_step_ = 0.0;
  double log_step_avg_ = 0.0;
  double h_bar_ = 0.0;
  int count_ = 0;
};

}  // namespace drhmc
