#include "drhmc/autodiff.hpp"

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include <gtest/gtest.h>

namespace ad = drhmc::ad;
using ad::Var;

TEST(Autodiff, SquareAtThree) {
  const double x[] = {3.0};
  const auto [value, grad] = ad::evaluate_with_gradient(
      [](std::span<const Var> v) { return ad::square(v[0]); }, x);
  EXPECT_DOUBLE_EQ(value, 9.0);
  EXPECT_DOUBLE_EQ(grad[0], 6.0);
}

TEST(Autodiff, ExpAtZero) {
  const double x[] = {0.0};
  const auto [value, grad] = ad::evaluate_with_gradient(
      [](std::span<const Var> v) { return ad::exp(v[0]); }, x);
  EXPECT_DOUBLE_EQ(value, 1.0);
  EXPECT_DOUBLE_EQ(grad[0], 1.0);
}

TEST(Autodiff, LogTimesTanhMatchesFiniteDifferences) {
  const double x[] = {2.0, 0.5};
  const double err = ad::gradient_check(
      [](std::span<const Var> v) { return ad::log(v[0]) * ad::tanh(v[1]); }, x,
      1e-6);
  EXPECT_LT(err, 1e-6);
}

TEST(Autodiff, ConstantFunctionHasZeroGradientError) {
  const double x[] = {0.7, -1.3};
  const double err = ad::gradient_check(
      [](std::span<const Var> v) { return v[0] * 0.0 + 3.5; }, x, 1e-5);
  EXPECT_DOUBLE_EQ(err, 0.0);
}

TEST(Autodiff, FunnelLogTargetGradientCheck) {
  // log N(q2;0,1) + log N(q1;0,1) + log N(y; q2, exp(-3 q1)), y = 0.5
  auto target = [](std::span<const Var> v) {
    const Var& q1 = v[0];
    const Var& q2 = v[1];
    const Var resid = 0.5 - q2;
    return -0.5 * q1 * q1 - 0.5 * q2 * q2 + 1.5 * q1 -
           0.5 * resid * resid * ad::exp(3.0 * q1);
  };
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double x[] = {normal(rng), normal(rng)};
    EXPECT_LT(ad::gradient_check(target, x, 1e-6), 1e-5);
  }
}

// Every supported op against its hand-coded derivative at random points.
TEST(Autodiff, UnaryOpsMatchAnalyticDerivatives) {
  struct Case {
    const char* name;
    Var (*op)(const Var&);
    double (*deriv)(double);
    double lo, hi;
  };
  const Case cases[] = {
      {"exp", [](const Var& a) { return ad::exp(a); },
       [](double x) { return std::exp(x); }, -3.0, 3.0},
      {"log", [](const Var& a) { return ad::log(a); },
       [](double x) { return 1.0 / x; }, 0.05, 10.0},
      {"sqrt", [](const Var& a) { return ad::sqrt(a); },
       [](double x) { return 0.5 / std::sqrt(x); }, 0.05, 10.0},
      {"tanh", [](const Var& a) { return ad::tanh(a); },
       [](double x) { return 1.0 - std::tanh(x) * std::tanh(x); }, -4.0, 4.0},
      {"cosh", [](const Var& a) { return ad::cosh(a); },
       [](double x) { return std::sinh(x); }, -4.0, 4.0},
      {"abs", [](const Var& a) { return ad::abs(a); },
       [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }, -2.0,
       2.0},
      {"square", [](const Var& a) { return ad::square(a); },
       [](double x) { return 2.0 * x; }, -3.0, 3.0},
      {"neg", [](const Var& a) { return -a; },
       [](double) { return -1.0; }, -3.0, 3.0},
      {"lgamma", [](const Var& a) { return ad::lgamma(a); },
       [](double x) { return drhmc::digamma(x); }, 0.1, 20.0},
  };
  std::mt19937_64 rng(11);
  for (const auto& c : cases) {
    std::uniform_real_distribution<double> unif(c.lo, c.hi);
    for (int rep = 0; rep < 1000; ++rep) {
      const double x = unif(rng);
      ad::Tape tape;
      const Var v = tape.input(x);
      const Var out = c.op(v);
      const auto grad = tape.gradient(out);
      EXPECT_NEAR(grad[0], c.deriv(x), 1e-10 * (1.0 + std::abs(c.deriv(x))))
          << c.name << " at " << x;
    }
  }
}

TEST(Autodiff, BinaryOpsMatchAnalyticDerivatives) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.2, 3.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double a = unif(rng), b = unif(rng);
    ad::Tape tape;
    const Var va = tape.input(a);
    const Var vb = tape.input(b);
    struct Expect {
      Var out;
      double da, db;
    };
    const Expect cases[] = {
        {va + vb, 1.0, 1.0},
        {va - vb, 1.0, -1.0},
        {va * vb, b, a},
        {va / vb, 1.0 / b, -a / (b * b)},
    };
    for (const auto& c : cases) {
      const auto g = tape.gradient(c.out);
      EXPECT_NEAR(g[0], c.da, 1e-12 * (1.0 + std::abs(c.da)));
      EXPECT_NEAR(g[1], c.db, 1e-12 * (1.0 + std::abs(c.db)));
    }
  }
}

TEST(Autodiff, ReverseSweepIsLinear) {
  auto f = [](std::span<const Var> v) {
    return ad::exp(v[0]) * ad::tanh(v[1]) + v[0] / (v[1] + 2.0);
  };
  auto g = [](std::span<const Var> v) {
    return ad::log(v[0] * v[0] + 1.0) - v[1] * v[0];
  };
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int rep = 0; rep < 100; ++rep) {
    const double a = unif(rng), b = unif(rng);
    const double x[] = {unif(rng), unif(rng)};
    auto combo = [&](std::span<const Var> v) { return a * f(v) + b * g(v); };
    const auto [cv, cg] = ad::evaluate_with_gradient(combo, x);
    const auto [fv, fg] = ad::evaluate_with_gradient(f, x);
    const auto [gv, gg] = ad::evaluate_with_gradient(g, x);
    EXPECT_NEAR(cv, a * fv + b * gv, 1e-12);
    for (int i = 0; i < 2; ++i)
      EXPECT_NEAR(cg[i], a * fg[i] + b * gg[i], 1e-12);
  }
}

TEST(Autodiff, ReplayIsBitIdentical) {
  auto f = [](std::span<const Var> v) {
    return ad::sqrt(ad::exp(v[0]) + ad::square(v[1])) * ad::tanh(v[2]);
  };
  const double x[] = {0.3, -1.2, 0.9};
  const auto [v1, g1] = ad::evaluate_with_gradient(f, x);
  const auto [v2, g2] = ad::evaluate_with_gradient(f, x);
  EXPECT_EQ(v1, v2);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(g1[i], g2[i]);
}

TEST(Autodiff, DomainAndEvalErrors) {
  ad::Tape tape;
  const Var x = tape.input(-1.0);
  EXPECT_THROW((void)ad::log(x), drhmc::DomainError);
  EXPECT_THROW((void)ad::sqrt(x), drhmc::DomainError);
  const Var big = tape.input(1e308);
  try {
    (void)(ad::exp(big));  // overflows to inf
    FAIL() << "expected EvalError";
  } catch (const drhmc::EvalError& e) {
    EXPECT_NE(e.node_index(), drhmc::EvalError::npos);
  }
  const Var zero = tape.input(0.0);
  EXPECT_THROW((void)(x / zero), drhmc::EvalError);
}

TEST(Autodiff, UntapedLiteralsBehaveLikeDoubles) {
  const Var a(2.0);
  const Var b(3.0);
  const Var c = a * b + ad::exp(Var(0.0));
  EXPECT_FALSE(c.taped());
  EXPECT_DOUBLE_EQ(c.value(), 7.0);
  // a literal meeting a taped operand is promoted onto the tape
  ad::Tape tape;
  const Var x = tape.input(1.5);
  const Var y = c + x * a;
  EXPECT_TRUE(y.taped());
  const auto g = tape.gradient(y);
  EXPECT_DOUBLE_EQ(g[0], 2.0);
}

TEST(Autodiff, GradientCheckRejectsBadStep) {
  const double x[] = {1.0};
  EXPECT_THROW(
      (void)ad::gradient_check(
          [](std::span<const Var> v) { return v[0]; }, x, 0.0),
      drhmc::InvalidArgument);
}
