#include "drhmc/linalg.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "drhmc/autodiff.hpp"

namespace la = drhmc::linalg;
namespace ad = drhmc::ad;

namespace {

la::TriDiagSym<double> random_spd_tridiag(int t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  la::TriDiagSym<double> m;
  m.off.resize(static_cast<std::size_t>(t) - 1);
  for (auto& c : m.off) c = unif(rng);
  m.diag.resize(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    double row = 0.2 + 0.5 * (unif(rng) + 1.0);
    if (i > 0) row += std::abs(m.off[i - 1]);
    if (i + 1 < t) row += std::abs(m.off[i]);
    m.diag[i] = row;  // diagonally dominant, hence SPD
  }
  return m;
}

Eigen::MatrixXd dense_of(const la::TriDiagSym<double>& m) {
  const int t = m.dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(t, t);
  for (int i = 0; i < t; ++i) a(i, i) = m.diag[i];
  for (int i = 0; i + 1 < t; ++i) {
    a(i + 1, i) = m.off[i];
    a(i, i + 1) = m.off[i];
  }
  return a;
}

Eigen::MatrixXd factor_dense(const la::TriDiagChol<double>& f) {
  const int t = f.dim();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(t, t);
  for (int i = 0; i < t; ++i) l(i, i) = f.d(i);
  for (int i = 0; i + 1 < t; ++i) l(i + 1, i) = f.sub(i);
  return l;
}

}  // namespace

TEST(TriDiagChol, IdentityFactorsToIdentity) {
  la::TriDiagSym<double> m;
  m.diag = {1.0, 1.0, 1.0};
  m.off = {0.0, 0.0};
  const auto f = la::tridiag_chol(m);
  EXPECT_DOUBLE_EQ(f.d(0), 1.0);
  EXPECT_DOUBLE_EQ(f.d(1), 1.0);
  EXPECT_DOUBLE_EQ(f.d(2), 1.0);
  EXPECT_DOUBLE_EQ(f.sub(0), 0.0);
  EXPECT_DOUBLE_EQ(f.log_det, 0.0);
}

TEST(TriDiagChol, TwoByTwoHandValues) {
  la::TriDiagSym<double> m;
  m.diag = {2.0, 2.0};
  m.off = {1.0};
  const auto f = la::tridiag_chol(m);
  EXPECT_NEAR(f.d(0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.sub(0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.d(1), std::sqrt(1.5), 1e-15);
}

TEST(TriDiagChol, MatchesDenseOracleAtT200) {
  std::mt19937_64 rng(42);
  const auto m = random_spd_tridiag(200, rng);
  const auto f = la::tridiag_chol(m);
  const Eigen::MatrixXd a = dense_of(m);
  const Eigen::MatrixXd l = factor_dense(f);
  const double err = (l * l.transpose() - a).cwiseAbs().maxCoeff() /
                     a.cwiseAbs().maxCoeff();
  EXPECT_LT(err, 1e-12);
  const Eigen::MatrixXd l_ref = a.llt().matrixL();
  EXPECT_NEAR(f.log_det, l_ref.diagonal().array().log().sum(), 1e-10);
}

TEST(TriDiagChol, RoundTripOver200RandomInstances) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(2, 200);
  for (int rep = 0; rep < 200; ++rep) {
    const int t = dim(rng);
    const auto m = random_spd_tridiag(t, rng);
    const auto f = la::tridiag_chol(m);
    const Eigen::MatrixXd a = dense_of(m);
    const Eigen::MatrixXd l = factor_dense(f);
    const double err = (l * l.transpose() - a).cwiseAbs().maxCoeff() /
                       a.cwiseAbs().maxCoeff();
    ASSERT_LT(err, 1e-12) << "t=" << t;
  }
}

TEST(TriDiagChol, NotSpdRaisesRecoverableErrorWithPivot) {
  la::TriDiagSym<double> m;
  m.diag = {1.0, 0.2, 1.0};
  m.off = {1.0, 0.0};  // second pivot 0.2 - 1 < 0
  try {
    (void)la::tridiag_chol(m);
    FAIL() << "expected NotSpdError";
  } catch (const drhmc::NotSpdError& e) {
    EXPECT_EQ(e.pivot_index(), 1);
  }
}

TEST(TriDiagCholConst, DiagonalCase) {
  const auto f = la::tridiag_chol_const(2, 1.0, 7.0, 0.0);
  EXPECT_DOUBLE_EQ(f.d(0), 1.0);
  EXPECT_DOUBLE_EQ(f.d(1), 1.0);
  EXPECT_DOUBLE_EQ(f.sub(0), 0.0);
  EXPECT_DOUBLE_EQ(f.log_det, 0.0);
}

TEST(TriDiagCholConst, ExactlyEqualsExpandedForm) {
  const int t = 17;
  // RW(1) + I/2 precision pattern
  const double k = std::exp(0.3);
  const double a = 0.5 + k, b = 0.5 + 2.0 * k, c = -k;
  const auto f_const = la::tridiag_chol_const(t, a, b, c);
  la::TriDiagSym<double> m;
  m.diag.assign(t, b);
  m.diag.front() = a;
  m.diag.back() = a;
  m.off.assign(t - 1, c);
  const auto f = la::tridiag_chol(m);
  for (std::size_t i = 0; i < f.packed.size(); ++i)
    EXPECT_EQ(f_const.packed[i], f.packed[i]);
  EXPECT_EQ(f_const.log_det, f.log_det);
}

TEST(TriDiagCholConst, LogDetMatchesDenseOracle) {
  const auto f = la::tridiag_chol_const(100, 2.0, 3.0, -1.0);
  la::TriDiagSym<double> m;
  m.diag.assign(100, 3.0);
  m.diag.front() = 2.0;
  m.diag.back() = 2.0;
  m.off.assign(99, -1.0);
  const Eigen::MatrixXd l_ref = dense_of(m).llt().matrixL();
  EXPECT_NEAR(f.log_det, l_ref.diagonal().array().log().sum(), 1e-12);
}

TEST(TriDiagSolve, IdentityFactorReturnsInput) {
  const auto f = la::tridiag_chol_const(4, 1.0, 1.0, 0.0);
  const std::vector<double> y = {1.0, -2.0, 3.0, 0.5};
  EXPECT_EQ(la::solve_L(f, std::span<const double>(y)), y);
  EXPECT_EQ(la::solve_LT(f, std::span<const double>(y)), y);
  EXPECT_EQ(la::solve_LLT(f, std::span<const double>(y)), y);
}

TEST(TriDiagSolve, MatchesDenseSolves) {
  std::mt19937_64 rng(3);
  const int t = 50;
  const auto m = random_spd_tridiag(t, rng);
  const auto f = la::tridiag_chol(m);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(t);
  for (auto& v : y) v = normal(rng);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), t);
  const Eigen::MatrixXd l = factor_dense(f);

  const auto xl = la::solve_L(f, std::span<const double>(y));
  const Eigen::VectorXd xl_ref = l.triangularView<Eigen::Lower>().solve(yv);
  const auto xlt = la::solve_LT(f, std::span<const double>(y));
  const Eigen::VectorXd xlt_ref =
      l.transpose().triangularView<Eigen::Upper>().solve(yv);
  const auto xllt = la::solve_LLT(f, std::span<const double>(y));
  const Eigen::VectorXd xllt_ref = dense_of(m).ldlt().solve(yv);
  for (int i = 0; i < t; ++i) {
    EXPECT_NEAR(xl[i], xl_ref(i), 1e-10);
    EXPECT_NEAR(xlt[i], xlt_ref(i), 1e-10);
    EXPECT_NEAR(xllt[i], xllt_ref(i), 1e-10);
  }
}

TEST(TriDiagSolve, MultiplyBackRecoversRhs) {
  std::mt19937_64 rng(5);
  const int t = 80;
  const auto m = random_spd_tridiag(t, rng);
  const auto f = la::tridiag_chol(m);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(t);
  for (auto& v : y) v = normal(rng);
  const auto x = la::solve_LLT(f, std::span<const double>(y));
  const auto back = la::matvec(m, std::span<const double>(x));
  double ynorm = 0.0;
  for (double v : y) ynorm = std::max(ynorm, std::abs(v));
  for (int i = 0; i < t; ++i) EXPECT_NEAR(back[i], y[i], 1e-10 * ynorm);
}

TEST(TriDiagSolve, DimensionMismatch) {
  const auto f = la::tridiag_chol_const(4, 1.0, 1.0, 0.0);
  const std::vector<double> y = {1.0, 2.0};
  EXPECT_THROW((void)la::solve_L(f, std::span<const double>(y)),
               drhmc::InvalidArgument);
}

TEST(DenseChol, OneByOne) {
  auto a = la::DenseSym<double>::zero(1);
  a.at(0, 0) = 4.0;
  const auto f = la::dense_chol(a);
  EXPECT_DOUBLE_EQ(f.at(0, 0), 2.0);
}

TEST(DenseChol, TwoByTwoHandValues) {
  auto a = la::DenseSym<double>::zero(2);
  a.at(0, 0) = 2.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 2.0;
  const auto f = la::dense_chol(a);
  EXPECT_NEAR(f.at(0, 0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.at(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.at(1, 1), std::sqrt(1.5), 1e-15);
}

TEST(DenseChol, RandomSpdReconstructionAndSolves) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 8;
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = normal(rng);
  const Eigen::MatrixXd a_ref =
      b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  auto a = la::DenseSym<double>::zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) a.at(i, j) = a_ref(i, j);
  const auto f = la::dense_chol(a);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = f.at(i, j);
  EXPECT_LT((l * l.transpose() - a_ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(f.log_det, 0.5 * std::log(a_ref.determinant()), 1e-10);

  std::vector<double> y(n);
  for (auto& v : y) v = normal(rng);
  const auto x = la::dense_solve_LLT(f, std::span<const double>(y));
  const Eigen::VectorXd x_ref =
      a_ref.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], x_ref(i), 1e-11);
  const auto xt = la::dense_solve_LT(f, std::span<const double>(y));
  const Eigen::VectorXd xt_ref =
      l.transpose().triangularView<Eigen::Upper>().solve(
          Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  for (int i = 0; i < n; ++i) EXPECT_NEAR(xt[i], xt_ref(i), 1e-11);
}

TEST(DenseChol, NotSpdRaises) {
  auto a = la::DenseSym<double>::zero(2);
  a.at(0, 0) = 1.0;
  a.at(1, 0) = 2.0;
  a.at(1, 1) = 1.0;
  EXPECT_THROW((void)la::dense_chol(a), drhmc::NotSpdError);
}

// log_det gradient with respect to (v, c) through the tape vs central
// finite differences.
TEST(TriDiagChol, LogDetGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  const int t = 12;
  const auto m0 = random_spd_tridiag(t, rng);
  std::vector<double> packed(m0.diag);
  packed.insert(packed.end(), m0.off.begin(), m0.off.end());
  auto logdet = [&](std::span<const ad::Var> v) {
    la::TriDiagSym<ad::Var> m;
    m.diag.assign(v.begin(), v.begin() + t);
    m.off.assign(v.begin() + t, v.end());
    return la::tridiag_chol(m).log_det;
  };
  EXPECT_LT(ad::gradient_check(logdet, packed, 1e-6), 1e-6);
}
