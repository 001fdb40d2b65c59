#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "drhmc/autodiff.hpp"
#include "drhmc/errors.hpp"

// Cholesky factorizations and triangular solves for symmetric tridiagonal
// matrices (latent time-series blocks) and small dense SPD matrices
// (parameter blocks). Everything is generic over the scalar so that the
// factorizations can be recorded on an AD tape.
//
// All routines are pure functions over immutable inputs.

namespace drhmc::linalg {

using ad::value_of;

// Symmetric tridiagonal matrix: diagonal v (dim T), off-diagonal c (T-1).
// Positive-definiteness is checked at factorization time, not here.
template <class S>
struct TriDiagSym {
  std::vector<S> diag;
  std::vector<S> off;

  int dim() const { return static_cast<int>(diag.size()); }
};

// Lower-bidiagonal Cholesky factor of a TriDiagSym, packed as the
// 2T-1 vector (l_1, m_1, l_2, m_2, ..., l_T) with l the diagonal of L and
// m the sub-diagonal. log_det carries sum(log l_i) as a separate field.
template <class S>
struct TriDiagChol {
  std::vector<S> packed;
  S log_det;

  int dim() const { return static_cast<int>((packed.size() + 1) / 2); }
  const S& d(int i) const { return packed[2 * static_cast<std::size_t>(i)]; }
  const S& sub(int i) const {
    return packed[2 * static_cast<std::size_t>(i) + 1];
  }
};

template <class S>
TriDiagChol<S> tridiag_chol(const TriDiagSym<S>& m) {
  const int t = m.dim();
  TriDiagChol<S> f;
  f.packed.resize(2 * static_cast<std::size_t>(t) - 1);
  S log_det(0.0);
  S pivot = m.diag[0];
  for (int i = 0;; ++i) {
    if (!(value_of(pivot) > 0.0))
      throw NotSpdError("tridiag_chol: non-positive pivot", i);
    using std::sqrt;
    const S l = sqrt(pivot);
    f.packed[2 * static_cast<std::size_t>(i)] = l;
    using std::log;
    log_det += log(l);
    if (i == t - 1) break;
    const S sub = m.off[i] / l;
    f.packed[2 * static_cast<std::size_t>(i) + 1] = sub;
    pivot = m.diag[i + 1] - sub * sub;
  }
  f.log_det = log_det;
  return f;
}

// Factorization of the constant-pattern tridiagonal matrix with corner
// diagonal entries a, interior diagonal entries b and off-diagonal c.
// Identical result to tridiag_chol on the expanded (v, c) vectors.
template <class S>
TriDiagChol<S> tridiag_chol_const(int t, const S& a, const S& b, const S& c) {
  TriDiagSym<S> m;
  m.diag.assign(static_cast<std::size_t>(t), b);
  m.diag.front() = a;
  m.diag.back() = a;
  m.off.assign(static_cast<std::size_t>(t) - 1, c);
  return tridiag_chol(m);
}

template <class S>
std::vector<S> solve_L(const TriDiagChol<S>& f, std::span<const S> y) {
  const int t = f.dim();
  if (static_cast<int>(y.size()) != t)
    throw InvalidArgument("solve_L: dimension mismatch");
  std::vector<S> x(y.size());
  x[0] = y[0] / f.d(0);
  for (int i = 1; i < t; ++i) x[i] = (y[i] - f.sub(i - 1) * x[i - 1]) / f.d(i);
  return x;
}

template <class S>
std::vector<S> solve_LT(const TriDiagChol<S>& f, std::span<const S> y) {
  const int t = f.dim();
  if (static_cast<int>(y.size()) != t)
    throw InvalidArgument("solve_LT: dimension mismatch");
  std::vector<S> x(y.size());
  x[t - 1] = y[t - 1] / f.d(t - 1);
  for (int i = t - 2; i >= 0; --i) x[i] = (y[i] - f.sub(i) * x[i + 1]) / f.d(i);
  return x;
}

template <class S>
std::vector<S> solve_LLT(const TriDiagChol<S>& f, std::span<const S> y) {
  const std::vector<S> w = solve_L(f, y);
  return solve_LT(f, std::span<const S>(w));
}

// y += A x for the tridiagonal matrix A.
template <class S>
std::vector<S> matvec(const TriDiagSym<S>& m, std::span<const S> x) {
  const int t = m.dim();
  if (static_cast<int>(x.size()) != t)
    throw InvalidArgument("matvec: dimension mismatch");
  std::vector<S> y(x.size());
  for (int i = 0; i < t; ++i) {
    S acc = m.diag[i] * x[i];
    if (i > 0) acc += m.off[i - 1] * x[i - 1];
    if (i + 1 < t) acc += m.off[i] * x[i + 1];
    y[i] = acc;
  }
  return y;
}

// Small dense symmetric matrix, packed lower triangle stored row-wise:
// a(i,j) at i(i+1)/2 + j for j <= i.
template <class S>
struct DenseSym {
  int n = 0;
  std::vector<S> lower;

  static DenseSym zero(int n) {
    DenseSym m;
    m.n = n;
    m.lower.assign(static_cast<std::size_t>(n) * (n + 1) / 2, S(0.0));
    return m;
  }
  S& at(int i, int j) {
    return lower[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
  const S& at(int i, int j) const {
    return lower[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
};

// Dense lower-triangular Cholesky factor, same packed layout.
template <class S>
struct DenseLower {
  int n = 0;
  std::vector<S> lower;
  S log_det;

  S& at(int i, int j) {
    return lower[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
  const S& at(int i, int j) const {
    return lower[static_cast<std::size_t>(i) * (i + 1) / 2 + j];
  }
};

// Unblocked Cholesky; parameter blocks are tiny (n <= ~10) so nothing
// fancier is warranted.
template <class S>
DenseLower<S> dense_chol(const DenseSym<S>& a) {
  DenseLower<S> f;
  f.n = a.n;
  f.lower.resize(a.lower.size());
  S log_det(0.0);
  for (int i = 0; i < a.n; ++i) {
    for (int j = 0; j <= i; ++j) {
      S acc = a.at(i, j);
      for (int k = 0; k < j; ++k) acc -= f.at(i, k) * f.at(j, k);
      if (j == i) {
        if (!(value_of(acc) > 0.0))
          throw NotSpdError("dense_chol: non-positive pivot", i);
        using std::sqrt;
        f.at(i, i) = sqrt(acc);
        using std::log;
        log_det += log(f.at(i, i));
      } else {
        f.at(i, j) = acc / f.at(j, j);
      }
    }
  }
  f.log_det = log_det;
  return f;
}

template <class S>
std::vector<S> dense_solve_L(const DenseLower<S>& f, std::span<const S> y) {
  if (static_cast<int>(y.size()) != f.n)
    throw InvalidArgument("dense_solve_L: dimension mismatch");
  std::vector<S> x(y.size());
  for (int i = 0; i < f.n; ++i) {
    S acc = y[i];
    for (int k = 0; k < i; ++k) acc -= f.at(i, k) * x[k];
    x[i] = acc / f.at(i, i);
  }
  return x;
}

template <class S>
std::vector<S> dense_solve_LT(const DenseLower<S>& f, std::span<const S> y) {
  if (static_cast<int>(y.size()) != f.n)
    throw InvalidArgument("dense_solve_LT: dimension mismatch");
  std::vector<S> x(y.size());
  for (int i = f.n - 1; i >= 0; --i) {
    S acc = y[i];
    for (int k = i + 1; k < f.n; ++k) acc -= f.at(k, i) * x[k];
    x[i] = acc / f.at(i, i);
  }
  return x;
}

template <class S>
std::vector<S> dense_solve_LLT(const DenseLower<S>& f, std::span<const S> y) {
  const std::vector<S> w = dense_solve_L(f, y);
  return dense_solve_LT(f, std::span<const S>(w));
}

template <class S>
std::vector<S> matvec(const DenseSym<S>& m, std::span<const S> x) {
  if (static_cast<int>(x.size()) != m.n)
    throw InvalidArgument("matvec: dimension mismatch");
  std::vector<S> y(x.size());
  for (int i = 0; i < m.n; ++i) {
    S acc(0.0);
    for (int j = 0; j < m.n; ++j)
      acc += (j <= i ? m.at(i, j) : m.at(j, i)) * x[j];
    y[i] = acc;
  }
  return y;
}

}  // namespace drhmc::linalg
