#pragma once

#include <span>
#include <variant>
#include <vector>

#include "drhmc/blocked.hpp"
#include "drhmc/errors.hpp"
#include "drhmc/linalg.hpp"

// Scaling blocks G_(r), their Cholesky factors, and the additive assembly
// of information terms. Blocks are either small dense or tridiagonal;
// mixed structures within one block are not supported (every experiment
// fits this split).

namespace drhmc {

template <class S>
using ScalingBlock = std::variant<linalg::DenseSym<S>, linalg::TriDiagSym<S>>;

template <class S>
using BlockFactor = std::variant<linalg::DenseLower<S>, linalg::TriDiagChol<S>>;

// One additive contribution to a scaling block: a scaled identity, a full
// diagonal, a tridiagonal matrix, or a small dense matrix.
template <class S>
using InfoTerm = std::variant<S, std::vector<S>, linalg::TriDiagSym<S>,
                              linalg::DenseSym<S>>;

// G_(r) = prior information + successor informations + observation
// informations, summed elementwise. Tridiagonal structure is preserved
// when every term is tridiagonal or diagonal.
template <class S>
ScalingBlock<S> assemble_block(int dim, BlockStructure structure,
                               std::span<const InfoTerm<S>> terms) {
  if (structure == BlockStructure::kTriDiag) {
    linalg::TriDiagSym<S> g;
    g.diag.assign(static_cast<std::size_t>(dim), S(0.0));
    g.off.assign(static_cast<std::size_t>(dim) - 1, S(0.0));
    for (const auto& term : terms) {
      if (const S* s = std::get_if<S>(&term)) {
        for (auto& d : g.diag) d += *s;
      } else if (const auto* v = std::get_if<std::vector<S>>(&term)) {
        if (static_cast<int>(v->size()) != dim)
          throw InvalidArgument("assemble_block: diagonal term dim mismatch");
        for (int i = 0; i < dim; ++i) g.diag[i] += (*v)[i];
      } else if (const auto* t = std::get_if<linalg::TriDiagSym<S>>(&term)) {
        if (t->dim() != dim)
          throw InvalidArgument("assemble_block: tridiagonal term dim mismatch");
        for (int i = 0; i < dim; ++i) g.diag[i] += t->diag[i];
        for (int i = 0; i + 1 < dim; ++i) g.off[i] += t->off[i];
      } else {
        throw InvalidArgument(
            "assemble_block: dense term in a tridiagonal block");
      }
    }
    return g;
  }
  auto g = linalg::DenseSym<S>::zero(dim);
  for (const auto& term : terms) {
    if (const S* s = std::get_if<S>(&term)) {
      for (int i = 0; i < dim; ++i) g.at(i, i) += *s;
    } else if (const auto* v = std::get_if<std::vector<S>>(&term)) {
      if (static_cast<int>(v->size()) != dim)
        throw InvalidArgument("assemble_block: diagonal term dim mismatch");
      for (int i = 0; i < dim; ++i) g.at(i, i) += (*v)[i];
    } else if (const auto* t = std::get_if<linalg::TriDiagSym<S>>(&term)) {
      if (t->dim() != dim)
        throw InvalidArgument("assemble_block: tridiagonal term dim mismatch");
      for (int i = 0; i < dim; ++i) g.at(i, i) += t->diag[i];
      for (int i = 0; i + 1 < dim; ++i) g.at(i + 1, i) += t->off[i];
    } else {
      const auto& d = std::get<linalg::DenseSym<S>>(term);
      if (d.n != dim)
        throw InvalidArgument("assemble_block: dense term dim mismatch");
      for (std::size_t k = 0; k < d.lower.size(); ++k) g.lower[k] += d.lower[k];
    }
  }
  return g;
}

template <class S>
BlockFactor<S> factorize(const ScalingBlock<S>& g) {
  return std::visit(
      [](const auto& m) -> BlockFactor<S> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, linalg::DenseSym<S>>)
          return linalg::dense_chol(m);
        else
          return linalg::tridiag_chol(m);
      },
      g);
}

template <class S>
const S& factor_log_det(const BlockFactor<S>& f) {
  return std::visit([](const auto& m) -> const S& { return m.log_det; }, f);
}

template <class S>
std::vector<S> factor_solve_LT(const BlockFactor<S>& f, std::span<const S> y) {
  return std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, linalg::DenseLower<S>>)
          return linalg::dense_solve_LT(m, y);
        else
          return linalg::solve_LT(m, y);
      },
      f);
}

template <class S>
std::vector<S> factor_solve_L(const BlockFactor<S>& f, std::span<const S> y) {
  return std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, linalg::DenseLower<S>>)
          return linalg::dense_solve_L(m, y);
        else
          return linalg::solve_L(m, y);
      },
      f);
}

template <class S>
std::vector<S> factor_solve_LLT(const BlockFactor<S>& f,
                                std::span<const S> y) {
  return std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, linalg::DenseLower<S>>)
          return linalg::dense_solve_LLT(m, y);
        else
          return linalg::solve_LLT(m, y);
      },
      f);
}

// y = L^T x (used by the inverse map q_bar = L^T (q - h)).
template <class S>
std::vector<S> factor_mult_LT(const BlockFactor<S>& f, std::span<const S> x) {
  if (const auto* t = std::get_if<linalg::TriDiagChol<S>>(&f)) {
    const int n = t->dim();
    std::vector<S> y(x.size());
    for (int i = 0; i < n; ++i) {
      y[i] = t->d(i) * x[i];
      if (i + 1 < n) y[i] += t->sub(i) * x[i + 1];
    }
    return y;
  }
  const auto& d = std::get<linalg::DenseLower<S>>(f);
  std::vector<S> y(x.size());
  for (int i = 0; i < d.n; ++i) {
    S acc(0.0);
    for (int k = i; k < d.n; ++k) acc += d.at(k, i) * x[k];
    y[i] = acc;
  }
  return y;
}

// y = L x (used when sampling momenta with covariance G).
template <class S>
std::vector<S> factor_mult_L(const BlockFactor<S>& f, std::span<const S> x) {
  if (const auto* t = std::get_if<linalg::TriDiagChol<S>>(&f)) {
    const int n = t->dim();
    std::vector<S> y(x.size());
    for (int i = 0; i < n; ++i) {
      y[i] = t->d(i) * x[i];
      if (i > 0) y[i] += t->sub(i - 1) * x[i - 1];
    }
    return y;
  }
  const auto& d = std::get<linalg::DenseLower<S>>(f);
  std::vector<S> y(x.size());
  for (int i = 0; i < d.n; ++i) {
    S acc(0.0);
    for (int k = 0; k <= i; ++k) acc += d.at(i, k) * x[k];
    y[i] = acc;
  }
  return y;
}

// Matrix-vector product of a single information term.
template <class S>
std::vector<S> info_matvec(const InfoTerm<S>& term, std::span<const S> x) {
  if (const S* s = std::get_if<S>(&term)) {
    std::vector<S> y(x.begin(), x.end());
    for (auto& e : y) e = e * (*s);
    return y;
  }
  if (const auto* v = std::get_if<std::vector<S>>(&term)) {
    if (v->size() != x.size())
      throw InvalidArgument("info_matvec: dimension mismatch");
    std::vector<S> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (*v)[i] * x[i];
    return y;
  }
  if (const auto* t = std::get_if<linalg::TriDiagSym<S>>(&term))
    return linalg::matvec(*t, x);
  return linalg::matvec(std::get<linalg::DenseSym<S>>(term), x);
}

}  // namespace drhmc
