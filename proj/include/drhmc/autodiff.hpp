#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "drhmc/errors.hpp"
#include "drhmc/special.hpp"

// Reverse-mode automatic differentiation over scalar expression graphs.
//
// A Tape records one forward evaluation as a flat list of nodes in
// topological order; a single reverse sweep then yields the gradient with
// respect to all inputs. Var is a lightweight handle. A Var constructed
// from a plain double is an untaped literal: arithmetic between literals
// happens immediately, and a literal is promoted to a constant node the
// first time it meets a taped operand. This lets generic numeric code be
// instantiated with Var without scattering tape plumbing through it.
//
// Tapes are rebuilt per evaluation and are not shareable across threads;
// each chain owns its own tape.

namespace drhmc::ad {

enum class Op : std::uint8_t {
  kConstant,
  kInput,
  kUnary,
  kBinary,
};

struct Node {
  double value;
  double d1, d2;        // local partials w.r.t. operands
  std::uint32_t a1, a2; // operand node indices (self for constant/input)
  Op op;
};

class Tape;

class Var {
 public:
  Var() : value_(0.0) {}
  Var(double v) : value_(v) {}  // untaped literal
  Var(double v, Tape* tape, std::uint32_t index)
      : value_(v), tape_(tape), index_(index) {}

  double value() const { return value_; }
  bool taped() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::uint32_t index() const { return index_; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  double value_;
  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

class Tape {
 public:
  Tape() { nodes_.reserve(1u << 12); }

  Var input(double v) {
    check_finite(v, nodes_.size());
    const auto idx = push(Op::kInput, v, 0.0, 0.0, 0, 0);
    inputs_.push_back(idx);
    return Var(v, this, idx);
  }

  Var constant(double v) {
    check_finite(v, nodes_.size());
    return Var(v, this, push(Op::kConstant, v, 0.0, 0.0, 0, 0));
  }

  Var unary(const Var& a, double value, double d1) {
    check_finite(value, nodes_.size());
    return Var(value, this, push(Op::kUnary, value, d1, 0.0, a.index(), 0));
  }

  Var binary(const Var& a, const Var& b, double value, double d1, double d2) {
    check_finite(value, nodes_.size());
    return Var(value, this,
               push(Op::kBinary, value, d1, d2, a.index(), b.index()));
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t input_count() const { return inputs_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }

  // Drops all nodes but keeps capacity.
  void clear() {
    nodes_.clear();
    inputs_.clear();
  }

  // Reverse sweep from `output`; writes d output / d input_k into out[k],
  // inputs ordered by creation. Primal values are left untouched.
  void gradient(const Var& output, std::span<double> out) const {
    adjoint_.assign(nodes_.size(), 0.0);
    adjoint_[output.index()] = 1.0;
    for (std::uint32_t i = output.index() + 1; i-- > 0;) {
      const double a = adjoint_[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      switch (n.op) {
        case Op::kUnary:
          adjoint_[n.a1] += a * n.d1;
          break;
        case Op::kBinary:
          adjoint_[n.a1] += a * n.d1;
          adjoint_[n.a2] += a * n.d2;
          break;
        default:
          break;
      }
    }
    for (std::size_t k = 0; k < inputs_.size(); ++k) out[k] = adjoint_[inputs_[k]];
  }

  std::vector<double> gradient(const Var& output) const {
    std::vector<double> out(inputs_.size());
    gradient(output, out);
    return out;
  }

 private:
  static void check_finite(double v, std::size_t index) {
    if (!std::isfinite(v))
      throw EvalError("non-finite intermediate value", index);
  }

  std::uint32_t push(Op op, double value, double d1, double d2,
                     std::uint32_t a1, std::uint32_t a2) {
    const auto idx = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{value, d1, d2,
                          op == Op::kUnary || op == Op::kBinary ? a1 : idx,
                          op == Op::kBinary ? a2 : idx, op});
    return idx;
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> inputs_;
  mutable std::vector<double> adjoint_;
};

namespace detail {

inline void check_finite_untaped(double v) {
  if (!std::isfinite(v))
    throw EvalError("non-finite intermediate value", EvalError::npos);
}

inline Var on_tape(Tape* tape, const Var& x) {
  return x.taped() ? x : tape->constant(x.value());
}

template <class F>
Var binary_op(const Var& a, const Var& b, double value, F&& partials) {
  Tape* tape = a.taped() ? a.tape() : b.tape();
  if (tape == nullptr) {
    check_finite_untaped(value);
    return Var(value);
  }
  const Var ta = on_tape(tape, a);
  const Var tb = on_tape(tape, b);
  const auto [d1, d2] = partials();
  return tape->binary(ta, tb, value, d1, d2);
}

template <class F>
Var unary_op(const Var& a, double value, F&& partial) {
  if (!a.taped()) {
    check_finite_untaped(value);
    return Var(value);
  }
  return a.tape()->unary(a, value, partial());
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary_op(a, b, a.value() + b.value(),
                           [] { return std::pair{1.0, 1.0}; });
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary_op(a, b, a.value() - b.value(),
                           [] { return std::pair{1.0, -1.0}; });
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary_op(a, b, a.value() * b.value(),
                           [&] { return std::pair{b.value(), a.value()}; });
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  return detail::binary_op(a, b, a.value() * inv, [&] {
    return std::pair{inv, -a.value() * inv * inv};
  });
}
inline Var operator-(const Var& a) {
  return detail::unary_op(a, -a.value(), [] { return -1.0; });
}
inline Var operator+(const Var& a) { return a; }

inline Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return detail::unary_op(a, e, [&] { return e; });
}
inline Var log(const Var& a) {
  if (!(a.value() > 0.0)) throw DomainError("log of non-positive argument");
  return detail::unary_op(a, std::log(a.value()),
                          [&] { return 1.0 / a.value(); });
}
inline Var sqrt(const Var& a) {
  if (!(a.value() > 0.0)) throw DomainError("sqrt of non-positive argument");
  const double s = std::sqrt(a.value());
  return detail::unary_op(a, s, [&] { return 0.5 / s; });
}
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return detail::unary_op(a, t, [&] { return 1.0 - t * t; });
}
inline Var cosh(const Var& a) {
  return detail::unary_op(a, std::cosh(a.value()),
                          [&] { return std::sinh(a.value()); });
}
// Subgradient 0 at the kink; abs only appears in densities where the kink
// has measure zero.
inline Var abs(const Var& a) {
  const double v = a.value();
  return detail::unary_op(a, std::abs(v),
                          [&] { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}
inline Var square(const Var& a) {
  return detail::unary_op(a, a.value() * a.value(),
                          [&] { return 2.0 * a.value(); });
}
inline Var lgamma(const Var& a) {
  if (!(a.value() > 0.0))
    throw DomainError("lgamma restricted to positive arguments");
  return detail::unary_op(a, std::lgamma(a.value()),
                          [&] { return digamma(a.value()); });
}

// Smooth scalar function evaluated externally (e.g. by quadrature + root
// finding) whose first derivative is known analytically.
inline Var external_unary(const Var& a, double value, double derivative) {
  return detail::unary_op(a, value, [&] { return derivative; });
}

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

inline double square(double x) { return x * x; }

// One forward pass + one reverse sweep of f over n inputs.
template <class F>
std::pair<double, std::vector<double>> evaluate_with_gradient(
    F&& f, std::span<const double> x) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(x.size());
  for (double xi : x) vars.push_back(tape.input(xi));
  const Var out = f(std::span<const Var>(vars));
  return {out.value(), tape.gradient(out)};
}

// Max over coordinates of |AD - FD| / (1 + |FD|) with central differences.
template <class F>
double gradient_check(F&& f, std::span<const double> x, double fd_step) {
  if (!(fd_step > 0.0)) throw InvalidArgument("gradient_check: fd_step <= 0");
  auto value_at = [&](std::span<const double> p) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(p.size());
    for (double pi : p) vars.push_back(tape.input(pi));
    return f(std::span<const Var>(vars)).value();
  };
  const auto [value, grad] = evaluate_with_gradient(f, x);
  (void)value;
  std::vector<double> shifted(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    shifted[i] = x[i] + fd_step;
    const double up = value_at(shifted);
    shifted[i] = x[i] - fd_step;
    const double down = value_at(shifted);
    shifted[i] = x[i];
    const double fd = (up - down) / (2.0 * fd_step);
    const double err = std::abs(grad[i] - fd) / (1.0 + std::abs(fd));
    if (err > worst) worst = err;
  }
  return worst;
}

}  // namespace drhmc::ad
