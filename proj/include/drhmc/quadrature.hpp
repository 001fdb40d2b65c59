#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <utility>

#include "drhmc/errors.hpp"

namespace drhmc::quad {

namespace detail {

// 7- and 15-point Gauss-Legendre rules on [-1,1]; the pair gives the local
// error estimate for the adaptive scheme.
inline constexpr std::array<double, 4> kGl7Nodes = {
    0.0, 0.405845151377397, 0.741531185599394, 0.949107912342759};
inline constexpr std::array<double, 4> kGl7Weights = {
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};
inline constexpr std::array<double, 8> kGl15Nodes = {
    0.0,
    0.201194093997435,
    0.394151347077563,
    0.570972172608539,
    0.724417731360170,
    0.848206583410427,
    0.937273392400706,
    0.987992518020485};
inline constexpr std::array<double, 8> kGl15Weights = {
    0.202578241925561, 0.198431485327112, 0.186161000015562,
    0.166269205816994, 0.139570677926154, 0.107159220467172,
    0.070366047488108, 0.030753241996117};

struct GlPair {
  double i7;
  double i15;
  double scale;  // sum of |w_k f_k| * half-length; roundoff reference
};

template <class F>
GlPair gl_pair(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f0 = f(mid);
  double i7 = kGl7Weights[0] * f0;
  for (int k = 1; k < 4; ++k) {
    const double dx = half * kGl7Nodes[k];
    i7 += kGl7Weights[k] * (f(mid - dx) + f(mid + dx));
  }
  double i15 = kGl15Weights[0] * f0;
  double scale = kGl15Weights[0] * std::abs(f0);
  for (int k = 1; k < 8; ++k) {
    const double dx = half * kGl15Nodes[k];
    const double lo = f(mid - dx), hi = f(mid + dx);
    i15 += kGl15Weights[k] * (lo + hi);
    scale += kGl15Weights[k] * (std::abs(lo) + std::abs(hi));
  }
  return {i7 * half, i15 * half, scale * std::abs(half)};
}

template <class F>
double adaptive(F&& f, double a, double b, double tol_rate, int depth,
                int min_depth) {
  const auto gl = gl_pair(f, a, b);
  const double err = std::abs(gl.i15 - gl.i7);
  // accept on the length-proportional tolerance, or once the pair
  // difference is dominated by roundoff
  if (depth >= min_depth &&
      (err <= tol_rate * (b - a) || err <= 4e-15 * gl.scale || depth >= 20))
    return gl.i15;
  const double mid = 0.5 * (a + b);
  return adaptive(f, a, mid, tol_rate, depth + 1, min_depth) +
         adaptive(f, mid, b, tol_rate, depth + 1, min_depth);
}

}  // namespace detail

// Adaptive Gauss-Legendre integration of a smooth scalar function over
// [a, b]. `tol` is an absolute tolerance on the result. min_depth forces an
// initial 2^min_depth subdivision so that narrow features cannot slip
// between the nodes of the top-level rule.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-12,
                 int min_depth = 0) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, tol, min_depth);
  return detail::adaptive(f, a, b, tol / (b - a), 0, min_depth);
}

// Safeguarded Newton for f(x) = 0 with f strictly increasing. Maintains a
// bracket (expanded from x0 if needed) and bisects whenever the Newton step
// leaves it. Converges to |f(x)| <= tol.
template <class F, class DF>
double solve_increasing(F&& f, DF&& df, double x0, double tol,
                        int max_iter = 100) {
  double x = x0;
  double fx = f(x);
  // establish a bracket [lo, hi] with f(lo) <= 0 <= f(hi)
  double lo = x, hi = x;
  double step = 1.0;
  int guard = 0;
  while (f(lo) > 0.0) {
    lo -= step;
    step *= 2.0;
    if (++guard > 200) throw NumericError("solve_increasing: no lower bracket");
  }
  step = 1.0;
  guard = 0;
  while (f(hi) < 0.0) {
    hi += step;
    step *= 2.0;
    if (++guard > 200) throw NumericError("solve_increasing: no upper bracket");
  }
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fx) <= tol) return x;
    const double d = df(x);
    double next = d > 0.0 ? x - fx / d : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
    fx = f(x);
    (fx < 0.0 ? lo : hi) = x;
  }
  if (std::abs(fx) <= tol) return x;
  throw NumericError("solve_increasing: no convergence");
}

// Maximizes a smooth unimodal scalar function by safeguarded Newton on its
// central-difference derivative. Returns the maximizer.
template <class F>
double maximize_1d(F&& f, double x0, double fd_step = 1e-5,
                   double grad_tol = 1e-10, int max_iter = 100) {
  auto d1 = [&](double x) { return (f(x + fd_step) - f(x - fd_step)) / (2.0 * fd_step); };
  auto d2 = [&](double x) {
    return (f(x + fd_step) - 2.0 * f(x) + f(x - fd_step)) / (fd_step * fd_step);
  };
  double x = x0;
  // bracket the maximizer: expand until the derivative changes sign
  double lo = x - 1.0, hi = x + 1.0;
  double span = 1.0;
  int guard = 0;
  while (d1(lo) < 0.0) {
    lo -= span;
    span *= 2.0;
    if (++guard > 200) throw NumericError("maximize_1d: no lower bracket");
  }
  span = 1.0;
  guard = 0;
  while (d1(hi) > 0.0) {
    hi += span;
    span *= 2.0;
    if (++guard > 200) throw NumericError("maximize_1d: no upper bracket");
  }
  for (int it = 0; it < max_iter; ++it) {
    const double g = d1(x);
    if (std::abs(g) <= grad_tol) return x;
    const double h = d2(x);
    double next = h < 0.0 ? x - g / h : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
    (d1(x) > 0.0 ? lo : hi) = x;
  }
  if (std::abs(d1(x)) <= grad_tol * 100.0) return x;
  throw NumericError("maximize_1d: no convergence");
}

}  // namespace quad
