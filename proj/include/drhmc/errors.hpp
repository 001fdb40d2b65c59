#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drhmc {

// Base class for all recoverable numerical failures. The samplers catch
// these and turn them into divergent (rejected) transitions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A (supposedly SPD) matrix had a non-positive pivot during factorization.
class NotSpdError : public Error {
 public:
  NotSpdError(const std::string& what, int pivot_index)
      : Error(what + " (pivot " + std::to_string(pivot_index) + ")"),
        pivot_index_(pivot_index) {}
  int pivot_index() const { return pivot_index_; }

 private:
  int pivot_index_;
};

// log/sqrt of a non-positive argument, or similar domain violation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A non-finite intermediate value appeared during expression evaluation.
// node_index() identifies the offending tape node (npos for untaped values).
class EvalError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  EvalError(const std::string& what, std::size_t node_index)
      : Error(what + " (node " + std::to_string(node_index) + ")"),
        node_index_(node_index) {}
  std::size_t node_index() const { return node_index_; }

 private:
  std::size_t node_index_;
};

// Invalid parameterization, data or prior handed to a catalog function.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An iterative scheme (root finder, mode search) failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace drhmc
