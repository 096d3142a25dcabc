#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace lamlab {

/// One real value per node: test functions, potentials, cutoffs.
using NodeField = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when an input violates a documented precondition (bad spec, empty
/// region, malformed scenario). Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative solver fails to reach its residual contract.
/// Carries the best residual seen so callers can report it.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

// x*log(x) with the 0*log(0) = 0 convention; values below 1e-300 count as 0.
inline double xlogx(double x) {
  return x < 1e-300 ? 0.0 : x * std::log(x);
}

}  // namespace detail
}  // namespace lamlab
