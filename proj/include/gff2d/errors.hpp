#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gff2d {

/// Argument outside the mathematical domain of an operation (non-positive
/// Bessel argument, point outside a window, level outside (-1,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input data: probability vectors that do not sum to one,
/// overlapping K and U, paths violating a precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested combination is not supported (e.g. spectral sampling on a box).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A linear solve finished with a residual above its contract.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (relative residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Iterative optimizer ran out of budget. Carries the best iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best, double residual,
                   int iterations)
      : std::runtime_error(what), best_(std::move(best)), residual_(residual),
        iterations_(iterations) {}
  const std::vector<double>& best() const noexcept { return best_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> best_;
  double residual_;
  int iterations_;
};

/// Memory or size limit of a method exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gff2d
