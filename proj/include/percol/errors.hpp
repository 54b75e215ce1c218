#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace percol {

// The delay reaches further back than one period (tau > omega), so the
// periodic wrap of the history is no longer a single shift.
class DelayExceedsPeriod : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NoPeriodicSolution : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NonFiniteResidual : public std::runtime_error {
 public:
  NonFiniteResidual(std::size_t row, std::size_t column, const std::string& what)
      : std::runtime_error(what), row_(row), column_(column) {}

  static constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

class SingularJacobian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton ran out of iterations. Carries the iterate with the smallest
/// residual seen so far.
class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, std::vector<double> best, double best_residual)
      : std::runtime_error(what), best_(std::move(best)), best_residual_(best_residual) {}

  const std::vector<double>& best_iterate() const { return best_; }
  double best_residual() const { return best_residual_; }

 private:
  std::vector<double> best_;
  double best_residual_;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (schema violations, missing model parameters).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace percol
