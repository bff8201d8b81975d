#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wavelab {

// Precondition or configuration violation. The CLI maps it to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure (CFL violation, solver stagnation, fit failure, blow-up).
// The CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CflError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Conjugate gradient failure; carries the residual history for diagnosis.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace wavelab
