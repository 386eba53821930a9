#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cmhd {

/// Invalid domain, grid or geometric input (non-convex angle, degenerate legs...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Equation-of-state evaluated outside its admissible box.
class EosDomainError : public std::domain_error {
 public:
  EosDomainError(const std::string& what, int cell_i = -1, int cell_j = -1)
      : std::domain_error(what), i(cell_i), j(cell_j) {}
  int i;
  int j;
};

/// An operation's precondition does not hold for the supplied data.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative solver hit its iteration cap.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

/// NaN, CFL violation or compact-set excursion during time stepping.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Picard iteration stopped contracting.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cmhd
