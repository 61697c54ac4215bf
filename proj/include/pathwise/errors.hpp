#pragma once

#include <stdexcept>
#include <string>

namespace pathwise {

/// Malformed arguments: empty grids, mismatched grids, bad levels.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A dispersion or transform could not be built. `piece()` is the offending
/// piece index, or -1 when the failure is not tied to a single piece.
class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(const std::string& what, int piece = -1)
      : std::runtime_error(what), piece_(piece) {}
  int piece() const noexcept { return piece_; }

 private:
  int piece_;
};

/// Argument outside the domain of a scale map.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure inside a solver (non-finite drift, broken envelope).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pathwise
