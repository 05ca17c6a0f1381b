#pragma once

#include <stdexcept>
#include <string>

namespace phaseret {

/// Thrown when operand shapes disagree (vector length vs. ensemble size, etc.).
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver produced a non-finite iterate or its inner problem failed.
/// `iteration()` is the outer iteration at which the failure surfaced.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace phaseret
