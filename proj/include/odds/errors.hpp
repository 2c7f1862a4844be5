#pragma once

#include <stdexcept>
#include <string>

namespace odds {

// Invalid arguments are reported with std::invalid_argument. The types below
// cover the remaining failure classes.

/// An iterative method did not reach its tolerance within the iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A NaN/Inf appeared in an iterate or a linear system was singular.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// A linear program has an empty feasible set.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace odds
