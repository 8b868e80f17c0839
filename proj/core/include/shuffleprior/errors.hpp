#pragma once

#include <stdexcept>
#include <string>

namespace shuffleprior {

/// A linear system that should be solvable was numerically singular.
class SingularSystem : public std::runtime_error {
 public:
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver exhausted its budget without meeting its tolerance.
class ConvergenceFailure : public std::runtime_error {
 public:
  explicit ConvergenceFailure(const std::string& what) : std::runtime_error(what) {}
};

/// No perfect matching avoids the forbidden entries of a cost matrix.
class InfeasibleAssignment : public std::runtime_error {
 public:
  explicit InfeasibleAssignment(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shuffleprior
