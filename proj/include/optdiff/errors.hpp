#pragma once

#include <stdexcept>
#include <string>

namespace optdiff {

/// Base class for failures caused by the inputs of a computation
/// (infeasible constraints, degenerate fields, ...). The CLI maps these
/// to exit code 1.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The constraint set is empty.
class InfeasibleSet : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A matrix expected to be symmetric positive definite failed to factor.
class CholeskyFailure : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A diffusion coefficient with non-positive values where positivity is required.
class DegenerateDiffusion : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Least-squares problem without a unique solution.
class RankDeficient : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A regression window containing fewer than two samples.
class EmptyWindow : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnknownPreset : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed user input (bad potential string, unreadable table, ...).
class InvalidArgument : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace optdiff
