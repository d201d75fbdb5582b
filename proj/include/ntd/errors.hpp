#pragma once

#include <stdexcept>
#include <string>

namespace ntd {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes, index ranges, rank preconditions and other caller mistakes.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class CapExceeded : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// The numerics ran but the data does not have the expected structure,
// or a subproblem was infeasible.
class SolverError : public Error {
 public:
  using Error::Error;
};

class NotAKroneckerProduct : public SolverError {
 public:
  using SolverError::SolverError;
};

class NotPermutedKronecker : public SolverError {
 public:
  using SolverError::SolverError;
};

class NotSeparable : public SolverError {
 public:
  using SolverError::SolverError;
};

class InfeasibleProblem : public SolverError {
 public:
  using SolverError::SolverError;
};

// A synthetic generator ran out of attempts before meeting its constraints.
class GenerationFailed : public SolverError {
 public:
  using SolverError::SolverError;
};

// A mathematically guaranteed identity failed numerically.
class InternalInconsistency : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ntd
