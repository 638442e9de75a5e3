#pragma once

#include <stdexcept>
#include <string>

namespace lqropt {

// Base class for all numerical / algorithmic failures in this library.
// Precondition violations (bad dimensions, invalid config) use
// std::invalid_argument instead.
struct LqrError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotHurwitz : LqrError {
  using LqrError::LqrError;
};

struct SingularSystem : LqrError {
  using LqrError::LqrError;
};

struct EigenFailure : LqrError {
  using LqrError::LqrError;
};

struct BudgetExceeded : LqrError {
  using LqrError::LqrError;
};

struct NotStabilizing : LqrError {
  using LqrError::LqrError;
};

struct NoConvergence : LqrError {
  using LqrError::LqrError;
};

struct InvalidAlpha : LqrError {
  using LqrError::LqrError;
};

struct ZeroInput : LqrError {
  using LqrError::LqrError;
};

struct InvalidDamping : LqrError {
  using LqrError::LqrError;
};

struct StepRejected : LqrError {
  using LqrError::LqrError;
};

struct NonFiniteValue : LqrError {
  using LqrError::LqrError;
};

struct RestartBudgetExceeded : LqrError {
  using LqrError::LqrError;
};

struct JumpBudgetExceeded : LqrError {
  using LqrError::LqrError;
};

struct NonConvexDetected : LqrError {
  using LqrError::LqrError;
};

struct IterationBudgetExceeded : LqrError {
  using LqrError::LqrError;
};

struct EigenBudgetExceeded : LqrError {
  using LqrError::LqrError;
};

struct LeftFeasibleSet : LqrError {
  using LqrError::LqrError;
};

struct GenerationFailed : LqrError {
  using LqrError::LqrError;
};

}  // namespace lqropt
