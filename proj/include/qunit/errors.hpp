#pragma once

#include <stdexcept>
#include <string>

namespace qunit {

// Caller-side contract violations (bad d, non-ramified prime, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Anything the engines could not finish or could not trust.
class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configured work budget ran out. Never a partial answer.
class ResourceLimitError : public EngineError {
 public:
  using EngineError::EngineError;
};

// The large-step engine could not verify its own result; the caller
// should retry with the small-step path.
class VerificationError : public EngineError {
 public:
  using EngineError::EngineError;
};

// Analytic class number estimate too close to a half-integer.
class AmbiguousRoundingError : public EngineError {
 public:
  using EngineError::EngineError;
};

// Small-step and large-step engines disagreed on a residue.
class EngineMismatchError : public EngineError {
 public:
  using EngineError::EngineError;
};

// A long scan observed its cancellation token.
class CancelledError : public EngineError {
 public:
  using EngineError::EngineError;
};

}  // namespace qunit
