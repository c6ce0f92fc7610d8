#pragma once

#include <stdexcept>
#include <string>

namespace regsim {

// Base for every error raised by the simulator components.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration rejected (process count, caps, unknown program family).
struct InvalidConfig : SimError {
  using SimError::SimError;
};

// A scheduler handed the kernel a decision that is not enabled in the
// current state. Signals a scheduler bug, not a simulation outcome.
struct DisabledDecision : SimError {
  using SimError::SimError;
};

// A process tried to invoke a register operation while one is pending.
struct PendingOpExists : SimError {
  using SimError::SimError;
};

// Operation id does not refer to a pending operation.
struct NotPending : SimError {
  using SimError::SimError;
};

// Operation or scheduler used against a backend it does not apply to.
struct WrongBackend : SimError {
  using SimError::SimError;
};

// The requested insertion point would break linearizability. This is the
// guard that keeps an adversary honest.
struct IllegalInsertion : SimError {
  using SimError::SimError;
};

struct AlreadyCommitted : SimError {
  using SimError::SimError;
};

// Brute-force checker asked to handle more operations than its bound.
struct BoundExceeded : SimError {
  using SimError::SimError;
};

struct UnknownOp : SimError {
  using SimError::SimError;
};

struct BadIndex : SimError {
  using SimError::SimError;
};

struct ArityMismatch : SimError {
  using SimError::SimError;
};

// Exhaustive schedule search ran past its step bound.
struct SearchBudgetExceeded : SimError {
  using SimError::SimError;
};

struct NoTraces : SimError {
  using SimError::SimError;
};

// A value outside the domain a local variable or guard input allows.
struct DomainError : SimError {
  using SimError::SimError;
};

}  // namespace regsim
