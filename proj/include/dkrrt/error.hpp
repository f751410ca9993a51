#pragma once

#include <stdexcept>
#include <string>

namespace dkrrt {

enum class ErrorKind {
  DimensionMismatch,
  EmptyDataset,
  InvalidInput,
  Divergence,
  Unsupported,
  Index,
  Conditioning,
  HorizonExceeded,
  TrainingDiverged,
  Config,
  Format,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Divergence with the offending step (rollout step, integrator step, epoch).
class StepError : public Error {
 public:
  StepError(ErrorKind kind, long step, const std::string& what)
      : Error(kind, what + " at step " + std::to_string(step)), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace dkrrt
