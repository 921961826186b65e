#pragma once

#include <stdexcept>
#include <string>

namespace pkm {

/// Non-finite values showed up where finite data is required.
struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

/// BatchNorm in train mode saw a batch of size 1: the batch variance is
/// undefined, and silently falling back to running stats would hide a bug.
struct DegenerateBatchError : std::invalid_argument {
  explicit DegenerateBatchError(const std::string& what)
      : std::invalid_argument(what) {}
};

/// An operation was called on an object whose state does not admit it
/// (e.g. metrics over an empty accumulator).
struct PreconditionError : std::logic_error {
  explicit PreconditionError(const std::string& what) : std::logic_error(what) {}
};

/// The training loss became non-finite. `diagnostics` carries a dump of the
/// step, learning rate and gradient norms at the point of failure.
struct TrainingDiverged : std::runtime_error {
  std::string diagnostics;
  TrainingDiverged(const std::string& what, std::string diag)
      : std::runtime_error(what + "\n" + diag), diagnostics(std::move(diag)) {}
};

/// Structured checkpoint failure: `kind` says what went wrong, `section`
/// names the section (or tensor) that failed.
struct CheckpointError : std::runtime_error {
  enum class Kind {
    BadMagic,
    Truncated,
    ChecksumMismatch,
    ShapeMismatch,
    MissingSection,
    BadFormat,
  };

  Kind kind;
  std::string section;

  CheckpointError(Kind k, std::string sec, const std::string& what)
      : std::runtime_error(what), kind(k), section(std::move(sec)) {}
};

}  // namespace pkm
