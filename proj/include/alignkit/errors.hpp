#pragma once

#include <stdexcept>
#include <string>

namespace alignkit {

/// Process exit codes, shared between the CLI and the error taxonomy.
enum class ExitCode : int {
  ok = 0,
  runtime = 1,
  usage = 2,
  config = 3,
  backend = 4,
  trainer = 5,
};

class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg, ExitCode code = ExitCode::runtime)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ExitCode exit_code() const { return code_; }

 private:
  ExitCode code_;
};

class UsageError : public Error {
 public:
  explicit UsageError(std::string msg) : Error(std::move(msg), ExitCode::usage) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string msg) : Error(std::move(msg), ExitCode::config) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(std::string msg) : Error(std::move(msg), ExitCode::backend) {}
};

/// Retryable transport-level failure; the dispatcher retries these up to the
/// configured limit before surfacing a BackendError.
class TransientError : public BackendError {
 public:
  explicit TransientError(std::string msg) : BackendError(std::move(msg)) {}
};

/// The backend does not implement the requested primitive (e.g. option
/// scoring). Callers with a documented fallback catch this.
class CapabilityError : public BackendError {
 public:
  explicit CapabilityError(std::string msg) : BackendError(std::move(msg)) {}
};

class TrainerError : public Error {
 public:
  explicit TrainerError(std::string msg) : Error(std::move(msg), ExitCode::trainer) {}
};

/// On-disk state violates the store contract (corrupt stream, bad layout).
class DataError : public Error {
 public:
  explicit DataError(std::string msg) : Error(std::move(msg), ExitCode::runtime) {}
};

}  // namespace alignkit
