#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sde {

enum class ErrorCode {
  EmptyInput,
  BadK,
  BadArgument,
  BackendError,
  MalformedOutput,
  InvalidScene,
  InvalidTemplate,
  OrphanPath,
  PathNotFound,
  InvalidPath,
  InvalidEdit,
  ParseError,
  EmptyLibrary,
  EmptyPrompt,
  StageOrderViolation,
  NotFound,
  EmptyCorpus,
  InjectedFault,
};

std::string_view to_string(ErrorCode code);

/// Rule broken by a scene, template or session, and where.
struct Violation {
  std::string path;  // element path, region id or "" for scene-level rules
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Carries the full violation list so callers (HTTP 422, CLI) can report it.
class ValidationError : public Error {
 public:
  ValidationError(ErrorCode code, std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class BackendError : public Error {
 public:
  BackendError(int status, int attempts, const std::string& cause)
      : Error(ErrorCode::BackendError,
              "backend error (status " + std::to_string(status) + ", " +
                  std::to_string(attempts) + " attempt(s)): " + cause),
        status_(status),
        attempts_(attempts) {}

  // 0 means no HTTP status (transport failure or stub).
  int status() const noexcept { return status_; }
  int attempts() const noexcept { return attempts_; }

 private:
  int status_;
  int attempts_;
};

}  // namespace sde
