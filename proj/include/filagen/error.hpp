#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace filagen {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input that the caller can fix: malformed config, missing file,
/// manifest violations, dimension mismatches. Maps to CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file could not be decoded (unreadable, not PNG, unsupported depth).
class DecodeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Config field failed validation; `field()` is a dotted JSON path.
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// One or more manifest records failed validation. Each issue names the
/// offending record id.
class ManifestError : public ValidationError {
 public:
  struct Issue {
    std::string record_id;
    std::string message;
  };

  explicit ManifestError(std::vector<Issue> issues);
  const std::vector<Issue>& issues() const noexcept { return issues_; }

 private:
  std::vector<Issue> issues_;
};

/// Failure while work was in progress (I/O during generation, non-finite
/// losses, lock contention). Maps to CLI exit code 3.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace filagen
