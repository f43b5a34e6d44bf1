#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdpc {

/// Coarse failure classes. The CLI maps each one to a distinct exit code and
/// prints the category name on stderr so scripts can branch on it.
enum class ErrorCategory {
  kUsage,
  kInput,
  kValidation,
  kMissingArtifact,
  kLineage,
  kIo,
  kInternal,
};

std::string_view category_name(ErrorCategory c);
int exit_code(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Malformed or semantically invalid input data (bad JSONL line, duplicate id,
/// non-finite score, ...). Messages carry a line/row number where one exists.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorCategory::kInput, what) {}
};

/// Violated precondition on an argument (order < 1, p outside [0,1], ...).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCategory::kValidation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& path, const std::string& producer)
      : Error(ErrorCategory::kMissingArtifact,
              "missing artifact " + path + "; run `" + producer + "` first"),
        producer_(producer) {}

  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string producer_;
};

class LineageError : public Error {
 public:
  explicit LineageError(const std::string& what) : Error(ErrorCategory::kLineage, what) {}
};

}  // namespace pdpc
