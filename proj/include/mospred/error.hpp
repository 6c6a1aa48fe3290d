#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mospred {

/// Base class of every error raised by the library. `kind()` is a stable,
/// machine-readable class name used by the CLI when it reports failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& message) : Error("ArgumentError", message) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error("ShapeError", message) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& message) : Error("LookupError", message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message) : Error("NumericError", message) {}
};

class UndefinedCorrelation : public Error {
 public:
  explicit UndefinedCorrelation(const std::string& message)
      : Error("UndefinedCorrelation", message) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& message) : Error("TrainingError", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

/// Malformed binary or text input. `offset()` is the byte offset at which
/// parsing failed (for text formats: the offset of the offending line).
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : Error("FormatError", message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace mospred
