#pragma once

#include <stdexcept>
#include <string>

namespace matn {

// Root of every error thrown by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

class InvalidAblationError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Checkpoint has the wrong magic or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Checkpoint is truncated or fails its checksum.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

}  // namespace matn
