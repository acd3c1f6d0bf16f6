#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eruq {

// Base of every error the library throws. Callers that only care about
// "something went wrong with this record" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An invariant of a domain type does not hold (duplicate id, NaN component...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bytes that do not follow the declared layout (bad magic, bad UTF-8...).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ParseError : public FormatError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class CorruptionError : public FormatError {
 public:
  CorruptionError(std::uint64_t offset, const std::string& what)
      : FormatError("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Mathematical precondition violated (zero matrix, single-class labels...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public NumericalError {
 public:
  OverflowError(int step, const std::string& what)
      : NumericalError("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace eruq
