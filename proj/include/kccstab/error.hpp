#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kccstab {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed expressions, unknown names, out-of-range parameters.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a result.
class NumericError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public InputError {
 public:
  SyntaxError(std::size_t offset, std::string expected)
      : InputError("syntax error at offset " + std::to_string(offset) + ": expected " + expected),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class UnknownFunction : public InputError {
 public:
  UnknownFunction(std::string name, std::size_t offset)
      : InputError("unknown function '" + name + "' at offset " + std::to_string(offset)),
        name_(std::move(name)),
        offset_(offset) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string name_;
  std::size_t offset_;
};

class UnboundIdentifier : public InputError {
 public:
  explicit UnboundIdentifier(std::string name)
      : InputError("unbound identifier '" + name + "'"), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class InvalidParameter : public InputError {
 public:
  using InputError::InputError;
};

class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularElimination : public NumericError {
 public:
  using NumericError::NumericError;
};

class NewtonDivergence : public NumericError {
 public:
  using NumericError::NumericError;
};

class StepSizeUnderflow : public NumericError {
 public:
  using NumericError::NumericError;
};

class NoReturn : public NumericError {
 public:
  using NumericError::NumericError;
};

class NotConverged : public NumericError {
 public:
  using NumericError::NumericError;
};

class NoSignChange : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace kccstab
