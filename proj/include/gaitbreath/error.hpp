#pragma once

#include <stdexcept>
#include <string>

namespace gaitbreath {

enum class ErrorKind { Format, Io, Parameter, Numerical, Protocol };

/// Base class for every error raised by the library. The kind decides the
/// CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed or inconsistent on-disk data.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// Bad configuration or violated precondition on a numeric argument.
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error(ErrorKind::Parameter, what) {}
};

/// Solver failure, unusable signal, or another numerical dead end.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// Evaluation protocol violation (e.g. a sample on both sides of a split).
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::Protocol, what) {}
};

int exit_code(ErrorKind kind) noexcept;
const char* kind_name(ErrorKind kind) noexcept;

}  // namespace gaitbreath
