#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace waggle {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite state or input handed to the dynamics.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Integration produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(double t, std::optional<int> iteration = std::nullopt);

  double time() const noexcept { return t_; }
  std::optional<int> iteration() const noexcept { return iteration_; }

 private:
  double t_;
  std::optional<int> iteration_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Sequences that must share a grid do not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed rows that violate a file-level rule (e.g. non-uniform sampling).
class FormatError : public Error {
 public:
  using Error::Error;
};

class DegenerateMotionError : public Error {
 public:
  using Error::Error;
};

class SessionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace waggle
