#pragma once

#include <stdexcept>
#include <string>

namespace ttl {

// Base for all library errors. code() is a short stable token used by the CLI
// as a machine-parsable prefix.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class CapacityError : public Error {
 public:
  CapacityError(std::size_t required, std::size_t allowed);
  std::size_t required() const noexcept { return required_; }
  std::size_t allowed() const noexcept { return allowed_; }

 private:
  std::size_t required_;
  std::size_t allowed_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error("E_NUMERIC", what) {}
};

class ReducibleChainError : public Error {
 public:
  explicit ReducibleChainError(const std::string& what) : Error("E_REDUCIBLE", what) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what) : Error("E_UNSUPPORTED", what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error("E_INVALID", what) {}
};

class NotSymmetricError : public Error {
 public:
  explicit NotSymmetricError(const std::string& what) : Error("E_NOT_SYMMETRIC", what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error("E_DEGENERATE", what) {}
};

class OverflowError : public Error {
 public:
  explicit OverflowError(const std::string& what) : Error("E_OVERFLOW", what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = -1, int column = -1);
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace ttl
