#pragma once

#include <stdexcept>
#include <string>

namespace stochlin {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map the whole family onto the "input error" exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Ax = b has no solution (residual of the least-norm candidate exceeds tolerance).
class Inconsistent : public Error {
 public:
  Inconsistent(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

class Singular : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Malformed experiment configuration; `field` is a JSON-pointer style path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& msg)
      : Error(field + ": " + msg), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace stochlin
