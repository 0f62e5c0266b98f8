#pragma once

#include <stdexcept>
#include <string>

namespace dynodom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed. Carries the offending line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

/// A numerical routine could not produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynodom
