#ifndef CANSEG_ERRORS_H_
#define CANSEG_ERRORS_H_

#include <stdexcept>
#include <string>

namespace canseg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed corpus line. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Well-formed line whose content breaks a data invariant.
class ValidationError : public Error {
 public:
  ValidationError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Incompatible tensor shapes, parameter files, or model layouts.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad argument or precondition violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace canseg

#endif  // CANSEG_ERRORS_H_
