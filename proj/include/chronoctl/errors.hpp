#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chronoctl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or inputs: bad parameters, points outside a scale,
/// malformed configuration.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Expression text that does not parse. `position` is a 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Failure during evaluation of an expression (division by zero, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: a singular matrix where an inverse is needed,
/// disagreeing equivalent tests, non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis required by the requested check (such as progressiveness) does not hold.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

}  // namespace chronoctl
