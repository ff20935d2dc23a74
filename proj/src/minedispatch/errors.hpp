#ifndef MINEDISPATCH_ERRORS_HPP
#define MINEDISPATCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace minedispatch {

/// Base class of every error raised by the core library. The C API maps each
/// subclass onto one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A scenario or configuration invariant does not hold. `field()` names the
/// offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class IllegalAction : public Error {
 public:
  using Error::Error;
};

class EpisodeOver : public Error {
 public:
  using Error::Error;
};

class EpisodeNotFinished : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class UnsealedBuffer : public Error {
 public:
  using Error::Error;
};

}  // namespace minedispatch

#endif  // MINEDISPATCH_ERRORS_HPP
