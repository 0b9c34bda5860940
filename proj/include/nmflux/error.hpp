#pragma once

#include <stdexcept>
#include <string>

namespace nmflux {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter failed validation; `field()` names the offending input.
class InvalidParams : public Error {
 public:
  InvalidParams(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidBinning : public Error {
  using Error::Error;
};

class GridMismatch : public Error {
  using Error::Error;
};

class UnsupportedInitialState : public Error {
  using Error::Error;
};

class EmptyRegion : public Error {
  using Error::Error;
};

class NoSignal : public Error {
  using Error::Error;
};

class UnknownFigure : public Error {
  using Error::Error;
};

}  // namespace nmflux
