#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mcx {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments (bad dimensions, out-of-range parameters).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A chain was asked to sit at a state with zero (or NaN) density.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

class StencilError : public Error {
 public:
  StencilError(const std::string& what, std::size_t coordinate)
      : Error(what), coordinate_(coordinate) {}
  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_;
};

class ProposalError : public Error {
 public:
  using Error::Error;
};

class ConditionalError : public Error {
 public:
  ConditionalError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class DecompositionError : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class DegenerateChainError : public Error {
 public:
  using Error::Error;
};

/// Configuration validation failure carrying every violated constraint.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace mcx
