#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dagm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The communication graph is not connected (or could not be made so).
class ConnectivityError : public Error {
 public:
  using Error::Error;
};

/// A trajectory or iteration produced non-finite values.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long index, double last_valid_time)
      : Error(what), index_(index), last_valid_time_(last_valid_time) {}

  /// Iteration index (discrete runs) or step count (flows) of the failure.
  long index() const noexcept { return index_; }
  /// Last time at which the state was still finite (flows only; NaN otherwise).
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  long index_;
  double last_valid_time_;
};

/// Malformed binary input. `offset` is the byte offset at which parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dagm
