#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace creditvol {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or malformed input data. `row` is the 1-based file row when the
// problem came from a file, 0 otherwise.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t row = 0)
      : Error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// The particle cloud collapsed: every weight at time `t` (1-based) is zero.
class FilterFailure : public NumericalError {
 public:
  explicit FilterFailure(std::size_t t)
      : NumericalError("all particle weights are zero at t=" + std::to_string(t)), t_(t) {}
  std::size_t time() const noexcept { return t_; }

 private:
  std::size_t t_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace creditvol
