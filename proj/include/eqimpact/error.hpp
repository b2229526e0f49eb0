#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eqimpact {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required column is missing from the CSV header.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A data row failed validation. line() is 1-based and counts the header.
class RowError : public Error {
 public:
  RowError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// The dataset as a whole cannot be used (empty, group without qualified records, ...).
class DatasetError : public Error {
 public:
  using Error::Error;
};

// An argument is out of its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A utility function violates its assumptions (negative, increasing, identically zero).
class UtilityError : public Error {
 public:
  using Error::Error;
};

// Raised when a metric is requested on an empty stratum.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace eqimpact
