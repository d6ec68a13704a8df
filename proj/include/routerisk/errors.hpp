#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace routerisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A 1/r^2 term would be evaluated at r = 0.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A k(E) line is evaluated where it is not negative, or E lies outside
/// the calibrated activity range.
class CalibrationRangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (sample counts, unknown presets, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Input data cannot support the requested statistic.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// A route or segment violates its structural invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(format(source, line, what)), source_(std::move(source)), line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& what) {
    std::string out = source.empty() ? std::string("<input>") : source;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  std::string source_;
  std::size_t line_;
};

}  // namespace routerisk
