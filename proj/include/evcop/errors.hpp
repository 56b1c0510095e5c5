#pragma once

// Exception types shared across the library.  Everything derives from
// std::runtime_error (data problems) or std::invalid_argument (caller
// errors) so generic handlers keep working.

#include <stdexcept>
#include <string>

namespace evcop {

// A column contains tied values and the tie policy forbids them.
class TiesDetected : public std::runtime_error {
 public:
  explicit TiesDetected(const std::string& what) : std::runtime_error(what) {}
};

// A column is constant; ranks are meaningless.
class DegenerateColumn : public std::runtime_error {
 public:
  explicit DegenerateColumn(const std::string& what) : std::runtime_error(what) {}
};

// An aggregation exponent r < 1 was requested.
class UnsupportedExponent : public std::invalid_argument {
 public:
  explicit UnsupportedExponent(const std::string& what)
      : std::invalid_argument(what) {}
};

// A Kendall's tau target outside the family's attainable range.
class UnattainableTau : public std::invalid_argument {
 public:
  explicit UnattainableTau(const std::string& what)
      : std::invalid_argument(what) {}
};

// Malformed CSV input; the message carries 1-based row/column location.
class CsvParseError : public std::runtime_error {
 public:
  explicit CsvParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evcop
