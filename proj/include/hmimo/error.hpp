#pragma once

#include <stdexcept>
#include <string>

namespace hmimo {

// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by truncated series that fail to settle within the term budget.
class SeriesNotConverged : public std::runtime_error {
 public:
  SeriesNotConverged(const std::string& what, double partial, int terms)
      : std::runtime_error(what + " (partial=" + std::to_string(partial) +
                           ", terms=" + std::to_string(terms) + ")"),
        partial_value(partial),
        terms_used(terms) {}

  double partial_value;
  int terms_used;
};

// Raised when a quadrature rule disagrees with its refined counterpart.
class QuadratureNotConverged : public std::runtime_error {
 public:
  QuadratureNotConverged(const std::string& what, double coarse, double fine)
      : std::runtime_error(what), coarse_value(coarse), fine_value(fine) {}

  double coarse_value;
  double fine_value;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace hmimo
