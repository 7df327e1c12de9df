#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace proxcat {

/// Base class of every error thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An argument violated a documented precondition (wrong point kind for the
/// space, nonpositive tolerance, malformed parameter, ...).
struct invalid_input : error {
  using error::error;
};

/// A point lies outside the model of its space (half-plane with y <= 0).
struct domain_error : error {
  using error::error;
};

/// A computation could not produce a trustworthy result (integer overflow,
/// iteration cap reached).
struct numeric_failure : error {
  using error::error;
};

/// An explicit step schedule ran out before its partial sums reached the
/// requested value. `max_reachable` is the full sum of the schedule.
struct insufficient_schedule : error {
  double max_reachable;
  insufficient_schedule(const std::string& what, double reachable)
      : error(what), max_reachable(reachable) {}
};

/// A sequence or trace was too short to scan every window requested.
/// `required_length` is the smallest length that would suffice.
struct insufficient_sequence : invalid_input {
  std::size_t required_length;
  insufficient_sequence(const std::string& what, std::size_t required)
      : invalid_input(what), required_length(required) {}
};

/// Nearest-point projection was requested onto a set with no usable
/// analytic description.
struct unsupported_set : error {
  using error::error;
};

}  // namespace proxcat
