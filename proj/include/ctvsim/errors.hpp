#pragma once

#include <stdexcept>
#include <string>

namespace ctvsim {

/// Malformed target specification, latency table, or other configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// User-supplied input that cannot be processed (bad triple id, mismatched
/// matrices, empty category, ...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation needs a feature the target does not expose (user-mode
/// flush, SMT). Signals an invalid test configuration rather than a bug.
class FeatureUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A timing type whose placement cannot be reached on the target.
class InvalidTimingType : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A three-step plan that does not reproduce its intended cache states.
class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal simulator invariant was broken.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ctvsim
