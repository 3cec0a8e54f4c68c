#pragma once

#include <stdexcept>
#include <string>

namespace cavisnr {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite, non-positive or otherwise invalid physical input.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Fock basis construction problems (cutoff below 1).
class BasisError : public Error {
 public:
  using Error::Error;
};

/// The problem does not fit under the configured size caps.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, long requested, long cap)
      : Error(what), requested_(requested), cap_(cap) {}

  long requested() const noexcept { return requested_; }
  long cap() const noexcept { return cap_; }

 private:
  long requested_;
  long cap_;
};

/// Linear solve failed or produced a state outside tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Drive or detector configuration that cannot be honoured.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Lookup outside a sampled range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Count distributions overlap at the requested sigma level.
class SeparationError : public Error {
 public:
  SeparationError(const std::string& what, double required_snr)
      : Error(what), required_snr_(required_snr) {}

  double required_snr() const noexcept { return required_snr_; }

 private:
  double required_snr_;
};

}  // namespace cavisnr
