#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A caller violated a size or alignment contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise malformed numeric input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Random graph construction could not complete.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Spectral-radius normalization impossible (radius of zero).
class NormalizationError : public Error {
 public:
  NormalizationError(const std::string& what, double raw_radius)
      : Error(what), raw_radius_(raw_radius) {}
  double raw_radius() const noexcept { return raw_radius_; }

 private:
  double raw_radius_;
};

/// A time integration or autonomous rollout left the finite range.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Linear solve failed, typically a singular normal matrix.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Rescaling requested for a series without spread.
class DegenerateRangeError : public Error {
 public:
  using Error::Error;
};

/// Planned allocation exceeds the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rcnet
