#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace selrad {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid physical parameters, geometry or configuration.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Evaluation outside the domain of a function (e.g. the Green's tensor at r = 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: ill-conditioning, non-convergence, step underflow.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::optional<double> estimate = std::nullopt)
      : Error(what), estimate_(estimate) {}

  /// Condition estimate, best residual or similar diagnostic, if one applies.
  std::optional<double> estimate() const { return estimate_; }

 private:
  std::optional<double> estimate_;
};

}  // namespace selrad
