#pragma once

#include <stdexcept>
#include <string>

namespace pfode {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input validation.
class InvalidGrid : public Error { using Error::Error; };
class DimensionMismatch : public Error { using Error::Error; };
class ShapeMismatch : public Error { using Error::Error; };
class OutOfRange : public Error { using Error::Error; };
class InvalidArgument : public Error { using Error::Error; };

// Numerical failures.
class NumericalError : public Error { using Error::Error; };
class NonConvergence : public NumericalError { using NumericalError::NumericalError; };
class NotInCameronMartin : public NumericalError { using NumericalError::NumericalError; };
class QuadratureDivergence : public NumericalError { using NumericalError::NumericalError; };
class DegenerateDensity : public NumericalError { using NumericalError::NumericalError; };
class SingularFit : public NumericalError { using NumericalError::NumericalError; };
class NonFiniteState : public NumericalError { using NumericalError::NumericalError; };
class RankDeficient : public NumericalError { using NumericalError::NumericalError; };

// Explicit-scheme stability.
class CflViolation : public Error { using Error::Error; };

// Run configuration (carries a line-anchored message).
class ConfigError : public Error { using Error::Error; };

}  // namespace pfode
