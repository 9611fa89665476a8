#pragma once

#include <stdexcept>
#include <string>

namespace priorlens {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix required to be symmetric positive definite was not invertible.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Operands had incompatible dimensions.
class DimMismatch : public Error {
 public:
  using Error::Error;
};

/// Contraction pattern not recognized.
class UnknownPattern : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or infinity where a finite value is required.
class NonFinite : public Error {
 public:
  using Error::Error;
};

/// Iterative optimization failed to reach its stopping rule.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// A point left the parameter domain's interior.
class NotInterior : public Error {
 public:
  using Error::Error;
};

/// Model offers no analytic expectations and no sampler for the fallback.
class NoExpectationPath : public Error {
 public:
  using Error::Error;
};

/// A denominator quadratic form was numerically zero.
class DegenerateEstimate : public Error {
 public:
  using Error::Error;
};

/// Closed-form marginal evaluated outside its validity region.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// Prior normalizer requested for hyperparameters with a divergent integral.
class ImproperPrior : public Error {
 public:
  using Error::Error;
};

/// Markov chain accepted (almost) no proposals.
class AllRejected : public Error {
 public:
  using Error::Error;
};

/// Importance weights too concentrated for a reliable estimate.
class UnstableWeights : public Error {
 public:
  using Error::Error;
};

}  // namespace priorlens
