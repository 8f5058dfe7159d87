#pragma once

#include <stdexcept>
#include <string>

namespace otprop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live in spaces of different dimension.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside of its domain (bad cost kind, rank
/// deficiency, non-stochastic matrix, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A distributional operation would produce more atoms than allowed.
class AtomBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A solver returned a result that fails its own residual checks.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

inline void require_dim(long lhs, long rhs, const std::string& what) {
  if (lhs != rhs) {
    throw DimensionMismatch(what + " (" + std::to_string(lhs) + " vs " +
                            std::to_string(rhs) + ")");
  }
}

}  // namespace detail
}  // namespace otprop
