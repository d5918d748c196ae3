// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace saab {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument is outside the domain of the operation (negative sample size,
// probability outside (0,1), dimension mismatch, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A parameter lies outside the range where a bound is valid.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: singular basis, non-finite value, lost precision.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An iterative method hit its iteration limit.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_gap)
      : Error(what), best_gap_(best_gap) {}
  double best_gap() const noexcept { return best_gap_; }

 private:
  double best_gap_;
};

// The requested operation is not supported for this instance or geometry.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}
}  // namespace detail

}  // namespace saab
