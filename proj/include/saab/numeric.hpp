// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Scalar root finding, 1-D minimization and order-independent summation.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "saab/error.hpp"

namespace saab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Pairwise summation. The result depends only on the order of the input,
// never on how the caller partitioned the work.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline double mean(std::span<const double> v) {
  detail::require(!v.empty(), "mean of an empty range");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Bisection for a sign change of f on [lo, hi]. Runs to full double
// resolution unless xtol is reached first.
inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double xtol = 0.0, int max_iter = 300) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi)) {
    throw NumericError("bisect: no sign change on [" + std::to_string(lo) +
                       ", " + std::to_string(hi) + "]");
  }
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= xtol) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Golden-section search for the minimum of a unimodal function on [lo, hi].
inline double golden_section_min(const std::function<double(double)>& f,
                                 double lo, double hi, double xtol = 1e-12,
                                 int max_iter = 500) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > xtol * (1.0 + std::fabs(a) + std::fabs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace saab
