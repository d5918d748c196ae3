// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Pairwise Frank-Wolfe for smooth convex minimization over the standard
// simplex. The Frank-Wolfe gap max_v <grad f(x), x - v> bounds the
// suboptimality of every iterate and is returned as the certificate.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <type_traits>
#include <vector>

#include "saab/error.hpp"
#include "saab/geometry.hpp"
#include "saab/lp.hpp"
#include "saab/numeric.hpp"

namespace saab {

// f(x) = offset + linear' x + x' quad x / 2 with quad symmetric PSD.
struct QuadraticObjective {
  Vector linear;
  Matrix quad;
  double offset = 0.0;

  double value(const Vector& x) const { return offset + linear.dot(x) + 0.5 * x.dot(quad * x); }
  Vector gradient(const Vector& x) const { return linear + quad * x; }

  // Exact minimizer over [0, t_max] along e_s - e_a.
  double pairwise_step(const Vector& g, int s, int a, double t_max) const {
    const double slope = g(s) - g(a);
    const double curv = quad(s, s) + quad(a, a) - 2.0 * quad(s, a);
    if (curv <= 0.0) return slope < 0.0 ? t_max : 0.0;
    return std::clamp(-slope / curv, 0.0, t_max);
  }
  void update_gradient(Vector& g, int s, int a, double t) const {
    g += t * (quad.col(s) - quad.col(a));
  }
};

struct SmoothOptions {
  double tol = 1e-10;
  int max_iterations = 200000;
  // Quadratic objectives: pairwise steps between exact minimizations over
  // the face spanned by the current support.
  int polish_every = 500;
};

namespace detail {

// Minimizes a quadratic over the face of the simplex spanned by supp(x),
// dropping coordinates that reach zero (primal active-set steps). A singular
// face Hessian is handled by the minimum-norm solution of the KKT system;
// every step is an exact line search, so f never increases.
inline void polish_on_face(const QuadraticObjective& f, Vector& x, Vector& g) {
  const int n = static_cast<int>(x.size());
  for (int round = 0; round < n; ++round) {
    std::vector<int> supp;
    for (int i = 0; i < n; ++i) {
      if (x(i) > 0.0) supp.push_back(i);
    }
    const int m = static_cast<int>(supp.size());
    if (m <= 1) return;
    Matrix kkt = Matrix::Zero(m + 1, m + 1);
    Vector rhs = Vector::Zero(m + 1);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) kkt(a, b) = f.quad(supp[a], supp[b]);
      kkt(a, m) = kkt(m, a) = 1.0;
      rhs(a) = -g(supp[a]);
    }
    const Vector d = kkt.completeOrthogonalDecomposition().solve(rhs).head(m);
    double slope = 0.0, t_max = kInf;
    for (int a = 0; a < m; ++a) {
      slope += g(supp[a]) * d(a);
      if (d(a) < 0.0) t_max = std::min(t_max, x(supp[a]) / -d(a));
    }
    if (!(slope < 0.0) || !std::isfinite(t_max)) return;
    Vector full = Vector::Zero(n);
    for (int a = 0; a < m; ++a) full(supp[a]) = d(a);
    const double curv = full.dot(f.quad * full);
    const double t = curv > 0.0 ? std::min(-slope / curv, t_max) : t_max;
    if (!(t > 0.0)) return;
    for (int a = 0; a < m; ++a) {
      const int i = supp[a];
      x(i) += t * d(a);
      if (t == t_max && d(a) < 0.0 && x(i) <= 1e-15 * std::fabs(t * d(a))) x(i) = 0.0;
    }
    x = x.cwiseMax(0.0);
    x /= x.sum();
    g = f.gradient(x);
    if (t < t_max) return;
  }
}

}  // namespace detail

template <class Objective>
SolveResult solve_simplex_smooth(const Objective& f, const GeometrySpec& domain,
                                 const SmoothOptions& opt = {}) {
  if (domain.norm_kind != NormKind::kL1) {
    throw CapabilityError("solve_simplex_smooth: domain must be the standard simplex");
  }
  const int n = domain.dimension;
  Vector x = Vector::Constant(n, 1.0 / n);
  Vector g = f.gradient(x);
  constexpr bool kExact = requires(const Objective& o, Vector& gg) {
    o.pairwise_step(gg, 0, 0, 1.0);
    o.update_gradient(gg, 0, 0, 1.0);
  };
  double best_gap = kInf;
  for (int it = 0; it < opt.max_iterations; ++it) {
    if constexpr (std::is_same_v<Objective, QuadraticObjective>) {
      if (opt.polish_every > 0 && it % opt.polish_every == opt.polish_every - 1) {
        detail::polish_on_face(f, x, g);
      }
    }
    if constexpr (kExact) {
      if (it % 256 == 255) g = f.gradient(x);  // limit drift of the running gradient
    } else {
      g = f.gradient(x);
    }
    if (!g.allFinite()) throw NumericError("solve_simplex_smooth: non-finite gradient");
    Eigen::Index s;
    const double gmin = g.minCoeff(&s);
    int a = -1;
    for (int i = 0; i < n; ++i) {
      if (x(i) > 0.0 && (a < 0 || g(i) > g(a))) a = i;
    }
    double gap = g.dot(x) - gmin;
    if (gap <= opt.tol) {
      if constexpr (kExact) {
        g = f.gradient(x);
        gap = g.dot(x) - g.minCoeff();
      }
      if (gap <= opt.tol) return {x, f.value(x), std::max(gap, 0.0), Certificate::kFwGap, it};
    }
    best_gap = std::min(best_gap, gap);
    const int si = static_cast<int>(s);
    if (a == si) continue;  // cannot happen with gap > 0, kept for safety
    const double t_max = x(a);
    double t;
    if constexpr (kExact) {
      t = f.pairwise_step(g, si, a, t_max);
    } else {
      auto phi = [&](double tt) {
        Vector y = x;
        y(si) += tt;
        y(a) -= tt;
        return f.value(y);
      };
      t = golden_section_min(phi, 0.0, t_max, 1e-14);
    }
    if (t <= 0.0) {
      // Exact line search may return 0 only at a stationary pairwise
      // direction; fall back to a plain Frank-Wolfe step toward s.
      const Vector d = -x + Vector::Unit(n, si);
      auto phi = [&](double tt) { return f.value(x + tt * d); };
      const double tt = golden_section_min(phi, 0.0, 1.0, 1e-14);
      x += tt * d;
      g = f.gradient(x);
      continue;
    }
    x(si) += t;
    if (t >= t_max) {
      x(a) = 0.0;
    } else {
      x(a) -= t;
    }
    if constexpr (kExact) f.update_gradient(g, si, a, t);
  }
  std::ostringstream os;
  os << "solve_simplex_smooth: iteration limit " << opt.max_iterations << " reached, best gap "
     << best_gap;
  throw ConvergenceError(os.str(), best_gap);
}

}  // namespace saab
