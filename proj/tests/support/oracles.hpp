// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Independent oracles shared by the unit tests and the acceptance runner:
// random domain points, brute-force minimization over a simplex grid, and a
// generator of random bounded linear programs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "saab/lp.hpp"
#include "saab/problems.hpp"
#include "saab/random.hpp"

namespace saab::testing {

inline Vector simplex_point(int n, Rng& rng) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = -std::log(rng.uniform_pos());
  return x / x.sum();
}

inline Vector random_point(const ProblemInstance& inst, Rng& rng) {
  switch (inst.geometry.norm_kind) {
    case NormKind::kL1: return simplex_point(inst.n(), rng);
    case NormKind::kMixedBoxSimplex: {
      Vector x(inst.x_size());
      x(0) = 2.0 * rng.uniform() - 1.0;
      x.tail(x.size() - 1) = inst.geometry.single_asset ? Vector::Ones(1) : simplex_point(inst.n(), rng);
      return x;
    }
    case NormKind::kL2: {
      Vector x(inst.n());
      for (int i = 0; i < inst.n(); ++i) x(i) = rng.normal();
      return x * (std::pow(rng.uniform(), 1.0 / inst.n()) / x.norm());
    }
  }
  return {};
}

// Calls visit(u) for every point of the simplex grid with resolution 1/K.
inline void for_each_grid_point(int n, int K, const std::function<void(const Vector&)>& visit) {
  Vector u(n);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      u(i) = static_cast<double>(left) / K;
      visit(u);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      u(i) = static_cast<double>(k) / K;
      rec(i + 1, left - k);
    }
  };
  rec(0, K);
}

// Grid minimum of the sample objective over the simplex block. The box
// variable (CVaR level) is minimized exactly: the objective is piecewise
// linear in it with kinks at the scenario returns.
inline double grid_min(const ProblemInstance& inst, const Matrix& xi, int K) {
  const int n = inst.n();
  const Eigen::Index N = xi.rows();
  const double w = 1.0 / static_cast<double>(N);
  std::vector<double> r(static_cast<std::size_t>(N));
  double best = kInf;
  // v + c * mean [r_t - v]_+ minimized over v in [-1, 1].
  const auto cvar_part = [&](double c) {
    double m = kInf;
    for (Eigen::Index k = -2; k < N; ++k) {
      const double v = k == -2 ? -1.0 : (k == -1 ? 1.0 : std::clamp(r[k], -1.0, 1.0));
      double s = 0.0;
      for (double rt : r) s += std::max(0.0, rt - v);
      m = std::min(m, v + c * w * s);
    }
    return m;
  };
  for_each_grid_point(n, K, [&](const Vector& u) {
    double mean_r = 0.0;
    for (Eigen::Index t = 0; t < N; ++t) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += xi(t, i) * u(i);
      r[t] = acc;
      mean_r += w * acc;
    }
    double val = 0.0;
    switch (inst.kind) {
      case ProblemKind::kQuadraticRisk: {
        const auto& p = inst.as<QuadraticParams>();
        for (double rt : r) val += w * (p.kappa0 * rt + 0.5 * p.kappa1 * rt * rt);
        break;
      }
      case ProblemKind::kGaussianVar: {
        const auto& p = inst.as<GaussianVarParams>();
        for (double rt : r) val += w * (p.kappa0 * rt + p.kappa1 * std::fabs(rt));
        break;
      }
      case ProblemKind::kCvar: {
        const auto& p = inst.as<CvarParams>();
        val = p.kappa0 * mean_r + p.kappa1 * cvar_part(1.0 / p.eps);
        break;
      }
      case ProblemKind::kMinimaxCvar: {
        const auto& p = inst.as<MinimaxParams>();
        val = std::max({cvar_part(1.0 / p.eps) + p.chi[0], mean_r + p.chi[1], p.chi[2] - mean_r});
        break;
      }
      default: throw DomainError("grid_min: unsupported kind");
    }
    best = std::min(best, val);
  });
  return best;
}

// Lipschitz constant of the sample objective (after minimizing out the box
// variable) in the l1 norm of the simplex block.
inline double grid_lipschitz(const ProblemInstance& inst, const Matrix& xi) {
  const double xmax = xi.cwiseAbs().maxCoeff();
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk: {
      const auto& p = inst.as<QuadraticParams>();
      return std::fabs(p.kappa0) + p.kappa1;
    }
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      return (std::fabs(p.kappa0) + p.kappa1) * xmax;
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      return (p.kappa0 + p.kappa1 / p.eps) * xmax;
    }
    case ProblemKind::kMinimaxCvar: return std::max(1.0 / inst.as<MinimaxParams>().eps, 1.0) * xmax;
    default: return kInf;
  }
}

// Random 20 x 40 program (8 equality and 12 inequality rows) with mixed
// bound types, feasible by construction; it may be unbounded.
inline LinearProgram random_lp(Rng& rng) {
  const int n = 40, me = 8, mu = 12;
  auto lp = LinearProgram::with_variables(n);
  Vector x0(n);
  for (int j = 0; j < n; ++j) {
    const double kind = rng.uniform();
    if (kind < 0.6) {
      lp.lower(j) = -rng.uniform();
      lp.upper(j) = rng.uniform() * 3;
    } else if (kind < 0.85) {
      lp.lower(j) = 0;
    } else {
      lp.lower(j) = -kInf;
    }
    x0(j) = std::isfinite(lp.upper(j)) ? lp.lower(j) + (lp.upper(j) - lp.lower(j)) * rng.uniform()
                                       : rng.normal();
    if (std::isfinite(lp.lower(j))) x0(j) = std::max(x0(j), lp.lower(j));
    lp.cost(j) = rng.normal();
  }
  lp.eq_matrix.resize(me, n);
  lp.ub_matrix.resize(mu, n);
  for (int i = 0; i < me; ++i)
    for (int j = 0; j < n; ++j) lp.eq_matrix(i, j) = rng.uniform() < 0.5 ? rng.normal() : 0.0;
  for (int i = 0; i < mu; ++i)
    for (int j = 0; j < n; ++j) lp.ub_matrix(i, j) = rng.normal();
  lp.eq_rhs = lp.eq_matrix * x0;
  lp.ub_rhs = lp.ub_matrix * x0 + Vector::NullaryExpr(mu, [&](Eigen::Index) { return rng.uniform(); });
  return lp;
}

}  // namespace saab::testing
