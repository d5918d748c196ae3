// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Norms, distance-generating functions (DGFs), the Omega/R constants of a
// domain, and the prox mappings built on them.
//
// Two DGF families are supported:
//   power:   omega(x) = 1/(p*gamma) * sum |x_i|^p   (unit balls of l1 / l2)
//   entropy: omega(x) = sum x_i ln x_i              (simplex only)
// The mixed box-times-simplex domain of the CVaR problems uses the norm
// sqrt(x0^2 + |x'|_1^2) and omega = x0^2/2 + power(x').
//
// Both prox operators take a step along -g:
//   prox(x, g, step) = argmin_y  V_x(y) + step * <g, y>.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "saab/error.hpp"
#include "saab/numeric.hpp"

namespace saab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class NormKind { kL1, kL2, kMixedBoxSimplex };

struct DgfParams {
  double p = 2.0;
  double gamma = 1.0;
};

struct GeometrySpec {
  NormKind norm_kind = NormKind::kL2;
  // Number of coordinates the norm acts on. For the mixed domain this is
  // the number of assets n; vectors then have n + 1 entries (x0 first).
  int dimension = 1;
  double omega_cap = 1.0;
  double radius = 1.0;
  DgfParams dgf;
  // Mixed domain with a single asset fixed at x1 = 1 (the "n = 0" case).
  bool single_asset = false;

  // Length of the decision vectors living in this geometry.
  int vector_size() const {
    return norm_kind == NormKind::kMixedBoxSimplex ? dimension + 1 : dimension;
  }
};

// Power-DGF parameters adapted to the l1 geometry of R^n.
inline DgfParams power_dgf_params(int n) {
  detail::require(n >= 1, "power_dgf_params: invalid dimension n = " + std::to_string(n));
  if (n == 1) return {2.0, 1.0};
  if (n == 2) return {2.0, 0.5};
  const double ln = std::log(static_cast<double>(n));
  return {1.0 + 1.0 / ln, 1.0 / (std::numbers::e * ln)};
}

inline double omega_from_dgf(const DgfParams& d) { return std::sqrt(2.0 / (d.p * d.gamma)); }

inline double omega_l1(int n) {
  detail::require(n >= 1, "omega_l1: invalid dimension n = " + std::to_string(n));
  if (n == 1) return 1.0;
  if (n == 2) return std::numbers::sqrt2;
  const double ln = std::log(static_cast<double>(n));
  return ln * std::sqrt(2.0 * std::numbers::e / (1.0 + ln));
}

inline double omega_mixed(int n) {
  detail::require(n >= 0, "omega_mixed: invalid dimension n = " + std::to_string(n));
  if (n == 0) return 1.0;
  const DgfParams d = power_dgf_params(n);
  return std::sqrt(1.0 + 2.0 / (d.p * d.gamma));
}

// Standard simplex (or l1 ball) in R^n with the l1 norm.
inline GeometrySpec simplex_geometry(int n) {
  GeometrySpec g;
  g.norm_kind = NormKind::kL1;
  g.dimension = n;
  g.dgf = power_dgf_params(n);
  g.omega_cap = omega_l1(n);
  g.radius = 1.0;
  return g;
}

// Unit Euclidean ball in R^n.
inline GeometrySpec euclidean_geometry(int n) {
  detail::require(n >= 1, "euclidean_geometry: invalid dimension n = " + std::to_string(n));
  GeometrySpec g;
  g.norm_kind = NormKind::kL2;
  g.dimension = n;
  g.dgf = {2.0, 1.0};
  g.omega_cap = 1.0;
  g.radius = 1.0;
  return g;
}

// [-1,1] x simplex(n), the CVaR domain; n = 0 means a single fixed asset.
inline GeometrySpec mixed_geometry(int n) {
  detail::require(n >= 0, "mixed_geometry: invalid dimension n = " + std::to_string(n));
  GeometrySpec g;
  g.norm_kind = NormKind::kMixedBoxSimplex;
  g.single_asset = (n == 0);
  g.dimension = std::max(n, 1);
  g.dgf = power_dgf_params(g.dimension);
  g.omega_cap = omega_mixed(n);
  g.radius = n == 0 ? 1.0 : std::numbers::sqrt2;
  return g;
}

namespace detail {
inline void check_size(const GeometrySpec& spec, const Vector& x, const char* who) {
  if (x.size() != spec.vector_size()) {
    std::ostringstream os;
    os << who << ": vector of size " << x.size() << " does not match geometry size "
       << spec.vector_size();
    throw DomainError(os.str());
  }
}
}  // namespace detail

inline double norm(const GeometrySpec& spec, const Vector& x) {
  detail::check_size(spec, x, "norm");
  switch (spec.norm_kind) {
    case NormKind::kL1:
      return x.lpNorm<1>();
    case NormKind::kL2:
      return x.norm();
    case NormKind::kMixedBoxSimplex:
      if (spec.single_asset) return std::fabs(x(0));
      return std::hypot(x(0), x.tail(x.size() - 1).lpNorm<1>());
  }
  return 0.0;
}

inline double dual_norm(const GeometrySpec& spec, const Vector& y) {
  detail::check_size(spec, y, "dual_norm");
  switch (spec.norm_kind) {
    case NormKind::kL1:
      return y.lpNorm<Eigen::Infinity>();
    case NormKind::kL2:
      return y.norm();
    case NormKind::kMixedBoxSimplex:
      // With a single fixed asset only the box coordinate moves.
      if (spec.single_asset) return std::fabs(y(0));
      return std::hypot(y(0), y.tail(y.size() - 1).lpNorm<Eigen::Infinity>());
  }
  return 0.0;
}

namespace detail {
inline double power_value(const DgfParams& d, const Eigen::Ref<const Vector>& x) {
  return x.array().abs().pow(d.p).sum() / (d.p * d.gamma);
}
inline Vector power_gradient(const DgfParams& d, const Eigen::Ref<const Vector>& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    g(i) = std::copysign(std::pow(std::fabs(x(i)), d.p - 1.0), x(i)) / d.gamma;
  }
  return g;
}
// Inverse of the power gradient: y with grad(y) = z.
inline Vector power_gradient_inverse(const DgfParams& d, const Eigen::Ref<const Vector>& z) {
  Vector y(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    y(i) = std::copysign(std::pow(d.gamma * std::fabs(z(i)), 1.0 / (d.p - 1.0)), z(i));
  }
  return y;
}
}  // namespace detail

inline double dgf_value(const GeometrySpec& spec, const Vector& x) {
  detail::check_size(spec, x, "dgf_value");
  if (spec.norm_kind != NormKind::kMixedBoxSimplex) return detail::power_value(spec.dgf, x);
  const double box = 0.5 * x(0) * x(0);
  if (spec.single_asset) return box;
  return box + detail::power_value(spec.dgf, x.tail(x.size() - 1));
}

inline Vector dgf_gradient(const GeometrySpec& spec, const Vector& x) {
  detail::check_size(spec, x, "dgf_gradient");
  if (spec.norm_kind != NormKind::kMixedBoxSimplex) return detail::power_gradient(spec.dgf, x);
  Vector g(x.size());
  g(0) = x(0);
  if (spec.single_asset) {
    g.tail(x.size() - 1).setZero();
  } else {
    g.tail(x.size() - 1) = detail::power_gradient(spec.dgf, x.tail(x.size() - 1));
  }
  return g;
}

// Entropy prox on the simplex: y_i proportional to x_i * exp(-step * g_i).
inline Vector prox_entropy(const Vector& x, const Vector& g, double step) {
  if (x.size() != g.size()) throw DomainError("prox_entropy: size mismatch");
  if (!g.allFinite()) throw NumericError("prox_entropy: non-finite gradient entry");
  if (!(step >= 0.0) || !std::isfinite(step)) throw DomainError("prox_entropy: step must be finite and >= 0");
  if ((x.array() <= 0.0).any()) throw DomainError("prox_entropy: x must be strictly positive");
  Vector w = x.array().log() - step * g.array();
  const double top = w.maxCoeff();
  w = (w.array() - top).exp();
  return w / pairwise_sum({w.data(), static_cast<std::size_t>(w.size())});
}

// Power-DGF prox over the unit ball of an l1 or l2 geometry, found by
// bisection on the multiplier of the ball constraint.
inline Vector prox_power(const Vector& x, const Vector& g, double step, const GeometrySpec& spec) {
  detail::check_size(spec, x, "prox_power");
  detail::check_size(spec, g, "prox_power");
  if (spec.norm_kind == NormKind::kMixedBoxSimplex) {
    throw CapabilityError("prox_power: mixed box-simplex geometry has no ball prox");
  }
  if (!g.allFinite()) throw NumericError("prox_power: non-finite gradient entry");
  const DgfParams& d = spec.dgf;
  const Vector z = detail::power_gradient(d, x) - step * g;

  Vector y = detail::power_gradient_inverse(d, z);
  if (norm(spec, y) <= 1.0) return y;

  // y(lambda) for a ball multiplier lambda >= 0.
  auto solve = [&](double lambda) {
    Vector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double a = std::fabs(z(i));
      double t;
      if (spec.norm_kind == NormKind::kL1) {
        t = std::pow(d.gamma * std::max(a - lambda, 0.0), 1.0 / (d.p - 1.0));
      } else {
        // (1/gamma) t^{p-1} + lambda t = a, increasing in t.
        if (a == 0.0) {
          t = 0.0;
        } else {
          const double hi0 = std::min(a / std::max(lambda, 1e-300),
                                      std::pow(d.gamma * a, 1.0 / (d.p - 1.0)));
          t = bisect([&](double s) { return std::pow(s, d.p - 1.0) / d.gamma + lambda * s - a; },
                     0.0, hi0);
        }
      }
      out(i) = std::copysign(t, z(i));
    }
    return out;
  };

  double lo = 0.0;
  double hi = spec.norm_kind == NormKind::kL1 ? z.lpNorm<Eigen::Infinity>() : 1.0;
  for (int k = 0; norm(spec, solve(hi)) > 1.0; ++k) {
    if (k > 200) {
      std::ostringstream os;
      os << "prox_power: failed to bracket the ball multiplier; x = " << x.transpose()
         << ", g = " << g.transpose() << ", step = " << step;
      throw ConvergenceError(os.str(), norm(spec, solve(hi)) - 1.0);
    }
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double r = norm(spec, solve(mid)) - 1.0;
    if (r > 0.0) {
      lo = mid;
    } else {
      hi = mid;
      if (r > -1e-12) break;
    }
  }
  return solve(hi);
}

// Prox for the mixed domain used by mirror descent: Euclidean step on the
// box coordinate x0, entropy step on the simplex block.
inline Vector prox_mixed_entropy(const Vector& x, const Vector& g, double step, bool single_asset) {
  if (x.size() != g.size() || x.size() < 2) throw DomainError("prox_mixed_entropy: size mismatch");
  Vector y(x.size());
  y(0) = std::clamp(x(0) - step * g(0), -1.0, 1.0);
  if (single_asset) {
    y.tail(x.size() - 1) = x.tail(x.size() - 1);
  } else {
    y.tail(x.size() - 1) = prox_entropy(x.tail(x.size() - 1), g.tail(g.size() - 1), step);
  }
  return y;
}

}  // namespace saab
