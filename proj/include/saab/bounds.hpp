// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Closed-form confidence bounds for the optimal value of a stochastic
// program estimated by Sample Average Approximation (SAA).
//
// Notation: N is the sample size, M1/M2 the exponential-moment constants of
// the cost deviation and of the subgradient deviation, Omega and R the
// constants of the domain geometry. All risk levels are probabilities of
// the bound failing.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "saab/error.hpp"
#include "saab/geometry.hpp"
#include "saab/normal.hpp"
#include "saab/numeric.hpp"

namespace saab {

struct MomentConstants {
  double m1 = 1.0;
  double m2 = 1.0;
};

struct BoundParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double s = 1.0;
  double lambda = 0.0;
  std::int64_t N = 1;
};

enum class CiMethod { kSaa, kAsymptotic };

struct ConfidenceInterval {
  double low = 0.0;
  double up = 0.0;
  double level = 0.0;
  CiMethod method = CiMethod::kSaa;
  // Zero-variance asymptotic interval, or risk clipped at 1.
  bool degenerate = false;

  double width() const { return up - low; }
  bool contains(double v) const { return low <= v && v <= up; }
};

struct Risk {
  double value = 0.0;
  bool clipped = false;
};

// Which tail estimate is used for the lambda term of the risk.
//   kStandard: lambda must lie in [0, 2 sqrt(tau* N)]; term exp(-lambda^2/(4 tau*)).
//   kExtended: additionally accepts lambda > 2 sqrt(tau* N) with term exp(-lambda^2/3).
enum class TailRegime { kStandard, kExtended };

// Smallest tau with exp(t) <= t + exp(tau t^2) for every real t.
inline double tau_star() {
  static const double value = [] {
    // tau* = max_t ln(e^t - t) / t^2; locate the stationary point.
    auto slope = [](double t) {
      const double u = std::exp(t) - t;
      return (std::exp(t) - 1.0) / (u * t * t) - 2.0 * std::log(u) / (t * t * t);
    };
    const double t = bisect(slope, 0.3, 1.5);
    return std::log(std::exp(t) - t) / (t * t);
  }();
  return value;
}

// Scale of the sub-Gaussian lower-bound construction: gamma^2 = (1 - e^-2)/2.
inline double lower_width_gamma() { return std::sqrt(0.5 * (1.0 - std::exp(-2.0))); }

// Largest admissible mu (and lambda, in the standard regime) for sample size N.
inline double mu_limit(std::int64_t N) { return 2.0 * std::sqrt(tau_star() * static_cast<double>(N)); }

namespace detail {

inline void check_n(std::int64_t N) {
  if (N < 1) throw DomainError("sample size N must be >= 1, got " + std::to_string(N));
}

inline void check_mu(const char* name, double mu, std::int64_t N) {
  check_n(N);
  const double lim = mu_limit(N);
  if (!(mu >= 0.0) || mu > lim * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << name << " = " << mu << " outside the admissible interval [0, 2 sqrt(tau* N)] = [0, "
       << lim << "] for N = " << N;
    throw RangeError(os.str());
  }
}

inline void check_consts(const MomentConstants& c) {
  if (!(c.m1 > 0.0) || !(c.m2 > 0.0) || !std::isfinite(c.m1) || !std::isfinite(c.m2)) {
    throw DomainError("moment constants must be finite and positive");
  }
}

inline double gauss_tail(double mu) { return std::exp(-mu * mu / (4.0 * tau_star())); }

// mu such that exp(-mu^2/(4 tau*)) = r.
inline double mu_for_risk(double r) { return std::sqrt(4.0 * tau_star() * std::log(1.0 / r)); }

// s such that exp(-N (s^2 - 1)) = r.
inline double s_for_risk(double r, std::int64_t N) {
  return std::sqrt(1.0 + std::log(1.0 / r) / static_cast<double>(N));
}

}  // namespace detail

inline double bound_a(double mu, std::int64_t N, double m1) {
  detail::check_mu("mu", mu, N);
  return mu * m1 / std::sqrt(static_cast<double>(N));
}

inline double bound_b(double mu, double s, double lambda, std::int64_t N,
                      const MomentConstants& consts, const GeometrySpec& geo,
                      TailRegime regime = TailRegime::kStandard) {
  detail::check_mu("mu", mu, N);
  if (regime == TailRegime::kStandard) {
    detail::check_mu("lambda", lambda, N);
  } else if (!(lambda >= 0.0)) {
    throw RangeError("lambda must be >= 0");
  }
  if (!(s >= 1.0)) throw DomainError("s must be > 1");
  const double w = geo.omega_cap * (1.0 + s * s) + 2.0 * lambda;
  return (mu * consts.m1 + w * consts.m2 * geo.radius) / std::sqrt(static_cast<double>(N));
}

inline Risk risk_beta(const BoundParams& p, TailRegime regime = TailRegime::kStandard) {
  detail::check_mu("mu1", p.mu1, p.N);
  detail::check_mu("mu2", p.mu2, p.N);
  if (!(p.s >= 1.0)) throw DomainError("s must be > 1");
  double lambda_term;
  if (regime == TailRegime::kExtended && p.lambda > mu_limit(p.N)) {
    lambda_term = std::exp(-p.lambda * p.lambda / 3.0);
  } else {
    detail::check_mu("lambda", p.lambda, p.N);
    lambda_term = detail::gauss_tail(p.lambda);
  }
  const double sum = detail::gauss_tail(p.mu1) + detail::gauss_tail(p.mu2) +
                     std::exp(-static_cast<double>(p.N) * (p.s * p.s - 1.0)) + lambda_term;
  return sum >= 1.0 ? Risk{1.0, true} : Risk{sum, false};
}

inline double ci_width(const BoundParams& p, const MomentConstants& consts, const GeometrySpec& geo) {
  return bound_a(p.mu1, p.N, consts.m1) + bound_b(p.mu2, p.s, p.lambda, p.N, consts, geo);
}

inline ConfidenceInterval ci_saa_theoretical(double opt_n, const BoundParams& p,
                                             const MomentConstants& consts,
                                             const GeometrySpec& geo) {
  detail::check_consts(consts);
  const Risk beta = risk_beta(p);
  ConfidenceInterval ci;
  ci.low = opt_n - bound_a(p.mu1, p.N, consts.m1);
  ci.up = opt_n + bound_b(p.mu2, p.s, p.lambda, p.N, consts, geo);
  ci.level = 1.0 - beta.value;
  ci.method = CiMethod::kSaa;
  ci.degenerate = beta.clipped;  // level 0: the interval carries no guarantee
  return ci;
}

// How the risk budget alpha is distributed over the four terms of beta.
//   kMinWidth:   exact minimization of the total width.
//   kEqualSplit: alpha/4 per term.
//   kTiedRisk:   mu1, mu2 and lambda share one level r, the s term gets
//                alpha - 3r; r minimizes the width.
enum class ParamRule { kMinWidth, kEqualSplit, kTiedRisk };

namespace detail {

// r * mu(r) is increasing on (0, e^{-1/2}); solve r * mu(r) = c there.
inline double r_for_slope(double c, double r_min, double r_max) {
  auto g = [](double r) { return r * mu_for_risk(r); };
  if (g(r_max) <= c) return r_max;
  if (g(r_min) >= c) return r_min;
  return bisect([&](double r) { return g(r) - c; }, r_min, r_max);
}

inline BoundParams params_from_risks(double r1, double r2, double rs, double rl, std::int64_t N) {
  const double lim = mu_limit(N);
  BoundParams p;
  p.N = N;
  p.mu1 = std::min(mu_for_risk(r1), lim);
  p.mu2 = std::min(mu_for_risk(r2), lim);
  p.lambda = std::min(mu_for_risk(rl), lim);
  p.s = s_for_risk(rs, N);
  return p;
}

}  // namespace detail

inline BoundParams optimize_ci_params(double alpha, std::int64_t N, const MomentConstants& consts,
                                      const GeometrySpec& geo,
                                      ParamRule rule = ParamRule::kMinWidth) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  detail::check_n(N);
  detail::check_consts(consts);
  const double nd = static_cast<double>(N);
  // mu <= 2 sqrt(tau* N) is equivalent to a per-term risk >= e^{-N}.
  const double r_min = std::exp(-nd);
  const double r_cap = std::exp(-0.5);
  auto infeasible = [&] {
    std::ostringstream os;
    os << "no parameters with beta <= alpha = " << alpha
       << " satisfy the validity constraint mu <= 2 sqrt(tau* N) = " << mu_limit(N)
       << " for N = " << N;
    return RangeError(os.str());
  };

  const double tau = tau_star();
  const double w_mu = consts.m1;
  const double w_s = geo.omega_cap * consts.m2 * geo.radius;
  const double w_l = 2.0 * consts.m2 * geo.radius;

  switch (rule) {
    case ParamRule::kEqualSplit: {
      const double r = alpha / 4.0;
      if (r < r_min) throw infeasible();
      return detail::params_from_risks(r, r, r, r, N);
    }
    case ParamRule::kTiedRisk: {
      if (3.0 * r_min >= alpha) throw infeasible();
      const double hi = std::min(alpha / 3.0, r_cap);
      auto width = [&](double r) {
        return (2.0 * w_mu + w_l) * detail::mu_for_risk(r) + w_s * std::log(1.0 / (alpha - 3.0 * r)) / nd;
      };
      const double r = golden_section_min(width, r_min, hi * (1.0 - 1e-12), 1e-14);
      return detail::params_from_risks(r, r, alpha - 3.0 * r, r, N);
    }
    case ParamRule::kMinWidth:
      break;
  }

  if (3.0 * r_min >= alpha) throw infeasible();
  // Water-filling on the common marginal width decrease nu:
  //   mu-type terms: w * 2 tau / (r mu(r)) = nu,   s term: w_s / (N r) = nu.
  auto risks = [&](double nu) {
    std::array<double, 4> r{};
    r[0] = detail::r_for_slope(2.0 * tau * w_mu / nu, r_min, r_cap);
    r[1] = r[0];
    r[2] = std::min(w_s / (nd * nu), r_cap);
    r[3] = detail::r_for_slope(2.0 * tau * w_l / nu, r_min, r_cap);
    return r;
  };
  auto excess = [&](double log_nu) {
    const auto r = risks(std::exp(log_nu));
    return r[0] + r[1] + r[2] + r[3] - alpha;
  };
  double lo = -50.0, hi = 50.0;
  while (excess(lo) < 0.0) lo -= 50.0;
  while (excess(hi) > 0.0) hi += 50.0;
  auto r = risks(std::exp(bisect(excess, lo, hi)));
  const double total = r[0] + r[1] + r[2] + r[3];
  if (total > alpha) {
    for (double& ri : r) ri *= alpha / total;
  }
  return detail::params_from_risks(r[0], r[1], r[2], r[3], N);
}

inline double lower_width(double alpha, double m1, std::int64_t N) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  detail::check_n(N);
  const double q = alpha == 0.5 ? 0.0 : normal_quantile(1.0 - alpha);
  return 2.0 * lower_width_gamma() * q * m1 / std::sqrt(static_cast<double>(N));
}

// Ratio of the SAA interval width to the lower bound on any interval
// width, for the unit Euclidean ball.
inline double ratio_table1(double alpha, double m1, double m2, std::int64_t N,
                           ParamRule rule = ParamRule::kTiedRisk) {
  const GeometrySpec geo = euclidean_geometry(1);
  const MomentConstants c{m1, m2};
  const BoundParams p = optimize_ci_params(alpha, N, c, geo, rule);
  return ci_width(p, c, geo) / lower_width(alpha, m1, N);
}

// Normal-approximation interval from a second, independent sample of costs
// at the SAA solution.
inline ConfidenceInterval ci_asymptotic(std::span<const double> values, double alpha) {
  if (values.empty()) throw DomainError("ci_asymptotic: values must be nonempty");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  const double n = static_cast<double>(values.size());
  const double fhat = mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - fhat;
    sq[i] = d * d;
  }
  double var = mean(sq);
  bool degenerate = false;
  if (!(var > 0.0)) {
    var = 0.0;
    degenerate = true;
  }
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(var) / std::sqrt(n);
  return {fhat - half, fhat + half, 1.0 - alpha, CiMethod::kAsymptotic, degenerate};
}

// Data-driven interval: lower end from the SAA optimal value at level
// 1 - alpha/2, upper end the smaller of a second-sample bound (1 - alpha/4)
// and the SAA upper bound (1 - alpha/4, risk split equally over its terms).
inline ConfidenceInterval ci_saa_experimental(double opt_n, double fhat, double alpha, std::int64_t N,
                                              const MomentConstants& consts,
                                              const GeometrySpec& geo) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  detail::check_consts(consts);
  const double tau = tau_star();
  const double nd = static_cast<double>(N);
  const double mu1 = detail::mu_for_risk(alpha / 2.0);
  const double low = opt_n - bound_a(mu1, N, consts.m1);
  const double up_sample = fhat + 2.0 * consts.m1 * std::sqrt(tau * std::log(4.0 / alpha) / nd);
  const double r = alpha / 12.0;
  const double mu_r = detail::mu_for_risk(r);
  const double up_saa = opt_n + bound_b(mu_r, detail::s_for_risk(r, N), mu_r, N, consts, geo);
  return {low, std::min(up_sample, up_saa), 1.0 - alpha, CiMethod::kSaa, false};
}

struct MinimaxRisks {
  double upper = 0.0;  // m exp(-mu^2/(4 tau*)), before clipping
  double lower = 0.0;  // exp(-mu^2/(4 tau*)) + 2[exp(-N(s^2-1)) + exp(-lambda^2/(4 tau*))]
};

inline MinimaxRisks risks_minimax(double mu, double s, double lambda, std::int64_t N, int m) {
  detail::check_mu("mu", mu, N);
  detail::check_mu("lambda", lambda, N);
  if (m < 1) throw DomainError("number of components m must be >= 1");
  if (!(s >= 1.0)) throw DomainError("s must be > 1");
  const double t = detail::gauss_tail(mu);
  return {m * t, t + 2.0 * (std::exp(-static_cast<double>(N) * (s * s - 1.0)) + detail::gauss_tail(lambda))};
}

// Distance below the SAA optimal value of a minimax problem at which the
// lower confidence bound is placed.
inline double minimax_lower_margin(double mu, double s, double lambda, std::int64_t N,
                                   const MomentConstants& consts, const GeometrySpec& geo) {
  detail::check_mu("mu", mu, N);
  detail::check_mu("lambda", lambda, N);
  const double inner = geo.omega_cap * (1.0 + s * s) / 2.0 + 2.0 * lambda;
  return (mu * consts.m1 + 2.0 * consts.m2 * geo.radius * inner) / std::sqrt(static_cast<double>(N));
}

struct UnderestimatorCheck {
  bool ok = false;
  double beta = 1.0;
  double threshold = 0.0;  // epsilon must strictly exceed this
};

inline UnderestimatorCheck underestimator_feasible(double epsilon, double mu, double s, double lambda,
                                                   std::int64_t N, const MomentConstants& consts,
                                                   const GeometrySpec& geo, int m) {
  detail::check_mu("mu", mu, N);
  detail::check_mu("lambda", lambda, N);
  if (m < 1) throw DomainError("number of constraints m must be >= 1");
  const double nd = static_cast<double>(N);
  UnderestimatorCheck out;
  out.threshold = 2.0 / std::sqrt(nd) *
                  (mu * consts.m1 +
                   consts.m2 * geo.radius * (geo.omega_cap / 2.0 * (1.0 + s * s) + lambda));
  out.ok = epsilon > out.threshold;
  out.beta = std::exp(-nd * (s * s - 1.0)) + detail::gauss_tail(lambda) +
             (m + 2) * detail::gauss_tail(mu);
  return out;
}

// Lower bound on the slope of the parametric max-function at the optimum
// in terms of the strict feasibility level kappa and the objective range V.
inline double theta_lower_bound(double kappa, double V) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be > 0");
  if (!(V >= 0.0)) throw DomainError("V must be >= 0");
  return kappa / (V + kappa);
}

}  // namespace saab
