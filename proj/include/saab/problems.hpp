// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Problem instances: samplers, exact expectations, ground-truth optima and
// the moment constants (M1, M2) each instance satisfies.
//
// Kinds and decision layouts:
//   quadratic     x in simplex(n);  F = k0 xi'x + k1/2 (xi'x)^2,  xi_i = +-1
//   gaussian-var  x in simplex(n);  F = k0 xi'x + k1 |xi'x|,      xi ~ N(0, S)
//   cvar          [x0; x'] in [-1,1] x simplex(n);
//                 F = k0 xi'x' + k1 (x0 + [xi'x' - x0]_+ / eps),  xi_i = +-1
//   minimax       [v; u], components
//                 F1 = v + [xi'u - v]_+ / eps + chi1,  F2 = xi'u + chi2,
//                 F3 = chi3 - xi'u,                          xi_i = +-1
//   constrained   [v; u], objective F0 = v + [xi'u - v]_+ / eps and
//                 constraint F1 = chi - xi'u <= 0,           xi ~ N(mu, S)
//   hardcase      x in the unit Euclidean ball;
//                 F = sum_c 2 xi_c [c'x - (1 - delta)]_+ over cap centers c,
//                 xi_c fair {0,1} coins.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "saab/bounds.hpp"
#include "saab/error.hpp"
#include "saab/geometry.hpp"
#include "saab/keyvalue.hpp"
#include "saab/normal.hpp"
#include "saab/numeric.hpp"
#include "saab/random.hpp"
#include "saab/scenario_lp.hpp"
#include "saab/simplex_smooth.hpp"

namespace saab {

enum class ProblemKind { kQuadraticRisk, kGaussianVar, kCvar, kMinimaxCvar, kConstrainedCvar, kHardCase };

inline const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::kQuadraticRisk: return "quadratic";
    case ProblemKind::kGaussianVar: return "gaussian-var";
    case ProblemKind::kCvar: return "cvar";
    case ProblemKind::kMinimaxCvar: return "minimax";
    case ProblemKind::kConstrainedCvar: return "constrained";
    case ProblemKind::kHardCase: return "hardcase";
  }
  return "?";
}

inline ProblemKind parse_problem_kind(std::string_view s) {
  for (auto k : {ProblemKind::kQuadraticRisk, ProblemKind::kGaussianVar, ProblemKind::kCvar,
                 ProblemKind::kMinimaxCvar, ProblemKind::kConstrainedCvar, ProblemKind::kHardCase}) {
    if (s == to_string(k)) return k;
  }
  throw DomainError("unknown instance kind '" + std::string(s) +
                    "' (expected quadratic, gaussian-var, cvar, minimax, constrained or hardcase)");
}

struct QuadraticParams {
  double kappa0 = 0.1;
  double kappa1 = 0.9;
  Vector theta;  // Prob(xi_i = +1)
};

struct GaussianVarParams {
  double kappa0 = 0.9;
  double kappa1 = 0.1;
  Matrix sigma;  // covariance
  bool improved_m2 = true;

  // Largest standard deviation of a coordinate.
  double sigma_max() const { return std::sqrt(sigma.diagonal().maxCoeff()); }
};

struct CvarParams {
  double kappa0 = 0.1;
  double kappa1 = 0.9;
  double eps = 0.1;
  Vector theta;
  bool single_asset = false;  // n = 0: x' is the fixed scalar 1
};

struct MinimaxParams {
  double eps = 0.5;
  Vector theta;
  std::array<double, 3> chi{};
  double opt = 0.0;  // exact optimal value recorded at construction
};

struct ConstrainedParams {
  double eps = 0.1;
  double chi = 0.3;
  Vector mean;
  Matrix sigma;
  // Half-width of the v interval used where a bounded domain is needed.
  double v_bound = 10.0;

  // Largest coordinate variance (the relaxation uses this, not a std).
  double variance_max() const { return sigma.diagonal().maxCoeff(); }
  double std_max() const { return std::sqrt(variance_max()); }
};

struct HardCaseParams {
  double cap_angle = 0.125;
  double elevation = 0.0;  // 2 sin^2(cap_angle / 2)
  Matrix centers;          // one unit vector per row
};

using ProblemParams = std::variant<QuadraticParams, GaussianVarParams, CvarParams, MinimaxParams,
                                   ConstrainedParams, HardCaseParams>;

struct ProblemInstance {
  ProblemKind kind = ProblemKind::kQuadraticRisk;
  ProblemParams params;
  GeometrySpec geometry;
  MomentConstants constants;
  std::uint64_t seed = 0;

  template <class P>
  const P& as() const {
    const P* p = std::get_if<P>(&params);
    if (!p) throw DomainError(std::string("operation not available for instance kind ") + to_string(kind));
    return *p;
  }

  // Number of assets (ambient dimension for the hard case).
  int n() const {
    switch (kind) {
      case ProblemKind::kQuadraticRisk: return static_cast<int>(as<QuadraticParams>().theta.size());
      case ProblemKind::kGaussianVar: return static_cast<int>(as<GaussianVarParams>().sigma.rows());
      case ProblemKind::kCvar: {
        const auto& p = as<CvarParams>();
        return p.single_asset ? 0 : static_cast<int>(p.theta.size());
      }
      case ProblemKind::kMinimaxCvar: return static_cast<int>(as<MinimaxParams>().theta.size());
      case ProblemKind::kConstrainedCvar: return static_cast<int>(as<ConstrainedParams>().mean.size());
      case ProblemKind::kHardCase: return static_cast<int>(as<HardCaseParams>().centers.cols());
    }
    return 0;
  }

  int x_size() const { return geometry.vector_size(); }

  // Columns of a sample matrix.
  int xi_size() const {
    switch (kind) {
      case ProblemKind::kCvar: return static_cast<int>(as<CvarParams>().theta.size());
      case ProblemKind::kHardCase: return static_cast<int>(as<HardCaseParams>().centers.rows());
      default: return n();
    }
  }

  // 3 for minimax, 2 (objective, constraint) for constrained, else 1.
  int num_components() const {
    if (kind == ProblemKind::kMinimaxCvar) return 3;
    if (kind == ProblemKind::kConstrainedCvar) return 2;
    return 1;
  }

  bool bernoulli() const {
    return kind == ProblemKind::kQuadraticRisk || kind == ProblemKind::kCvar ||
           kind == ProblemKind::kMinimaxCvar;
  }
};

// ---------------------------------------------------------------------------
// Moment constants.

// sqrt(2 e^2 / (e^2 - 1)): E exp(Z^2 / (c sigma)^2) = e for Z ~ N(0, sigma^2).
inline double gaussian_orlicz_factor() {
  const double e2 = std::exp(2.0);
  return std::sqrt(2.0 * e2 / (e2 - 1.0));
}

inline MomentConstants constants_quadratic(double kappa0, double kappa1) {
  detail::require(kappa1 >= 0.0, "constants_quadratic: kappa1 must be nonnegative");
  if (kappa0 == 0.0 && kappa1 == 0.0) {
    throw DomainError("constants_quadratic: kappa0 = kappa1 = 0 gives a constant objective");
  }
  return {2.0 * std::fabs(kappa0) + 0.5 * kappa1, 2.0 * std::fabs(kappa0) + 2.0 * kappa1};
}

// Scale M with E exp(|xi|_inf^2 / M^2) <= e for zero-mean Gaussian xi in R^n
// whose coordinates have standard deviation at most sigma_bar.
inline double gaussian_sup_constant(double sigma_bar, int n) {
  detail::require(sigma_bar > 0.0, "gaussian_sup_constant: sigma_bar must be positive");
  detail::require(n >= 1, "gaussian_sup_constant: n must be at least 1");
  return sigma_bar * std::sqrt(2.0 * (2.0 + std::log(static_cast<double>(n))));
}

// Root t_n in (0, 1/(sqrt(2) sigma_max)) of n^(2 t^2 s^2) / (1 - 2 t^2 s^2) = e.
inline double gaussian_tn(double sigma_max, int n) {
  detail::require(sigma_max > 0.0, "gaussian_tn: sigma_max must be positive");
  detail::require(n >= 1, "gaussian_tn: n must be at least 1");
  const double ln = std::log(static_cast<double>(n));
  const double s2 = sigma_max * sigma_max;
  const auto g = [&](double t) {
    const double u = 2.0 * t * t * s2;
    return u * ln - std::log1p(-u) - 1.0;
  };
  const double hi = (1.0 - 1e-13) / (std::numbers::sqrt2 * sigma_max);
  return bisect(g, 0.0, hi, 1e-15 * hi);
}

inline MomentConstants constants_gaussian_var(double kappa0, double kappa1, double sigma_max, int n,
                                              bool improved) {
  detail::require(kappa1 >= 0.0, "constants_gaussian_var: kappa1 must be nonnegative");
  detail::require(sigma_max > 0.0, "constants_gaussian_var: sigma_max must be positive");
  const double a0 = std::fabs(kappa0);
  const double m1 = (gaussian_orlicz_factor() * a0 + std::numbers::sqrt2 * kappa1) * sigma_max;
  const double mean_abs = kappa1 * sigma_max * std::sqrt(2.0 / std::numbers::pi);
  const double sup = improved ? 1.0 / gaussian_tn(sigma_max, n) : gaussian_sup_constant(sigma_max, n);
  return {m1, (a0 + kappa1) * sup + mean_abs};
}

inline MomentConstants constants_cvar(double kappa0, double kappa1, double eps, int n) {
  detail::require(eps > 0.0 && eps < 1.0, "constants_cvar: eps must lie in (0,1)");
  detail::require(kappa0 >= 0.0 && kappa1 >= 0.0, "constants_cvar: kappa0, kappa1 must be nonnegative");
  const double c = kappa1 / eps;
  const double m1 = 2.0 * (kappa0 + c);
  if (n == 0) return {m1, c};
  return {m1, std::sqrt(c * c + 4.0 * (kappa0 + c) * (kappa0 + c))};
}

// Shared constants of the three minimax components (the CVaR one dominates).
inline MomentConstants constants_minimax(double eps) {
  detail::require(eps > 0.0 && eps < 1.0, "constants_minimax: eps must lie in (0,1)");
  return {std::max(2.0 / eps, 2.0), std::max(std::sqrt(5.0) / eps, 2.0)};
}

// Objective and constraint of the Gaussian constrained problem. The CVaR
// term is a 1-Lipschitz function of xi'u, whose Orlicz scale is at most
// (nu + sqrt(2/pi)) sigma after centering.
inline MomentConstants constants_constrained(const ConstrainedParams& p) {
  const int n = static_cast<int>(p.mean.size());
  const double sbar = p.std_max();
  const double m1 = sbar * (gaussian_orlicz_factor() + std::sqrt(2.0 / std::numbers::pi)) / p.eps;
  const double sup = gaussian_sup_constant(sbar, n);
  const double mu_inf = p.mean.cwiseAbs().maxCoeff();
  const double m2 = (1.0 + 2.0 * mu_inf + 2.0 * sup) / p.eps;
  return {m1, m2};
}

inline MomentConstants constants_hard_case(double elevation) { return {elevation, 1.0}; }

inline double hard_case_elevation(double cap_angle) {
  const double s = std::sin(0.5 * cap_angle);
  return 2.0 * s * s;
}

// ---------------------------------------------------------------------------
// Construction.

namespace detail {
inline void check_theta(const Vector& theta) {
  require(theta.size() >= 1, "instance needs at least one asset");
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    require(theta(i) >= 0.0 && theta(i) <= 1.0,
            "theta_" + std::to_string(i + 1) + " = " + format_double(theta(i)) + " outside [0,1]");
  }
}

inline void check_covariance(const Matrix& sigma) {
  require(sigma.rows() >= 1 && sigma.rows() == sigma.cols(), "covariance must be square");
  require(sigma.isApprox(sigma.transpose(), 0.0), "covariance must be symmetric");
  Eigen::LLT<Matrix> llt(sigma);
  require(llt.info() == Eigen::Success, "covariance must be positive definite");
}
}  // namespace detail

inline ProblemInstance make_quadratic_instance(double kappa0, double kappa1, const Vector& theta,
                                               std::uint64_t seed = 0) {
  detail::check_theta(theta);
  ProblemInstance inst;
  inst.kind = ProblemKind::kQuadraticRisk;
  inst.params = QuadraticParams{kappa0, kappa1, theta};
  inst.geometry = simplex_geometry(static_cast<int>(theta.size()));
  inst.constants = constants_quadratic(kappa0, kappa1);
  inst.seed = seed;
  return inst;
}

inline ProblemInstance draw_quadratic_instance(int n, double kappa0, double kappa1, Rng& rng) {
  detail::require(n >= 1, "quadratic instance: n must be at least 1");
  Vector theta(n);
  for (int i = 0; i < n; ++i) theta(i) = rng.uniform();
  return make_quadratic_instance(kappa0, kappa1, theta);
}

inline ProblemInstance make_gaussian_var_instance(double kappa0, double kappa1, const Matrix& sigma,
                                                  bool improved_m2 = true, std::uint64_t seed = 0) {
  detail::check_covariance(sigma);
  ProblemInstance inst;
  inst.kind = ProblemKind::kGaussianVar;
  GaussianVarParams p{kappa0, kappa1, sigma, improved_m2};
  const int n = static_cast<int>(sigma.rows());
  inst.constants = constants_gaussian_var(kappa0, kappa1, p.sigma_max(), n, improved_m2);
  inst.params = std::move(p);
  inst.geometry = simplex_geometry(n);
  inst.seed = seed;
  return inst;
}

// Diagonal covariance with variances uniform on [1, 6].
inline ProblemInstance draw_gaussian_var_instance(int n, double kappa0, double kappa1, bool improved_m2,
                                                  Rng& rng) {
  detail::require(n >= 1, "gaussian-var instance: n must be at least 1");
  Matrix sigma = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) sigma(i, i) = 1.0 + 5.0 * rng.uniform();
  return make_gaussian_var_instance(kappa0, kappa1, sigma, improved_m2);
}

inline ProblemInstance make_cvar_instance(double kappa0, double kappa1, double eps, const Vector& theta,
                                          bool single_asset = false, std::uint64_t seed = 0) {
  detail::check_theta(theta);
  detail::require(kappa0 >= 0.0 && kappa0 <= 1.0 && kappa1 >= 0.0 && kappa1 <= 1.0,
                  "cvar instance: kappa0, kappa1 must lie in [0,1]");
  detail::require(!single_asset || theta.size() == 1, "cvar instance: single asset needs one theta");
  ProblemInstance inst;
  inst.kind = ProblemKind::kCvar;
  const int n = single_asset ? 0 : static_cast<int>(theta.size());
  inst.params = CvarParams{kappa0, kappa1, eps, theta, single_asset};
  inst.geometry = mixed_geometry(n);
  inst.constants = constants_cvar(kappa0, kappa1, eps, n);
  inst.seed = seed;
  return inst;
}

// n = 0 draws the single-asset problem.
inline ProblemInstance draw_cvar_instance(int n, double kappa0, double kappa1, double eps, Rng& rng) {
  detail::require(n >= 0, "cvar instance: n must be nonnegative");
  const int m = std::max(n, 1);
  Vector theta(m);
  for (int i = 0; i < m; ++i) theta(i) = rng.uniform();
  return make_cvar_instance(kappa0, kappa1, eps, theta, n == 0);
}

inline ProblemInstance make_minimax_instance(double eps, const Vector& theta,
                                             const std::array<double, 3>& chi, double opt,
                                             std::uint64_t seed = 0) {
  detail::check_theta(theta);
  ProblemInstance inst;
  inst.kind = ProblemKind::kMinimaxCvar;
  inst.params = MinimaxParams{eps, theta, chi, opt};
  inst.geometry = mixed_geometry(static_cast<int>(theta.size()));
  inst.constants = constants_minimax(eps);
  inst.seed = seed;
  return inst;
}

// Offsets chi making all three components equal and active at the optimum:
// with u* minimizing the CVaR term alone (value c*), chi = (0, c* - mu'u*,
// c* + mu'u*) puts f1 = f2 = f3 = c* at x*, and max_i f_i >= f1 >= c*
// everywhere, so Opt = c*.
inline ProblemInstance build_minimax_instance_from_theta(double eps, const Vector& theta,
                                                         std::uint64_t seed = 0) {
  detail::check_theta(theta);
  const ScenarioSet set = bernoulli_scenarios(theta);
  const ScenarioSolution sol = solve_cvar(0.0, 1.0, eps, set);
  const Vector u = sol.solution.x.tail(theta.size());
  const double mu_u = (2.0 * theta.array() - 1.0).matrix().dot(u);
  const double c = sol.solution.value;
  return make_minimax_instance(eps, theta, {0.0, c - mu_u, c + mu_u}, c, seed);
}

inline ProblemInstance build_minimax_instance(int n, double eps, std::uint64_t seed) {
  detail::require(n >= 1, "minimax instance: n must be at least 1");
  Rng rng(seed, stream_id(0, StreamPurpose::kInstance));
  Vector theta(n);
  for (int i = 0; i < n; ++i) theta(i) = rng.uniform();
  return build_minimax_instance_from_theta(eps, theta, seed);
}

inline ProblemInstance make_constrained_instance(const ConstrainedParams& p, std::uint64_t seed = 0) {
  detail::require(p.eps > 0.0 && p.eps < 1.0, "constrained instance: eps must lie in (0,1)");
  detail::require(p.mean.size() >= 1 && p.mean.size() == p.sigma.rows(),
                  "constrained instance: mean and covariance sizes differ");
  detail::check_covariance(p.sigma);
  detail::require(p.v_bound > 0.0, "constrained instance: v_bound must be positive");
  ProblemInstance inst;
  inst.kind = ProblemKind::kConstrainedCvar;
  inst.params = p;
  inst.geometry = mixed_geometry(static_cast<int>(p.mean.size()));
  inst.constants = constants_constrained(p);
  inst.seed = seed;
  return inst;
}

// The two-asset toy problem: mu = (0.1, 0.5), Sigma = diag(1, 4).
inline ProblemInstance build_constrained_instance(double eps = 0.1, double chi = 0.3) {
  ConstrainedParams p;
  p.eps = eps;
  p.chi = chi;
  p.mean = Vector(2);
  p.mean << 0.1, 0.5;
  p.sigma = Matrix::Zero(2, 2);
  p.sigma.diagonal() << 1.0, 4.0;
  return make_constrained_instance(p);
}

// Relaxation delta = q(1 - eps/n) sigma2_max / sqrt(N) of the constraint
// right-hand side, sigma2_max being the largest variance.
inline double constrained_relaxation(const ProblemInstance& inst, std::int64_t N) {
  const auto& p = inst.as<ConstrainedParams>();
  detail::require(N >= 1, "constrained_relaxation: N must be positive");
  const double n = static_cast<double>(p.mean.size());
  return normal_quantile(1.0 - p.eps / n) * p.variance_max() / std::sqrt(static_cast<double>(N));
}

// Prob{mean of the best-mean coordinate < chi}: the sample problem is
// infeasible when this coordinate fails to reach chi.
inline double constrained_infeasibility_probability(const ProblemInstance& inst, std::int64_t N) {
  const auto& p = inst.as<ConstrainedParams>();
  Eigen::Index j;
  p.mean.maxCoeff(&j);
  const double sd = std::sqrt(p.sigma(j, j));
  return normal_cdf((p.chi - p.mean(j)) * std::sqrt(static_cast<double>(N)) / sd);
}

// Exact infeasibility probability for independent coordinates: the sample
// problem is infeasible iff every coordinate mean falls below chi.
inline double constrained_infeasibility_probability_exact(const ProblemInstance& inst, std::int64_t N) {
  const auto& p = inst.as<ConstrainedParams>();
  const Matrix off = p.sigma - Matrix(p.sigma.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() != 0.0) {
    throw CapabilityError("exact infeasibility probability needs a diagonal covariance");
  }
  double prob = 1.0;
  for (Eigen::Index i = 0; i < p.mean.size(); ++i) {
    prob *= normal_cdf((p.chi - p.mean(i)) * std::sqrt(static_cast<double>(N)) / std::sqrt(p.sigma(i, i)));
  }
  return prob;
}

// Greedy packing of unit vectors with pairwise angles above 2 * cap_angle,
// so that the caps {x in B2 : c'x >= cos(cap_angle)} are disjoint.
inline ProblemInstance build_hard_case(int n, std::uint64_t seed, double cap_angle = 0.125,
                                       int max_centers = 4096) {
  detail::require(n >= 3, "hard case needs n >= 3, got n = " + std::to_string(n));
  detail::require(cap_angle > 0.0 && cap_angle < std::numbers::pi / 4, "hard case: cap angle out of range");
  const int target = n < 30 ? std::min(1 << n, max_centers) : max_centers;
  const double max_dot = std::cos(2.0 * cap_angle);
  constexpr int kStall = 20000;
  Rng rng(seed, stream_id(0, StreamPurpose::kInstance));
  Matrix centers(target, n);
  int count = 0;
  int misses = 0;
  Vector c(n);
  while (count < target && misses < kStall) {
    for (int i = 0; i < n; ++i) c(i) = rng.normal();
    const double nc = c.norm();
    if (!(nc > 0.0)) continue;
    c /= nc;
    bool ok = true;
    for (int j = 0; j < count && ok; ++j) ok = centers.row(j).dot(c) < max_dot;
    if (ok) {
      centers.row(count++) = c.transpose();
      misses = 0;
    } else {
      ++misses;
    }
  }
  if (count < 2) throw NumericError("hard case: cap packing stalled before two centers");
  ProblemInstance inst;
  inst.kind = ProblemKind::kHardCase;
  const double delta = hard_case_elevation(cap_angle);
  inst.params = HardCaseParams{cap_angle, delta, centers.topRows(count)};
  inst.geometry = euclidean_geometry(n);
  inst.constants = constants_hard_case(delta);
  inst.seed = seed;
  return inst;
}

// ---------------------------------------------------------------------------
// Sampling.

struct Sample {
  Matrix xi;  // N x xi_size
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::int64_t N = 0;
};

namespace detail {
inline Matrix cholesky_factor(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw DomainError("covariance is not positive definite");
  return llt.matrixL();
}

inline Matrix sample_bernoulli(const Vector& theta, std::int64_t N, Rng& rng) {
  Matrix xi(N, theta.size());
  for (std::int64_t t = 0; t < N; ++t) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) xi(t, i) = rng.uniform() < theta(i) ? 1.0 : -1.0;
  }
  return xi;
}

inline Matrix sample_gaussian(const Vector& mean, const Matrix& sigma, std::int64_t N, Rng& rng) {
  const Matrix L = cholesky_factor(sigma);
  const Eigen::Index n = mean.size();
  Matrix z(n, N);
  for (std::int64_t t = 0; t < N; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) z(i, t) = rng.normal();
  }
  Matrix xi = (L.triangularView<Eigen::Lower>() * z).transpose();
  xi.rowwise() += mean.transpose();
  return xi;
}
}  // namespace detail

inline Matrix sample_matrix(const ProblemInstance& inst, std::int64_t N, Rng& rng) {
  detail::require(N >= 1, "sample: N must be at least 1");
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk:
      return detail::sample_bernoulli(inst.as<QuadraticParams>().theta, N, rng);
    case ProblemKind::kCvar: return detail::sample_bernoulli(inst.as<CvarParams>().theta, N, rng);
    case ProblemKind::kMinimaxCvar: return detail::sample_bernoulli(inst.as<MinimaxParams>().theta, N, rng);
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      return detail::sample_gaussian(Vector::Zero(p.sigma.rows()), p.sigma, N, rng);
    }
    case ProblemKind::kConstrainedCvar: {
      const auto& p = inst.as<ConstrainedParams>();
      return detail::sample_gaussian(p.mean, p.sigma, N, rng);
    }
    case ProblemKind::kHardCase: {
      const Eigen::Index k = inst.as<HardCaseParams>().centers.rows();
      Matrix xi(N, k);
      for (std::int64_t t = 0; t < N; ++t) {
        for (Eigen::Index c = 0; c < k; ++c) xi(t, c) = (rng.next_u32() & 1U) ? 1.0 : 0.0;
      }
      return xi;
    }
  }
  throw DomainError("sample: unknown instance kind");
}

inline Sample sample(const ProblemInstance& inst, std::int64_t N, std::uint64_t seed,
                     std::uint64_t stream = 0) {
  Rng rng(seed, stream);
  return {sample_matrix(inst, N, rng), seed, stream, N};
}

// ---------------------------------------------------------------------------
// Scenario-level evaluation.

namespace detail {
inline void check_x(const ProblemInstance& inst, const Vector& x) {
  if (x.size() != inst.x_size()) {
    throw DomainError("decision vector has size " + std::to_string(x.size()) + ", instance expects " +
                      std::to_string(inst.x_size()));
  }
}
inline void check_xi(const ProblemInstance& inst, const Matrix& xi) {
  if (xi.cols() != inst.xi_size()) {
    throw DomainError("sample has " + std::to_string(xi.cols()) + " columns, instance expects " +
                      std::to_string(inst.xi_size()));
  }
}
inline Vector bernoulli_mean(const Vector& theta) { return (2.0 * theta.array() - 1.0).matrix(); }
}  // namespace detail

// Values F_i(x, xi_t): one row per scenario, one column per component.
inline Matrix scenario_values(const ProblemInstance& inst, const Vector& x, const Matrix& xi) {
  detail::check_x(inst, x);
  detail::check_xi(inst, xi);
  const Eigen::Index N = xi.rows();
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk: {
      const auto& p = inst.as<QuadraticParams>();
      const Vector r = xi * x;
      return (p.kappa0 * r.array() + 0.5 * p.kappa1 * r.array().square()).matrix();
    }
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      const Vector r = xi * x;
      return (p.kappa0 * r.array() + p.kappa1 * r.array().abs()).matrix();
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      const Vector r = xi * x.tail(x.size() - 1);
      return (p.kappa0 * r.array() + p.kappa1 * (x(0) + (r.array() - x(0)).max(0.0) / p.eps)).matrix();
    }
    case ProblemKind::kMinimaxCvar: {
      const auto& p = inst.as<MinimaxParams>();
      const Vector r = xi * x.tail(x.size() - 1);
      Matrix out(N, 3);
      out.col(0) = (x(0) + (r.array() - x(0)).max(0.0) / p.eps + p.chi[0]).matrix();
      out.col(1) = (r.array() + p.chi[1]).matrix();
      out.col(2) = (p.chi[2] - r.array()).matrix();
      return out;
    }
    case ProblemKind::kConstrainedCvar: {
      const auto& p = inst.as<ConstrainedParams>();
      const Vector r = xi * x.tail(x.size() - 1);
      Matrix out(N, 2);
      out.col(0) = (x(0) + (r.array() - x(0)).max(0.0) / p.eps).matrix();
      out.col(1) = (p.chi - r.array()).matrix();
      return out;
    }
    case ProblemKind::kHardCase: {
      const auto& p = inst.as<HardCaseParams>();
      const Vector g = ((p.centers * x).array() - (1.0 - p.elevation)).max(0.0).matrix();
      return 2.0 * (xi * g);
    }
  }
  throw DomainError("scenario_values: unknown instance kind");
}

// Sample average of each component.
inline Vector saa_components(const ProblemInstance& inst, const Vector& x, const Matrix& xi) {
  const Matrix v = scenario_values(inst, x, xi);
  Vector out(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    out(j) = mean(std::span<const double>(v.col(j).data(), static_cast<std::size_t>(v.rows())));
  }
  return out;
}

// Sample objective: max of components for minimax, the objective component
// for the constrained problem.
inline double saa_objective(const ProblemInstance& inst, const Vector& x, const Matrix& xi) {
  const Vector c = saa_components(inst, x, xi);
  return inst.kind == ProblemKind::kMinimaxCvar ? c.maxCoeff() : c(0);
}

// Stochastic subgradient G(x, xi) of a single-objective instance.
inline Vector scenario_subgradient(const ProblemInstance& inst, const Vector& x,
                                   const Eigen::Ref<const Vector>& xi) {
  detail::check_x(inst, x);
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk: {
      const auto& p = inst.as<QuadraticParams>();
      return (p.kappa0 + p.kappa1 * xi.dot(x)) * xi;
    }
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      const double r = xi.dot(x);
      const double sgn = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      return (p.kappa0 + p.kappa1 * sgn) * xi;
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      const double r = xi.dot(x.tail(x.size() - 1));
      const double active = r - x(0) > 0.0 ? 1.0 : 0.0;
      Vector g(x.size());
      g(0) = p.kappa1 * (1.0 - active / p.eps);
      g.tail(x.size() - 1) = (p.kappa0 + p.kappa1 * active / p.eps) * xi;
      return g;
    }
    case ProblemKind::kHardCase: {
      const auto& p = inst.as<HardCaseParams>();
      const Vector dots = p.centers * x;
      Vector g = Vector::Zero(x.size());
      for (Eigen::Index c = 0; c < dots.size(); ++c) {
        if (dots(c) > 1.0 - p.elevation && xi(c) != 0.0) g += 2.0 * xi(c) * p.centers.row(c).transpose();
      }
      return g;
    }
    default:
      throw CapabilityError(std::string("stochastic subgradients are not defined for ") + to_string(inst.kind));
  }
}

// ---------------------------------------------------------------------------
// Exact expectations.

// Exact f_i(x) for every component.
inline Vector exact_components(const ProblemInstance& inst, const Vector& x) {
  detail::check_x(inst, x);
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk: {
      const auto& p = inst.as<QuadraticParams>();
      const Vector mu = detail::bernoulli_mean(p.theta);
      const double m = mu.dot(x);
      const double quad = m * m + ((1.0 - mu.array().square()) * x.array().square()).sum();
      return Vector::Constant(1, p.kappa0 * m + 0.5 * p.kappa1 * quad);
    }
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      const double sd = std::sqrt(std::max(0.0, x.dot(p.sigma * x)));
      return Vector::Constant(1, p.kappa1 * std::sqrt(2.0 / std::numbers::pi) * sd);
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      const Vector xp = x.tail(x.size() - 1);
      std::vector<double> terms;
      for_each_bernoulli_outcome(p.theta, [&](const Vector& xi, double pr) {
        terms.push_back(pr * std::max(0.0, xi.dot(xp) - x(0)));
      });
      const double mean_r = detail::bernoulli_mean(p.theta).dot(xp);
      return Vector::Constant(1, p.kappa0 * mean_r + p.kappa1 * (x(0) + pairwise_sum(terms) / p.eps));
    }
    case ProblemKind::kMinimaxCvar: {
      const auto& p = inst.as<MinimaxParams>();
      const Vector u = x.tail(x.size() - 1);
      std::vector<double> terms;
      for_each_bernoulli_outcome(p.theta, [&](const Vector& xi, double pr) {
        terms.push_back(pr * std::max(0.0, xi.dot(u) - x(0)));
      });
      const double m = detail::bernoulli_mean(p.theta).dot(u);
      Vector out(3);
      out << x(0) + pairwise_sum(terms) / p.eps + p.chi[0], m + p.chi[1], p.chi[2] - m;
      return out;
    }
    case ProblemKind::kConstrainedCvar: {
      const auto& p = inst.as<ConstrainedParams>();
      const Vector u = x.tail(x.size() - 1);
      const double m = p.mean.dot(u);
      const double s = std::sqrt(std::max(0.0, u.dot(p.sigma * u)));
      double excess;  // E[Z - v]_+ for Z ~ N(m, s^2)
      if (s > 0.0) {
        const double d = (m - x(0)) / s;
        excess = (m - x(0)) * normal_cdf(d) + s * normal_pdf(d);
      } else {
        excess = std::max(0.0, m - x(0));
      }
      Vector out(2);
      out << x(0) + excess / p.eps, p.chi - m;
      return out;
    }
    case ProblemKind::kHardCase: {
      const auto& p = inst.as<HardCaseParams>();
      return Vector::Constant(1, ((p.centers * x).array() - (1.0 - p.elevation)).max(0.0).sum());
    }
  }
  throw DomainError("exact_components: unknown instance kind");
}

// Exact objective: max of components for minimax, f0 for the constrained
// problem.
inline double exact_f(const ProblemInstance& inst, const Vector& x) {
  const Vector c = exact_components(inst, x);
  return inst.kind == ProblemKind::kMinimaxCvar ? c.maxCoeff() : c(0);
}

// g(x) = E G(x, xi) for the subgradient selection of scenario_subgradient.
inline Vector expected_subgradient(const ProblemInstance& inst, const Vector& x) {
  detail::check_x(inst, x);
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk: {
      const auto& p = inst.as<QuadraticParams>();
      const Vector mu = detail::bernoulli_mean(p.theta);
      const Vector vx = mu * mu.dot(x) + ((1.0 - mu.array().square()) * x.array()).matrix();
      return p.kappa0 * mu + p.kappa1 * vx;
    }
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      const double sd = std::sqrt(std::max(0.0, x.dot(p.sigma * x)));
      if (!(sd > 0.0)) return Vector::Zero(x.size());
      return p.kappa1 * std::sqrt(2.0 / std::numbers::pi) * (p.sigma * x) / sd;
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      Vector g = Vector::Zero(x.size());
      for_each_bernoulli_outcome(p.theta, [&](const Vector& xi, double pr) {
        g += pr * scenario_subgradient(inst, x, xi);
      });
      return g;
    }
    case ProblemKind::kHardCase: {
      const auto& p = inst.as<HardCaseParams>();
      const Vector dots = p.centers * x;
      Vector g = Vector::Zero(x.size());
      for (Eigen::Index c = 0; c < dots.size(); ++c) {
        if (dots(c) > 1.0 - p.elevation) g += p.centers.row(c).transpose();
      }
      return g;
    }
    default:
      throw CapabilityError(std::string("expected subgradients are not defined for ") + to_string(inst.kind));
  }
}

// Subgradients of every component, one column per component.
inline Matrix scenario_component_subgradients(const ProblemInstance& inst, const Vector& x,
                                              const Eigen::Ref<const Vector>& xi) {
  detail::check_x(inst, x);
  const Eigen::Index k = x.size();
  switch (inst.kind) {
    case ProblemKind::kMinimaxCvar:
    case ProblemKind::kConstrainedCvar: {
      const bool minimax = inst.kind == ProblemKind::kMinimaxCvar;
      const double eps = minimax ? inst.as<MinimaxParams>().eps : inst.as<ConstrainedParams>().eps;
      const double active = xi.dot(x.tail(k - 1)) - x(0) > 0.0 ? 1.0 : 0.0;
      Matrix g = Matrix::Zero(k, minimax ? 3 : 2);
      g(0, 0) = 1.0 - active / eps;
      g.col(0).tail(k - 1) = (active / eps) * xi;
      g.col(1).tail(k - 1) = minimax ? Vector(xi) : Vector(-xi);
      if (minimax) g.col(2).tail(k - 1) = -xi;
      return g;
    }
    default:
      return scenario_subgradient(inst, x, xi);
  }
}

// Expected subgradients of every component, one column per component.
inline Matrix expected_component_subgradients(const ProblemInstance& inst, const Vector& x) {
  detail::check_x(inst, x);
  const Eigen::Index k = x.size();
  switch (inst.kind) {
    case ProblemKind::kMinimaxCvar: {
      const auto& p = inst.as<MinimaxParams>();
      Matrix g = Matrix::Zero(k, 3);
      for_each_bernoulli_outcome(p.theta, [&](const Vector& xi, double pr) {
        g += pr * scenario_component_subgradients(inst, x, xi);
      });
      return g;
    }
    case ProblemKind::kConstrainedCvar: {
      const auto& p = inst.as<ConstrainedParams>();
      const Vector u = x.tail(k - 1);
      const double m = p.mean.dot(u);
      const Vector su = p.sigma * u;
      const double s = std::sqrt(std::max(0.0, u.dot(su)));
      double tail;   // Prob{xi'u > v}
      Vector first;  // E[xi 1{xi'u > v}]
      if (s > 0.0) {
        const double d = (x(0) - m) / s;
        tail = normal_cdf(-d);
        first = p.mean * tail + su * (normal_pdf(d) / s);
      } else {
        tail = m > x(0) ? 1.0 : 0.0;
        first = p.mean * tail;
      }
      Matrix g = Matrix::Zero(k, 2);
      g(0, 0) = 1.0 - tail / p.eps;
      g.col(0).tail(k - 1) = first / p.eps;
      g.col(1).tail(k - 1) = -p.mean;
      return g;
    }
    default:
      return expected_subgradient(inst, x);
  }
}

// Monte Carlo estimates of E exp((F - f)^2 / M1^2) and
// E exp(|G - g|_*^2 / M2^2) at x; both are at most e when the instance's
// constants are valid. For several components the largest estimate is
// reported.
struct MomentCheck {
  double value_mean = 0.0;
  double value_se = 0.0;
  double grad_mean = 0.0;
  double grad_se = 0.0;
};

inline MomentCheck moment_check(const ProblemInstance& inst, const Vector& x, std::int64_t draws,
                                Rng& rng) {
  const Vector f = exact_components(inst, x);
  const Matrix g = expected_component_subgradients(inst, x);
  const Matrix xi = sample_matrix(inst, draws, rng);
  const Matrix F = scenario_values(inst, x, xi);
  const auto m = static_cast<Eigen::Index>(f.size());
  const double m1 = inst.constants.m1;
  const double m2 = inst.constants.m2;
  std::vector<double> vals(static_cast<std::size_t>(draws));
  std::vector<std::vector<double>> grads(static_cast<std::size_t>(m), vals);
  MomentCheck out;
  const auto summarize = [&](const std::vector<double>& v, double& mean_out, double& se_out) {
    const double mu = mean(v);
    double ss = 0.0;
    for (double e : v) ss += (e - mu) * (e - mu);
    const double se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    if (mu > mean_out) {
      mean_out = mu;
      se_out = se;
    }
  };
  for (Eigen::Index j = 0; j < m; ++j) {
    for (std::int64_t t = 0; t < draws; ++t) {
      const double d = (F(t, j) - f(j)) / m1;
      vals[static_cast<std::size_t>(t)] = std::exp(d * d);
    }
    summarize(vals, out.value_mean, out.value_se);
  }
  for (std::int64_t t = 0; t < draws; ++t) {
    const Matrix G = scenario_component_subgradients(inst, x, xi.row(t).transpose());
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = dual_norm(inst.geometry, G.col(j) - g.col(j)) / m2;
      grads[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)] = std::exp(d * d);
    }
  }
  for (const auto& v : grads) summarize(v, out.grad_mean, out.grad_se);
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth.

// min_v v + E[Z - v]_+ / eps for Z ~ N(m, s^2).
inline double gaussian_cvar(double m, double s, double eps) {
  return m + s * normal_pdf(normal_quantile(1.0 - eps)) / eps;
}

namespace detail {
// Minimizes phi(u1) over u = (u1, 1 - u1) with mean'u >= rhs; returns u1.
inline double two_asset_argmin(const ConstrainedParams& p, double rhs,
                               const std::function<double(const Vector&)>& phi) {
  if (p.mean.size() != 2) throw CapabilityError("closed-form ground truth needs two assets");
  // mean'u = m2 + (m1 - m2) u1 >= rhs
  double lo = 0.0;
  double hi = 1.0;
  const double slope = p.mean(0) - p.mean(1);
  const double need = rhs - p.mean(1);
  if (slope > 0.0) lo = std::max(lo, need / slope);
  else if (slope < 0.0) hi = std::min(hi, need / slope);
  else if (need > 0.0) lo = 2.0;
  if (lo > hi) throw DomainError("constrained problem is infeasible for this right-hand side");
  const auto at = [&](double u1) {
    Vector u(2);
    u << u1, 1.0 - u1;
    return phi(u);
  };
  const double u1 = golden_section_min(at, lo, hi, 1e-13);
  // The minimum may sit on an end of the interval.
  double best = u1;
  for (double c : {lo, hi}) {
    if (at(c) < at(best)) best = c;
  }
  return best;
}
}  // namespace detail

// Solution of the constrained problem with right-hand side rhs (chi by
// default), by a one-dimensional search over the two-asset simplex.
inline SolveResult constrained_true_solution(const ProblemInstance& inst, double rhs) {
  const auto& p = inst.as<ConstrainedParams>();
  const auto cvar_at = [&](const Vector& u) {
    return gaussian_cvar(p.mean.dot(u), std::sqrt(u.dot(p.sigma * u)), p.eps);
  };
  const double u1 = detail::two_asset_argmin(p, rhs, cvar_at);
  Vector x(3);
  x << 0.0, u1, 1.0 - u1;
  const Vector u = x.tail(2);
  x(0) = p.mean.dot(u) + std::sqrt(u.dot(p.sigma * u)) * normal_quantile(1.0 - p.eps);
  return {x, cvar_at(u), 1e-10, Certificate::kFwGap, 0};
}

// Phi(r) = min_u max(min_v f0(u, v) - r, chi - mu'u) on the two-asset toy
// problem.
inline double constrained_phi(const ProblemInstance& inst, double r) {
  const auto& p = inst.as<ConstrainedParams>();
  const auto h = [&](const Vector& u) {
    const double m = p.mean.dot(u);
    return std::max(gaussian_cvar(m, std::sqrt(u.dot(p.sigma * u)), p.eps) - r, p.chi - m);
  };
  const double u1 = detail::two_asset_argmin(p, -kInf, h);
  Vector u(2);
  u << u1, 1.0 - u1;
  return h(u);
}

struct SolveOptions {
  double tol = 1e-8;
  LpForm form = LpForm::kAuto;
};

// Exact optimal solution of the underlying stochastic problem.
inline SolveResult true_solution(const ProblemInstance& inst, const SolveOptions& opt = {}) {
  LpOptions lpo;
  lpo.tol = std::min(lpo.tol, opt.tol);
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk: {
      const auto& p = inst.as<QuadraticParams>();
      const Vector mu = detail::bernoulli_mean(p.theta);
      QuadraticObjective f;
      f.linear = p.kappa0 * mu;
      Matrix V = mu * mu.transpose();
      V.diagonal() = Vector::Ones(mu.size());
      f.quad = p.kappa1 * V;
      SmoothOptions so;
      so.tol = opt.tol * 1e-2;
      return solve_simplex_smooth(f, inst.geometry, so);
    }
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      const double scale = p.kappa1 * std::sqrt(2.0 / std::numbers::pi);
      const Matrix off = p.sigma - Matrix(p.sigma.diagonal().asDiagonal());
      if (off.cwiseAbs().maxCoeff() == 0.0) {
        const Vector inv = p.sigma.diagonal().cwiseInverse();
        return {inv / inv.sum(), scale / std::sqrt(inv.sum()), 0.0, Certificate::kFwGap, 0};
      }
      QuadraticObjective f;
      f.linear = Vector::Zero(p.sigma.rows());
      f.quad = 2.0 * p.sigma;
      SmoothOptions so;
      so.tol = opt.tol * 1e-2;
      SolveResult r = solve_simplex_smooth(f, inst.geometry, so);
      const double v = std::sqrt(std::max(r.value, 0.0));
      r.gap = v > 0.0 ? scale * r.gap / (2.0 * v) : scale * std::sqrt(r.gap);
      r.value = scale * v;
      return r;
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      const ScenarioSet set = bernoulli_scenarios(p.theta);
      return solve_cvar(p.kappa0, p.kappa1, p.eps, set, p.single_asset, opt.form, lpo).solution;
    }
    case ProblemKind::kMinimaxCvar: {
      const auto& p = inst.as<MinimaxParams>();
      return solve_minimax(p.eps, p.chi, bernoulli_scenarios(p.theta), -1.0, 1.0, lpo).solution;
    }
    case ProblemKind::kConstrainedCvar:
      return constrained_true_solution(inst, inst.as<ConstrainedParams>().chi);
    case ProblemKind::kHardCase:
      // f >= 0 and f(0) = 0.
      return {Vector::Zero(inst.x_size()), 0.0, 0.0, Certificate::kDualPair, 0};
  }
  throw DomainError("true_solution: unknown instance kind");
}

// Ground-truth optimal value. The minimax value recorded at construction
// is returned directly.
inline double true_opt(const ProblemInstance& inst, const SolveOptions& opt = {}) {
  if (inst.kind == ProblemKind::kMinimaxCvar) return inst.as<MinimaxParams>().opt;
  return true_solution(inst, opt).value;
}

// ---------------------------------------------------------------------------
// Serialization.

inline std::string to_key_value(const ProblemInstance& inst) {
  std::string out;
  const auto put = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  const auto num = [&](const std::string& k, double v) { put(k, format_double(v)); };
  put("kind", to_string(inst.kind));
  put("seed", std::to_string(inst.seed));
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, QuadraticParams>) {
          num("kappa0", p.kappa0);
          num("kappa1", p.kappa1);
          put("theta", format_vector(p.theta));
        } else if constexpr (std::is_same_v<P, GaussianVarParams>) {
          num("kappa0", p.kappa0);
          num("kappa1", p.kappa1);
          put("sigma", format_matrix(p.sigma));
          put("improved_m2", p.improved_m2 ? "1" : "0");
        } else if constexpr (std::is_same_v<P, CvarParams>) {
          num("kappa0", p.kappa0);
          num("kappa1", p.kappa1);
          num("eps", p.eps);
          put("theta", format_vector(p.theta));
          put("single_asset", p.single_asset ? "1" : "0");
        } else if constexpr (std::is_same_v<P, MinimaxParams>) {
          num("eps", p.eps);
          put("theta", format_vector(p.theta));
          put("chi", format_vector(Eigen::Map<const Vector>(p.chi.data(), 3)));
          num("opt", p.opt);
        } else if constexpr (std::is_same_v<P, ConstrainedParams>) {
          num("eps", p.eps);
          num("chi", p.chi);
          put("mean", format_vector(p.mean));
          put("sigma", format_matrix(p.sigma));
          num("v_bound", p.v_bound);
        } else if constexpr (std::is_same_v<P, HardCaseParams>) {
          num("cap_angle", p.cap_angle);
          num("elevation", p.elevation);
          put("centers", format_matrix(p.centers));
        }
      },
      inst.params);
  num("m1", inst.constants.m1);
  num("m2", inst.constants.m2);
  return out;
}

// Inverse of to_key_value. The stored constants take precedence over the
// formulas, so hand-edited constants are honored.
inline ProblemInstance parse_instance(const std::string& text) {
  KeyValueRecord rec = KeyValueRecord::parse(text);
  const ProblemKind kind = parse_problem_kind(rec.get("kind"));
  const std::uint64_t seed = rec.get_u64("seed");
  ProblemInstance inst;
  switch (kind) {
    case ProblemKind::kQuadraticRisk: {
      const double k0 = rec.get_double("kappa0");
      const double k1 = rec.get_double("kappa1");
      inst = make_quadratic_instance(k0, k1, rec.get_vector("theta"), seed);
      break;
    }
    case ProblemKind::kGaussianVar: {
      const double k0 = rec.get_double("kappa0");
      const double k1 = rec.get_double("kappa1");
      const Matrix sigma = rec.get_matrix("sigma");
      inst = make_gaussian_var_instance(k0, k1, sigma, rec.get_bool("improved_m2"), seed);
      break;
    }
    case ProblemKind::kCvar: {
      const double k0 = rec.get_double("kappa0");
      const double k1 = rec.get_double("kappa1");
      const double eps = rec.get_double("eps");
      const Vector theta = rec.get_vector("theta");
      inst = make_cvar_instance(k0, k1, eps, theta, rec.get_bool("single_asset"), seed);
      break;
    }
    case ProblemKind::kMinimaxCvar: {
      const double eps = rec.get_double("eps");
      const Vector theta = rec.get_vector("theta");
      const Vector chi = rec.get_vector("chi");
      detail::require(chi.size() == 3, "minimax instance needs three chi offsets");
      inst = make_minimax_instance(eps, theta, {chi(0), chi(1), chi(2)}, rec.get_double("opt"), seed);
      break;
    }
    case ProblemKind::kConstrainedCvar: {
      ConstrainedParams p;
      p.eps = rec.get_double("eps");
      p.chi = rec.get_double("chi");
      p.mean = rec.get_vector("mean");
      p.sigma = rec.get_matrix("sigma");
      p.v_bound = rec.get_double("v_bound");
      inst = make_constrained_instance(p, seed);
      break;
    }
    case ProblemKind::kHardCase: {
      HardCaseParams p;
      p.cap_angle = rec.get_double("cap_angle");
      p.elevation = rec.get_double("elevation");
      p.centers = rec.get_matrix("centers");
      detail::require(p.centers.rows() >= 2 && p.centers.cols() >= 3, "hard case needs >= 2 centers, n >= 3");
      inst.kind = kind;
      inst.geometry = euclidean_geometry(static_cast<int>(p.centers.cols()));
      inst.params = std::move(p);
      inst.seed = seed;
      break;
    }
  }
  inst.constants.m1 = rec.get_double("m1");
  inst.constants.m2 = rec.get_double("m2");
  rec.finish();
  return inst;
}

}  // namespace saab
