// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Linear-programming forms of the piecewise-linear stochastic problems over
// a weighted scenario set. The same builders serve the empirical problems
// (weights 1/N, duplicates optionally merged) and the exact-distribution
// problems (all Bernoulli outcomes weighted by their probabilities).
//
// Decision layouts: the portfolio problems use x on the simplex; the CVaR
// family uses [x0; x'] where x0 is the value-at-risk variable (called v in
// the minimax and constrained problems). In every primal LP built here the
// decision block occupies the first variables.
//
// For many scenarios the primal LP has one row per scenario, which the dense
// simplex cannot afford. The dual forms swap the roles: one row per asset,
// one bounded column per scenario, and the decision is read off the row
// multipliers.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "saab/error.hpp"
#include "saab/lp.hpp"
#include "saab/numeric.hpp"

namespace saab {

struct ScenarioSet {
  Matrix xi;      // one scenario per row
  Vector weight;  // nonnegative, sums to one

  int size() const { return static_cast<int>(xi.rows()); }
  int dimension() const { return static_cast<int>(xi.cols()); }
  Vector mean() const { return xi.transpose() * weight; }
};

// Largest n for which all 2^n Bernoulli outcomes are enumerated.
inline constexpr int kMaxEnumerationDim = 20;
// Largest n for which the outcomes are materialized as an LP scenario set.
inline constexpr int kMaxScenarioSetDim = 16;

// Calls visit(xi, p) for every outcome of independent {-1,+1} entries with
// Prob(xi_i = +1) = theta_i. Outcomes of probability zero are skipped.
inline void for_each_bernoulli_outcome(const Vector& theta,
                                       const std::function<void(const Vector&, double)>& visit) {
  const int n = static_cast<int>(theta.size());
  if (n > kMaxEnumerationDim) {
    throw CapabilityError("exact enumeration over 2^" + std::to_string(n) +
                          " outcomes is not supported (limit n <= " +
                          std::to_string(kMaxEnumerationDim) + "); use Monte Carlo estimation");
  }
  Vector xi(n);
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t s = 0; s < count; ++s) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) {
      const bool up = (s >> i) & 1U;
      xi(i) = up ? 1.0 : -1.0;
      p *= up ? theta(i) : 1.0 - theta(i);
    }
    if (p > 0.0) visit(xi, p);
  }
}

inline ScenarioSet bernoulli_scenarios(const Vector& theta) {
  const int n = static_cast<int>(theta.size());
  if (n > kMaxScenarioSetDim) {
    throw CapabilityError("exact-distribution LP limited to n <= " +
                          std::to_string(kMaxScenarioSetDim) + ", got n = " + std::to_string(n));
  }
  std::vector<Vector> rows;
  std::vector<double> probs;
  for_each_bernoulli_outcome(theta, [&](const Vector& xi, double p) {
    rows.push_back(xi);
    probs.push_back(p);
  });
  ScenarioSet set;
  set.xi.resize(static_cast<Eigen::Index>(rows.size()), n);
  set.weight.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t s = 0; s < rows.size(); ++s) {
    set.xi.row(static_cast<Eigen::Index>(s)) = rows[s].transpose();
    set.weight(static_cast<Eigen::Index>(s)) = probs[s];
  }
  set.weight /= pairwise_sum(probs);
  return set;
}

// Uniform weights over the rows of a sample. With merge_duplicates, equal
// rows are collapsed into one scenario carrying their total weight (the
// merged rows come out in lexicographic order).
inline ScenarioSet empirical_scenarios(const Matrix& xi, bool merge_duplicates = false) {
  detail::require(xi.rows() >= 1, "empirical_scenarios: empty sample");
  const double inv = 1.0 / static_cast<double>(xi.rows());
  if (!merge_duplicates) return {xi, Vector::Constant(xi.rows(), inv)};
  std::map<std::vector<double>, int> counts;
  for (Eigen::Index t = 0; t < xi.rows(); ++t) {
    std::vector<double> key(static_cast<std::size_t>(xi.cols()));
    for (Eigen::Index i = 0; i < xi.cols(); ++i) key[static_cast<std::size_t>(i)] = xi(t, i);
    ++counts[key];
  }
  ScenarioSet set;
  set.xi.resize(static_cast<Eigen::Index>(counts.size()), xi.cols());
  set.weight.resize(static_cast<Eigen::Index>(counts.size()));
  Eigen::Index s = 0;
  for (const auto& [key, c] : counts) {
    for (Eigen::Index i = 0; i < xi.cols(); ++i) set.xi(s, i) = key[static_cast<std::size_t>(i)];
    set.weight(s) = c * inv;
    ++s;
  }
  return set;
}

// ---------------------------------------------------------------------------
// Objective values over a scenario set.

// kappa0 E xi'x + kappa1 E |xi'x|
inline double gaussian_var_value(double kappa0, double kappa1, const ScenarioSet& set,
                                 const Vector& x) {
  const Vector r = set.xi * x;
  return kappa0 * set.weight.dot(r) + kappa1 * set.weight.dot(r.cwiseAbs());
}

// kappa0 E xi'x' + kappa1 (x0 + E [xi'x' - x0]_+ / eps)
inline double cvar_value(double kappa0, double kappa1, double eps, const ScenarioSet& set,
                         const Vector& x) {
  const Vector r = set.xi * x.tail(x.size() - 1);
  const Vector excess = (r.array() - x(0)).cwiseMax(0.0).matrix();
  return kappa0 * set.weight.dot(r) + kappa1 * (x(0) + set.weight.dot(excess) / eps);
}

// Components [f1, f2, f3] of the three-term minimax problem at [v; u].
inline std::array<double, 3> minimax_components(double eps, const std::array<double, 3>& chi,
                                                const ScenarioSet& set, const Vector& x) {
  const Vector r = set.xi * x.tail(x.size() - 1);
  const Vector excess = (r.array() - x(0)).cwiseMax(0.0).matrix();
  const double m = set.weight.dot(r);
  return {x(0) + set.weight.dot(excess) / eps + chi[0], m + chi[1], chi[2] - m};
}

// ---------------------------------------------------------------------------
// Primal builders (decision block first).

inline LinearProgram gaussian_var_lp(double kappa0, double kappa1, const ScenarioSet& set) {
  const int n = set.dimension();
  const int S = set.size();
  LinearProgram lp = LinearProgram::with_variables(n + S);
  lp.cost.head(n) = kappa0 * set.mean();
  lp.cost.tail(S) = kappa1 * set.weight;
  lp.eq_matrix = Matrix::Zero(1, n + S);
  lp.eq_matrix.leftCols(n).setOnes();
  lp.eq_rhs = Vector::Ones(1);
  lp.ub_matrix = Matrix::Zero(2 * S, n + S);
  lp.ub_rhs = Vector::Zero(2 * S);
  for (int s = 0; s < S; ++s) {
    lp.ub_matrix.block(2 * s, 0, 1, n) = set.xi.row(s);
    lp.ub_matrix.block(2 * s + 1, 0, 1, n) = -set.xi.row(s);
    lp.ub_matrix(2 * s, n + s) = -1.0;
    lp.ub_matrix(2 * s + 1, n + s) = -1.0;
  }
  return lp;
}

// Variables [x0; x'; t]. single_asset fixes the lone x' entry at one.
inline LinearProgram cvar_lp(double kappa0, double kappa1, double eps, const ScenarioSet& set,
                             bool single_asset = false) {
  const int n = set.dimension();
  const int S = set.size();
  const int k = n + 1;
  LinearProgram lp = LinearProgram::with_variables(k + S);
  lp.lower(0) = -1.0;
  lp.upper(0) = 1.0;
  if (single_asset) {
    detail::require(n == 1, "cvar_lp: single-asset problem needs one scenario column");
    lp.lower(1) = lp.upper(1) = 1.0;
  }
  lp.cost(0) = kappa1;
  lp.cost.segment(1, n) = kappa0 * set.mean();
  lp.cost.tail(S) = (kappa1 / eps) * set.weight;
  lp.eq_matrix = Matrix::Zero(1, k + S);
  lp.eq_matrix.block(0, 1, 1, n).setOnes();
  lp.eq_rhs = Vector::Ones(1);
  lp.ub_matrix = Matrix::Zero(S, k + S);
  lp.ub_rhs = Vector::Zero(S);
  for (int s = 0; s < S; ++s) {
    lp.ub_matrix(s, 0) = -1.0;
    lp.ub_matrix.block(s, 1, 1, n) = set.xi.row(s);
    lp.ub_matrix(s, k + s) = -1.0;
  }
  return lp;
}

// Epigraph form of min max_i f_i over [v; u] with v in [v_lo, v_hi].
// Variables [v; u; t; s].
inline LinearProgram minimax_lp(double eps, const std::array<double, 3>& chi,
                                const ScenarioSet& set, double v_lo = -1.0, double v_hi = 1.0) {
  const int n = set.dimension();
  const int S = set.size();
  const int k = n + 1;
  const int cols = k + S + 1;
  const int epi = cols - 1;
  LinearProgram lp = LinearProgram::with_variables(cols);
  lp.lower(0) = v_lo;
  lp.upper(0) = v_hi;
  lp.lower(epi) = -kInf;
  lp.cost(epi) = 1.0;
  lp.eq_matrix = Matrix::Zero(1, cols);
  lp.eq_matrix.block(0, 1, 1, n).setOnes();
  lp.eq_rhs = Vector::Ones(1);
  lp.ub_matrix = Matrix::Zero(S + 3, cols);
  lp.ub_rhs = Vector::Zero(S + 3);
  for (int s = 0; s < S; ++s) {
    lp.ub_matrix(s, 0) = -1.0;
    lp.ub_matrix.block(s, 1, 1, n) = set.xi.row(s);
    lp.ub_matrix(s, k + s) = -1.0;
  }
  const Vector m = set.mean();
  lp.ub_matrix(S, 0) = 1.0;
  lp.ub_matrix.block(S, k, 1, S) = (set.weight / eps).transpose();
  lp.ub_matrix(S, epi) = -1.0;
  lp.ub_rhs(S) = -chi[0];
  lp.ub_matrix.block(S + 1, 1, 1, n) = m.transpose();
  lp.ub_matrix(S + 1, epi) = -1.0;
  lp.ub_rhs(S + 1) = -chi[1];
  lp.ub_matrix.block(S + 2, 1, 1, n) = -m.transpose();
  lp.ub_matrix(S + 2, epi) = -1.0;
  lp.ub_rhs(S + 2) = -chi[2];
  return lp;
}

// min v + E[xi'u - v]_+ / eps  s.t.  rhs - E xi'u <= 0, u in the simplex.
// Variables [v; u; t].
inline LinearProgram constrained_lp(double eps, double rhs, const ScenarioSet& set,
                                    double v_lo = -kInf, double v_hi = kInf) {
  const int n = set.dimension();
  const int S = set.size();
  const int k = n + 1;
  LinearProgram lp = LinearProgram::with_variables(k + S);
  lp.lower(0) = v_lo;
  lp.upper(0) = v_hi;
  lp.cost(0) = 1.0;
  lp.cost.tail(S) = set.weight / eps;
  lp.eq_matrix = Matrix::Zero(1, k + S);
  lp.eq_matrix.block(0, 1, 1, n).setOnes();
  lp.eq_rhs = Vector::Ones(1);
  lp.ub_matrix = Matrix::Zero(S + 1, k + S);
  lp.ub_rhs = Vector::Zero(S + 1);
  for (int s = 0; s < S; ++s) {
    lp.ub_matrix(s, 0) = -1.0;
    lp.ub_matrix.block(s, 1, 1, n) = set.xi.row(s);
    lp.ub_matrix(s, k + s) = -1.0;
  }
  lp.ub_matrix.block(S, 1, 1, n) = -set.mean().transpose();
  lp.ub_rhs(S) = -rhs;
  return lp;
}

// ---------------------------------------------------------------------------
// Dual (scenario-column) builders.

// max_{omega in [-1,1]^S} min_i [kappa0 m_i + kappa1 sum_s w_s xi_si omega_s],
// written as min -z. Variables [z; omega]; x_i is minus the multiplier of row i.
inline LinearProgram gaussian_var_dual_lp(double kappa0, double kappa1, const ScenarioSet& set) {
  const int n = set.dimension();
  const int S = set.size();
  LinearProgram lp = LinearProgram::with_variables(1 + S);
  lp.lower(0) = -kInf;
  lp.lower.tail(S).setConstant(-1.0);
  lp.upper.tail(S).setConstant(1.0);
  lp.cost(0) = -1.0;
  lp.ub_matrix = Matrix::Zero(n, 1 + S);
  lp.ub_matrix.col(0).setOnes();
  lp.ub_matrix.rightCols(S) = -kappa1 * (set.xi.array().colwise() * set.weight.array()).transpose();
  lp.ub_rhs = kappa0 * set.mean();
  return lp;
}

// max_{pi in [0,1]^S} min_i [kappa0 m_i + c sum_s w_s xi_si pi_s]
//                      - |kappa1 - c sum_s w_s pi_s|,   c = kappa1 / eps,
// written as min -z + a. Variables [z; a; pi]. Rows 0..n-1 give x', rows n
// and n+1 give x0 = y_n - y_{n+1}.
inline LinearProgram cvar_dual_lp(double kappa0, double kappa1, double eps,
                                  const ScenarioSet& set) {
  const int n = set.dimension();
  const int S = set.size();
  const double c = kappa1 / eps;
  LinearProgram lp = LinearProgram::with_variables(2 + S);
  lp.lower(0) = lp.lower(1) = -kInf;
  lp.upper.tail(S).setConstant(1.0);
  lp.cost(0) = -1.0;
  lp.cost(1) = 1.0;
  lp.ub_matrix = Matrix::Zero(n + 2, 2 + S);
  lp.ub_rhs = Vector::Zero(n + 2);
  lp.ub_matrix.block(0, 0, n, 1).setOnes();
  lp.ub_matrix.block(0, 2, n, S) = -c * (set.xi.array().colwise() * set.weight.array()).transpose();
  lp.ub_rhs.head(n) = kappa0 * set.mean();
  lp.ub_matrix(n, 1) = -1.0;
  lp.ub_matrix.block(n, 2, 1, S) = -c * set.weight.transpose();
  lp.ub_rhs(n) = -kappa1;
  lp.ub_matrix(n + 1, 1) = -1.0;
  lp.ub_matrix.block(n + 1, 2, 1, S) = c * set.weight.transpose();
  lp.ub_rhs(n + 1) = kappa1;
  return lp;
}

// ---------------------------------------------------------------------------
// Solve wrappers returning the decision vector.

enum class LpForm { kAuto, kPrimal, kDual };

// The automatic choice takes the form with fewer rows (the dense simplex
// costs grow with the square of the row count) and never a primal form with
// more than this many rows.
inline constexpr int kPrimalRowLimit = 300;

struct ScenarioSolution {
  LpStatus status = LpStatus::kIterationLimit;
  SolveResult solution;  // x in the decision layout
  LpForm form = LpForm::kPrimal;
  int lp_rows = 0;
  int lp_cols = 0;
  // Infeasibility certificate of the primal form, when status is kInfeasible.
  Vector farkas;
};

namespace detail {

inline ScenarioSolution from_primal(const LinearProgram& lp, const LpResult& r, int k) {
  ScenarioSolution out;
  out.status = r.status;
  out.form = LpForm::kPrimal;
  out.lp_rows = lp.num_eq() + lp.num_ub();
  out.lp_cols = lp.num_vars();
  out.farkas = r.farkas;
  if (r.optimal()) {
    out.solution = r.solution;
    out.solution.x = r.solution.x.head(k);
  }
  return out;
}

inline void check_lp_status(const LpResult& r, const char* who) {
  if (r.status == LpStatus::kIterationLimit) {
    throw ConvergenceError(std::string(who) + ": simplex iteration limit", kInf);
  }
  if (!r.optimal()) {
    throw NumericError(std::string(who) + ": unexpected LP status " + to_string(r.status));
  }
}

// Projects a multiplier vector onto the simplex (it lies there up to
// round-off).
inline Vector clean_simplex(Vector x) {
  x = x.cwiseMax(0.0);
  const double s = x.sum();
  if (!(s > 0.0)) throw NumericError("dual multipliers do not define a simplex point");
  return x / s;
}

inline bool use_primal(LpForm form, int primal_rows, int dual_rows) {
  return form == LpForm::kPrimal ||
         (form == LpForm::kAuto && primal_rows <= kPrimalRowLimit && primal_rows <= dual_rows);
}

}  // namespace detail

inline ScenarioSolution solve_gaussian_var(double kappa0, double kappa1, const ScenarioSet& set,
                                           LpForm form = LpForm::kAuto,
                                           const LpOptions& opt = {}) {
  const int n = set.dimension();
  if (detail::use_primal(form, 2 * set.size() + 1, n)) {
    const LinearProgram lp = gaussian_var_lp(kappa0, kappa1, set);
    const LpResult r = solve_lp(lp, opt);
    detail::check_lp_status(r, "solve_gaussian_var");
    return detail::from_primal(lp, r, n);
  }
  const LinearProgram lp = gaussian_var_dual_lp(kappa0, kappa1, set);
  const LpResult r = solve_lp(lp, opt);
  detail::check_lp_status(r, "solve_gaussian_var");
  ScenarioSolution out;
  out.status = r.status;
  out.form = LpForm::kDual;
  out.lp_rows = lp.num_ub();
  out.lp_cols = lp.num_vars();
  out.solution.x = detail::clean_simplex(-r.ub_duals);
  out.solution.value = -r.solution.value;
  const double at_x = gaussian_var_value(kappa0, kappa1, set, out.solution.x);
  out.solution.gap = std::max(r.solution.gap, at_x - out.solution.value);
  out.solution.certificate = Certificate::kDualPair;
  out.solution.iterations = r.solution.iterations;
  return out;
}

inline ScenarioSolution solve_cvar(double kappa0, double kappa1, double eps, const ScenarioSet& set,
                                   bool single_asset = false, LpForm form = LpForm::kAuto,
                                   const LpOptions& opt = {}) {
  const int n = set.dimension();
  if (single_asset || detail::use_primal(form, set.size() + 1, n + 2)) {
    const LinearProgram lp = cvar_lp(kappa0, kappa1, eps, set, single_asset);
    const LpResult r = solve_lp(lp, opt);
    detail::check_lp_status(r, "solve_cvar");
    return detail::from_primal(lp, r, n + 1);
  }
  const LinearProgram lp = cvar_dual_lp(kappa0, kappa1, eps, set);
  const LpResult r = solve_lp(lp, opt);
  detail::check_lp_status(r, "solve_cvar");
  ScenarioSolution out;
  out.status = r.status;
  out.form = LpForm::kDual;
  out.lp_rows = lp.num_ub();
  out.lp_cols = lp.num_vars();
  Vector x(n + 1);
  x(0) = std::clamp(r.ub_duals(n) - r.ub_duals(n + 1), -1.0, 1.0);
  x.tail(n) = detail::clean_simplex(-r.ub_duals.head(n));
  out.solution.x = x;
  out.solution.value = -r.solution.value;
  const double at_x = cvar_value(kappa0, kappa1, eps, set, x);
  out.solution.gap = std::max(r.solution.gap, at_x - out.solution.value);
  out.solution.certificate = Certificate::kDualPair;
  out.solution.iterations = r.solution.iterations;
  return out;
}

inline ScenarioSolution solve_minimax(double eps, const std::array<double, 3>& chi,
                                      const ScenarioSet& set, double v_lo = -1.0,
                                      double v_hi = 1.0, const LpOptions& opt = {}) {
  const LinearProgram lp = minimax_lp(eps, chi, set, v_lo, v_hi);
  const LpResult r = solve_lp(lp, opt);
  detail::check_lp_status(r, "solve_minimax");
  return detail::from_primal(lp, r, set.dimension() + 1);
}

// Infeasibility is a regular outcome here: status kInfeasible with a Farkas
// certificate, no exception.
inline ScenarioSolution solve_constrained(double eps, double rhs, const ScenarioSet& set,
                                          double v_lo = -kInf, double v_hi = kInf,
                                          const LpOptions& opt = {}) {
  const LinearProgram lp = constrained_lp(eps, rhs, set, v_lo, v_hi);
  const LpResult r = solve_lp(lp, opt);
  if (r.status == LpStatus::kInfeasible) return detail::from_primal(lp, r, set.dimension() + 1);
  detail::check_lp_status(r, "solve_constrained");
  return detail::from_primal(lp, r, set.dimension() + 1);
}

}  // namespace saab
