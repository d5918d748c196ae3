// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Sample average approximation: build and solve the empirical problem of an
// instance for a given sample, returning a certified solution.

#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "saab/error.hpp"
#include "saab/lp.hpp"
#include "saab/problems.hpp"
#include "saab/scenario_lp.hpp"
#include "saab/simplex_smooth.hpp"

namespace saab {

struct SaaOptions {
  double tol = 1e-8;
  LpForm form = LpForm::kAuto;
  // Subtracted from the constraint right-hand side of the constrained
  // problem (a relaxation delta, or a shift mu M1 / sqrt(N)).
  double constraint_relaxation = 0.0;
};

struct SaaResult {
  LpStatus status = LpStatus::kOptimal;
  SolveResult solution;  // decision vector, Opt_N and its certified gap
  LpForm form = LpForm::kPrimal;

  bool feasible() const { return status != LpStatus::kInfeasible; }
};

namespace detail {
inline LpOptions lp_options(const SaaOptions& opt) {
  LpOptions lpo;
  lpo.tol = std::min(lpo.tol, opt.tol);
  return lpo;
}

inline ScenarioSet scenarios_for(const ProblemInstance& inst, const Matrix& xi) {
  return empirical_scenarios(xi, inst.bernoulli());
}
}  // namespace detail

// The primal LP whose optimal value is Opt_N for piecewise-linear kinds.
// Its leading variables are the decision vector.
inline LinearProgram saa_lp_reformulate(const ProblemInstance& inst, const Matrix& xi,
                                        double constraint_relaxation = 0.0) {
  detail::check_xi(inst, xi);
  const ScenarioSet set = detail::scenarios_for(inst, xi);
  switch (inst.kind) {
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      return gaussian_var_lp(p.kappa0, p.kappa1, set);
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      return cvar_lp(p.kappa0, p.kappa1, p.eps, set, p.single_asset);
    }
    case ProblemKind::kMinimaxCvar: {
      const auto& p = inst.as<MinimaxParams>();
      return minimax_lp(p.eps, p.chi, set);
    }
    case ProblemKind::kConstrainedCvar: {
      const auto& p = inst.as<ConstrainedParams>();
      return constrained_lp(p.eps, p.chi - constraint_relaxation, set);
    }
    default:
      throw DomainError(std::string("no LP reformulation for instance kind ") + to_string(inst.kind));
  }
}

inline SaaResult solve_saa(const ProblemInstance& inst, const Matrix& xi, const SaaOptions& opt = {}) {
  detail::check_xi(inst, xi);
  SaaResult out;
  switch (inst.kind) {
    case ProblemKind::kQuadraticRisk: {
      const auto& p = inst.as<QuadraticParams>();
      const double N = static_cast<double>(xi.rows());
      QuadraticObjective f;
      f.linear = p.kappa0 * (xi.colwise().sum().transpose() / N);
      f.quad = Matrix::Zero(xi.cols(), xi.cols());
      f.quad.selfadjointView<Eigen::Lower>().rankUpdate(xi.transpose(), p.kappa1 / N);
      f.quad = f.quad.selfadjointView<Eigen::Lower>();
      SmoothOptions so;
      so.tol = opt.tol;
      out.solution = solve_simplex_smooth(f, inst.geometry, so);
      out.form = LpForm::kPrimal;
      return out;
    }
    case ProblemKind::kHardCase:
      // F >= 0 on every scenario and vanishes at the origin.
      out.solution = {Vector::Zero(inst.x_size()), 0.0, 0.0, Certificate::kDualPair, 0};
      return out;
    default: break;
  }
  const ScenarioSet set = detail::scenarios_for(inst, xi);
  const LpOptions lpo = detail::lp_options(opt);
  ScenarioSolution s;
  switch (inst.kind) {
    case ProblemKind::kGaussianVar: {
      const auto& p = inst.as<GaussianVarParams>();
      s = solve_gaussian_var(p.kappa0, p.kappa1, set, opt.form, lpo);
      break;
    }
    case ProblemKind::kCvar: {
      const auto& p = inst.as<CvarParams>();
      s = solve_cvar(p.kappa0, p.kappa1, p.eps, set, p.single_asset, opt.form, lpo);
      break;
    }
    case ProblemKind::kMinimaxCvar: {
      const auto& p = inst.as<MinimaxParams>();
      s = solve_minimax(p.eps, p.chi, set, -1.0, 1.0, lpo);
      break;
    }
    case ProblemKind::kConstrainedCvar: {
      const auto& p = inst.as<ConstrainedParams>();
      s = solve_constrained(p.eps, p.chi - opt.constraint_relaxation, set, -kInf, kInf, lpo);
      break;
    }
    default: throw DomainError("solve_saa: unknown instance kind");
  }
  out.status = s.status;
  out.solution = s.solution;
  out.form = s.form;
  return out;
}

}  // namespace saab
