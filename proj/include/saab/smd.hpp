// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Stochastic mirror descent with the entropy prox on simplex blocks
// (Euclidean steps on the box coordinate and on the unit ball):
//
//   x_{t+1} = argmin_y V_{x_t}(y) + step <G(x_t, xi_t), y>,   t = 1..N,
//
// with step = scale * 2 R Omega / (M2 sqrt(N)) and the uniform average of
// x_1..x_N returned. Each run also checks the regret inequality
//
//   (1/N) sum <g_t, x_t - u> <= (V_{x_1}(u) + step^2/2 sum |g_t|_*^2) / (step N)
//
// for the worst u in the domain, and reports the looser bound
// Omega^2 (2R)^2 / (2 step N) + step/(2N) sum |g_t|_*^2 alongside.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "saab/error.hpp"
#include "saab/geometry.hpp"
#include "saab/problems.hpp"
#include "saab/random.hpp"

namespace saab {

struct SmdOptions {
  double step_scale = 1.0;
  // Iteration counts at which the exact objective of the running average
  // is recorded.
  std::vector<std::int64_t> checkpoints;
};

struct SmdCheckpoint {
  std::int64_t t = 0;
  double objective = 0.0;
};

struct SmdRun {
  double step = 0.0;
  Vector iterates_avg;
  std::vector<SmdCheckpoint> trajectory;
  double regret = 0.0;        // max over the domain of (1/N) sum <g_t, x_t - u>
  double regret_bound = 0.0;  // potential-based bound
  double nominal_bound = 0.0;  // Omega/R form of the bound
  double min_mass = 0.0;      // smallest simplex entry over all iterates
  double max_simplex_error = 0.0;

  bool certificate_holds() const {
    return regret <= regret_bound * (1.0 + 1e-12) + 1e-14 && regret_bound <= nominal_bound * (1.0 + 1e-12);
  }
};

namespace detail {

inline Vector smd_start(const ProblemInstance& inst) {
  const GeometrySpec& g = inst.geometry;
  switch (g.norm_kind) {
    case NormKind::kL1: return Vector::Constant(g.dimension, 1.0 / g.dimension);
    case NormKind::kL2: return Vector::Zero(g.dimension);
    case NormKind::kMixedBoxSimplex: {
      Vector x(g.vector_size());
      x(0) = 0.0;
      x.tail(g.dimension).setConstant(1.0 / g.dimension);
      return x;
    }
  }
  return {};
}

inline Vector smd_step(const GeometrySpec& g, const Vector& x, const Vector& grad, double step) {
  switch (g.norm_kind) {
    case NormKind::kL1: return prox_entropy(x, grad, step);
    case NormKind::kMixedBoxSimplex: return prox_mixed_entropy(x, grad, step, g.single_asset);
    case NormKind::kL2: {
      Vector y = x - step * grad;
      const double r = y.norm();
      if (r > 1.0) y /= r;
      return y;
    }
  }
  return x;
}

// max over u in the domain of V_{x1}(u) for the prox used by smd_step,
// started from smd_start.
inline double smd_potential(const GeometrySpec& g) {
  switch (g.norm_kind) {
    case NormKind::kL1: return std::log(static_cast<double>(g.dimension));
    case NormKind::kL2: return 0.5;
    case NormKind::kMixedBoxSimplex:
      return 0.5 + (g.single_asset ? 0.0 : std::log(static_cast<double>(g.dimension)));
  }
  return 0.0;
}

// min over u in the domain of <s, u>.
inline double domain_min_linear(const GeometrySpec& g, const Vector& s) {
  switch (g.norm_kind) {
    case NormKind::kL1: return s.minCoeff();
    case NormKind::kL2: return -s.norm();
    case NormKind::kMixedBoxSimplex: {
      const double box = -std::fabs(s(0));
      return box + (g.single_asset ? s(1) : s.tail(s.size() - 1).minCoeff());
    }
  }
  return 0.0;
}

}  // namespace detail

inline SmdRun run_smd(const ProblemInstance& inst, std::int64_t N, std::uint64_t seed,
                      std::uint64_t stream = 0, const SmdOptions& opt = {}) {
  detail::require(N >= 1, "run_smd: N must be at least 1");
  detail::require(opt.step_scale > 0.0, "run_smd: step scale must be positive");
  if (inst.num_components() != 1) {
    throw CapabilityError(std::string("run_smd: not available for instance kind ") + to_string(inst.kind));
  }
  const GeometrySpec& geo = inst.geometry;
  SmdRun run;
  run.step = opt.step_scale * 2.0 * geo.radius * geo.omega_cap /
             (inst.constants.m2 * std::sqrt(static_cast<double>(N)));
  Rng rng(seed, stream);
  const Matrix xi = sample_matrix(inst, N, rng);

  Vector x = detail::smd_start(inst);
  Vector sum_x = Vector::Zero(x.size());
  Vector sum_g = Vector::Zero(x.size());
  double inner = 0.0;  // sum <g_t, x_t>
  double sq = 0.0;     // sum |g_t|_*^2
  run.min_mass = kInf;
  std::size_t next_cp = 0;
  const bool simplex_block = geo.norm_kind != NormKind::kL2;
  for (std::int64_t t = 0; t < N; ++t) {
    Vector g;
    try {
      g = scenario_subgradient(inst, x, xi.row(t).transpose());
    } catch (const Error& e) {
      throw NumericError("run_smd: oracle failed at step " + std::to_string(t + 1) + ": " + e.what());
    }
    if (!g.allFinite()) throw NumericError("run_smd: non-finite subgradient at step " + std::to_string(t + 1));
    sum_x += x;
    sum_g += g;
    inner += g.dot(x);
    const double dn = dual_norm(geo, g);
    sq += dn * dn;
    if (simplex_block) {
      const auto block = geo.norm_kind == NormKind::kL1 ? x : Vector(x.tail(geo.dimension));
      run.min_mass = std::min(run.min_mass, block.minCoeff());
      run.max_simplex_error = std::max(run.max_simplex_error, std::fabs(block.sum() - 1.0));
    }
    while (next_cp < opt.checkpoints.size() && opt.checkpoints[next_cp] == t + 1) {
      run.trajectory.push_back({t + 1, exact_f(inst, Vector(sum_x / static_cast<double>(t + 1)))});
      ++next_cp;
    }
    x = detail::smd_step(geo, x, g, run.step);
  }
  if (!simplex_block) run.min_mass = 0.0;
  const double n_d = static_cast<double>(N);
  run.iterates_avg = sum_x / n_d;
  run.regret = (inner - detail::domain_min_linear(geo, sum_g)) / n_d;
  run.regret_bound = (detail::smd_potential(geo) + 0.5 * run.step * run.step * sq) / (run.step * n_d);
  const double four_r2 = 4.0 * geo.radius * geo.radius;
  run.nominal_bound = geo.omega_cap * geo.omega_cap * four_r2 / (2.0 * run.step * n_d) + run.step * sq / (2.0 * n_d);
  return run;
}

}  // namespace saab
