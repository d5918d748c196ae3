// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "saab/problems.hpp"
#include "support/oracles.hpp"

namespace saab {
namespace {

using testing::random_point;
using testing::simplex_point;

struct McMean {
  double mean;
  double se;
};

McMean mc_objective(const ProblemInstance& inst, const Vector& x, std::int64_t draws, std::uint64_t seed) {
  const Sample s = sample(inst, draws, seed);
  const Vector v = scenario_values(inst, x, s.xi).col(0);
  const double m = v.mean();
  const double var = (v.array() - m).square().sum() / static_cast<double>(draws - 1);
  return {m, std::sqrt(var / static_cast<double>(draws))};
}

TEST(ProblemKind, NamesRoundTrip) {
  for (auto k : {ProblemKind::kQuadraticRisk, ProblemKind::kGaussianVar, ProblemKind::kCvar,
                 ProblemKind::kMinimaxCvar, ProblemKind::kConstrainedCvar, ProblemKind::kHardCase}) {
    EXPECT_EQ(parse_problem_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_problem_kind("lasso"), DomainError);
}

TEST(Sampling, DegenerateBernoulliIsAllOnes) {
  const auto inst = make_quadratic_instance(0.1, 0.9, Vector::Ones(4));
  const Sample s = sample(inst, 50, 3);
  EXPECT_TRUE((s.xi.array() == 1.0).all());
}

TEST(Sampling, BernoulliMeans) {
  Vector theta(3);
  theta << 0.1, 0.5, 0.85;
  const auto inst = make_quadratic_instance(0.1, 0.9, theta);
  const Sample s = sample(inst, 1000000, 11);
  const Vector m = s.xi.colwise().mean();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m(i), 2.0 * theta(i) - 1.0, 0.005);
}

TEST(Sampling, GaussianCovariance) {
  Matrix sigma(2, 2);
  sigma << 1.0, 0.6, 0.6, 4.0;
  const auto inst = make_gaussian_var_instance(0.9, 0.1, sigma);
  const Sample s = sample(inst, 1000000, 5);
  const Matrix centered = s.xi.rowwise() - s.xi.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(s.xi.rows() - 1);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(cov(i, j), sigma(i, j), 0.02 * sigma(i, i));
  }
}

TEST(Sampling, ReproducibleAndStreamSeparated) {
  const auto inst = build_constrained_instance();
  const Sample a = sample(inst, 100, 42, 7);
  const Sample b = sample(inst, 100, 42, 7);
  const Sample c = sample(inst, 100, 42, 8);
  EXPECT_TRUE(a.xi == b.xi);
  EXPECT_FALSE(a.xi == c.xi);
}

TEST(ExactF, QuadraticDegenerate) {
  const auto inst = make_quadratic_instance(0.3, 0.8, Vector::Ones(1));
  EXPECT_DOUBLE_EQ(exact_f(inst, Vector::Ones(1)), 0.3 + 0.4);
}

TEST(ExactF, QuadraticMatchesMonteCarlo) {
  Rng rng(1, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = draw_quadratic_instance(6, 0.1, 0.9, rng);
    const Vector x = simplex_point(6, rng);
    const McMean mc = mc_objective(inst, x, 100000, 100 + rep);
    EXPECT_LE(std::fabs(mc.mean - exact_f(inst, x)), 3.0 * mc.se + 1e-12);
  }
}

TEST(ExactF, GaussianVarClosedForm) {
  Matrix sigma = Matrix::Zero(3, 3);
  sigma.diagonal() << 1.0, 2.5, 6.0;
  const auto inst = make_gaussian_var_instance(0.9, 0.1, sigma);
  Vector x(3);
  x << 0.2, 0.3, 0.5;
  const double sd = std::sqrt(x.dot(sigma * x));
  EXPECT_NEAR(exact_f(inst, x), 0.1 * std::sqrt(2.0 / std::numbers::pi) * sd, 1e-15);
  const McMean mc = mc_objective(inst, x, 1000000, 9);
  EXPECT_LE(std::fabs(mc.mean - exact_f(inst, x)), 3.0 * mc.se);
}

TEST(ExactF, CvarEnumerationMatchesMonteCarlo) {
  Vector theta(2);
  theta << 0.3, 0.7;
  const auto inst = make_cvar_instance(0.1, 0.9, 0.1, theta);
  Vector x(3);
  x << -0.2, 0.4, 0.6;
  const McMean mc = mc_objective(inst, x, 1000000, 17);
  EXPECT_LE(std::fabs(mc.mean - exact_f(inst, x)), 3.0 * mc.se);
}

TEST(ExactF, EnumerationLimit) {
  const auto inst = make_cvar_instance(0.1, 0.9, 0.1, Vector::Constant(21, 0.5));
  Vector x = Vector::Constant(22, 1.0 / 21);
  x(0) = 0.0;
  EXPECT_THROW(exact_f(inst, x), CapabilityError);
}

TEST(ExactF, SingleAssetCvar) {
  const auto inst = make_cvar_instance(0.0, 1.0, 0.5, Vector::Constant(1, 0.5), true);
  Vector x(2);
  x << 0.0, 1.0;
  // 0 + (0.5 * 1 + 0.5 * 0) / 0.5
  EXPECT_DOUBLE_EQ(exact_f(inst, x), 1.0);
  EXPECT_EQ(inst.n(), 0);
  EXPECT_EQ(inst.x_size(), 2);
}

TEST(TrueOpt, GaussianVarDiagonal) {
  Matrix sigma = Matrix::Zero(2, 2);
  sigma.diagonal() << 1.0, 4.0;
  const auto inst = make_gaussian_var_instance(0.9, 0.1, sigma);
  EXPECT_NEAR(true_opt(inst), 0.0713649646461108446, 1e-15);
}

TEST(TrueOpt, GaussianVarGeneralCovarianceAgainstGrid) {
  Matrix sigma(2, 2);
  sigma << 2.0, -0.5, -0.5, 3.0;
  const auto inst = make_gaussian_var_instance(0.9, 0.1, sigma);
  const SolveResult r = true_solution(inst);
  double grid = kInf;
  for (int k = 0; k <= 100000; ++k) {
    Vector x(2);
    x << k / 100000.0, 1.0 - k / 100000.0;
    grid = std::min(grid, exact_f(inst, x));
  }
  EXPECT_LE(r.value, grid + 1e-12);
  EXPECT_NEAR(r.value, grid, 1e-8);
}

TEST(TrueOpt, QuadraticSymmetricIsBarycenter) {
  const auto inst = make_quadratic_instance(0.1, 0.9, Vector::Constant(5, 0.3));
  const SolveResult r = true_solution(inst);
  EXPECT_LT((r.x - Vector::Constant(5, 0.2)).lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_NEAR(r.value, exact_f(inst, Vector::Constant(5, 0.2)), 1e-10);
}

// For fixed x', the CVaR objective is piecewise linear in x0 with kinks at
// the scenario returns, so its minimum over x0 sits at a kink or at +-1.
double cvar_min_over_x0(const ProblemInstance& inst, const Vector& xp) {
  const auto& p = inst.as<CvarParams>();
  std::vector<double> cand{-1.0, 1.0};
  for_each_bernoulli_outcome(p.theta, [&](const Vector& xi, double) { cand.push_back(xi.dot(xp)); });
  double best = kInf;
  Vector x(xp.size() + 1);
  x.tail(xp.size()) = xp;
  for (double c : cand) {
    x(0) = std::clamp(c, -1.0, 1.0);
    best = std::min(best, exact_f(inst, x));
  }
  return best;
}

TEST(TrueOpt, CvarExactLpAgainstGrid) {
  Rng rng(77, 0);
  for (double eps : {0.1, 0.5, 0.9}) {
    const auto inst = draw_cvar_instance(2, 0.1, 0.9, eps, rng);
    const double lp = true_opt(inst);
    double grid = kInf;
    for (int k = 0; k <= 1000; ++k) {
      Vector xp(2);
      xp << k / 1000.0, 1.0 - k / 1000.0;
      grid = std::min(grid, cvar_min_over_x0(inst, xp));
    }
    const auto& p = inst.as<CvarParams>();
    const double lipschitz = p.kappa0 + p.kappa1 / p.eps;
    EXPECT_LE(lp, grid + 1e-9);
    EXPECT_LE(grid - lp, lipschitz * 1e-3 + 1e-9);
  }
}

TEST(TrueOpt, CvarPrimalAndDualFormsAgree) {
  Rng rng(5, 0);
  const auto inst = draw_cvar_instance(5, 0.9, 0.1, 0.1, rng);
  const auto& p = inst.as<CvarParams>();
  const ScenarioSet set = bernoulli_scenarios(p.theta);
  const auto primal = solve_cvar(p.kappa0, p.kappa1, p.eps, set, false, LpForm::kPrimal);
  const auto dual = solve_cvar(p.kappa0, p.kappa1, p.eps, set, false, LpForm::kDual);
  EXPECT_NEAR(primal.solution.value, dual.solution.value, 1e-9);
  EXPECT_LE(dual.solution.gap, 1e-8);
  EXPECT_NEAR(exact_f(inst, dual.solution.x), dual.solution.value, 1e-8);
}

TEST(Constants, Quadratic) {
  const auto c = constants_quadratic(0.1, 0.9);
  EXPECT_NEAR(c.m1, 0.65, 1e-15);
  EXPECT_NEAR(c.m2, 2.0, 1e-15);
  const auto d = constants_quadratic(1.0, 0.0);
  EXPECT_DOUBLE_EQ(d.m1, 2.0);
  EXPECT_DOUBLE_EQ(d.m2, 2.0);
  EXPECT_THROW(constants_quadratic(0.0, 0.0), DomainError);
  EXPECT_THROW(constants_quadratic(0.1, -1.0), DomainError);
}

TEST(Constants, GaussianOrliczFactor) {
  EXPECT_NEAR(gaussian_orlicz_factor(), 1.52086662317881488, 1e-15);
}

TEST(Constants, GaussianTn) {
  const double s = std::sqrt(6.0);
  const int ns[] = {2, 10, 20, 100};
  const double inv_tn[] = {4.97370230668289390, 6.46352148789876299, 7.04867402508643854,
                           8.27378695953455863};
  const double plain[] = {5.68487169307446584, 7.18547292221803228, 7.74266022001791655,
                          8.90292324081574324};
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(1.0 / gaussian_tn(s, ns[k]), inv_tn[k], 1e-11) << ns[k];
    EXPECT_NEAR(gaussian_sup_constant(s, ns[k]), plain[k], 1e-13) << ns[k];
    const double t = gaussian_tn(s, ns[k]);
    const double u = 2.0 * t * t * 6.0;
    EXPECT_NEAR(std::pow(ns[k], u) / (1.0 - u), std::numbers::e, 1e-10);
  }
}

TEST(Constants, GaussianSupExamples) {
  EXPECT_DOUBLE_EQ(gaussian_sup_constant(1.0, 1), 2.0);
  EXPECT_THROW(gaussian_sup_constant(0.0, 3), DomainError);
}

TEST(Constants, GaussianVarImprovedIsSmaller) {
  for (int n : {2, 10, 100}) {
    const auto a = constants_gaussian_var(0.9, 0.1, std::sqrt(6.0), n, true);
    const auto b = constants_gaussian_var(0.9, 0.1, std::sqrt(6.0), n, false);
    EXPECT_EQ(a.m1, b.m1);
    EXPECT_LT(a.m2, b.m2);
  }
}

TEST(Constants, Cvar) {
  EXPECT_NEAR(constants_cvar(0.9, 0.1, 0.1, 3).m1, 3.8, 1e-14);
  EXPECT_DOUBLE_EQ(constants_cvar(0.0, 1.0, 0.5, 0).m2, 2.0);
  EXPECT_NEAR(constants_cvar(0.0, 1.0, 0.5, 4).m2, 2.0 * std::sqrt(5.0), 1e-14);
  EXPECT_THROW(constants_cvar(0.1, 0.9, 1.0, 2), DomainError);
}

TEST(Constants, GaussianSupMonteCarlo) {
  // E exp(|xi|_inf^2 / M^2) <= e for xi ~ N(0, s^2 I_n).
  Rng rng(8, 0);
  for (int n : {1, 2, 10, 100}) {
    const double s = std::sqrt(6.0);
    const double M = gaussian_sup_constant(s, n);
    const int draws = 200000;
    double sum = 0.0;
    double sq = 0.0;
    for (int t = 0; t < draws; ++t) {
      double mx = 0.0;
      for (int i = 0; i < n; ++i) mx = std::max(mx, std::fabs(s * rng.normal()));
      const double v = std::exp(mx * mx / (M * M));
      sum += v;
      sq += v * v;
    }
    const double m = sum / draws;
    const double se = std::sqrt((sq / draws - m * m) / draws);
    EXPECT_LE(m, std::numbers::e * (1.0 + 3.0 * se)) << n;
  }
}

// Moment conditions with the module's constants at random points.
void expect_moments_hold(const ProblemInstance& inst, std::uint64_t seed, int points, int draws) {
  Rng rng(seed, 0);
  for (int k = 0; k < points; ++k) {
    const Vector x = random_point(inst, rng);
    const MomentCheck mc = moment_check(inst, x, draws, rng);
    EXPECT_LE(mc.value_mean, std::numbers::e + 3.0 * mc.value_se) << to_string(inst.kind);
    EXPECT_LE(mc.grad_mean, std::numbers::e + 3.0 * mc.grad_se) << to_string(inst.kind);
  }
}

TEST(Constants, MomentConditionsHold) {
  Rng rng(2024, 0);
  expect_moments_hold(draw_quadratic_instance(10, 0.1, 0.9, rng), 1, 5, 20000);
  expect_moments_hold(draw_quadratic_instance(3, -0.7, 0.2, rng), 2, 5, 20000);
  expect_moments_hold(draw_gaussian_var_instance(10, 0.9, 0.1, true, rng), 3, 5, 20000);
  expect_moments_hold(draw_gaussian_var_instance(10, 0.9, 0.1, false, rng), 4, 5, 20000);
  expect_moments_hold(draw_cvar_instance(4, 0.1, 0.9, 0.1, rng), 5, 5, 20000);
  expect_moments_hold(draw_cvar_instance(0, 0.9, 0.1, 0.9, rng), 6, 5, 20000);
  expect_moments_hold(build_minimax_instance(3, 0.5, 6), 7, 5, 20000);
  expect_moments_hold(build_constrained_instance(), 8, 5, 20000);
  expect_moments_hold(build_hard_case(4, 9), 9, 5, 5000);
}

TEST(Subgradients, MatchExpectationByFiniteDifferences) {
  Rng rng(31, 0);
  const auto inst = draw_quadratic_instance(4, 0.3, 0.7, rng);
  const Vector x = simplex_point(4, rng);
  const Vector g = expected_subgradient(inst, x);
  for (int i = 0; i < 4; ++i) {
    Vector e = Vector::Zero(4);
    e(i) = 1e-6;
    const double fd = (exact_f(inst, x + e) - exact_f(inst, x - e)) / 2e-6;
    EXPECT_NEAR(g(i), fd, 1e-7);
  }
  const auto cons = build_constrained_instance();
  Vector y(3);
  y << 0.7, 0.4, 0.6;
  const Matrix G = expected_component_subgradients(cons, y);
  for (int i = 0; i < 3; ++i) {
    Vector e = Vector::Zero(3);
    e(i) = 1e-6;
    const double fd = (exact_components(cons, y + e)(0) - exact_components(cons, y - e)(0)) / 2e-6;
    EXPECT_NEAR(G(i, 0), fd, 1e-6);
  }
}

TEST(Minimax, ComponentsEqualAtOptimum) {
  for (double eps : {0.5, 0.1}) {
    const auto inst = build_minimax_instance(2, eps, 12345);
    const SolveResult r = true_solution(inst);
    const Vector c = exact_components(inst, r.x);
    EXPECT_NEAR(r.value, inst.as<MinimaxParams>().opt, 1e-8);
    EXPECT_NEAR(c(0), c(1), 1e-6);
    EXPECT_NEAR(c(1), c(2), 1e-6);
    EXPECT_EQ(inst.num_components(), 3);
  }
}

TEST(Minimax, UniformOffsetShiftsOptimum) {
  const auto inst = build_minimax_instance(3, 0.5, 99);
  const auto& p = inst.as<MinimaxParams>();
  const double c = 0.37;
  const auto shifted = make_minimax_instance(p.eps, p.theta, {p.chi[0] + c, p.chi[1] + c, p.chi[2] + c}, 0.0);
  EXPECT_NEAR(true_solution(shifted).value, p.opt + c, 1e-8);
}

TEST(Minimax, StructureOfComponents) {
  const auto inst = build_minimax_instance(2, 0.5, 4);
  const auto& p = inst.as<MinimaxParams>();
  Vector x(3);
  x << 0.1, 0.3, 0.7;
  Matrix xi(1, 2);
  xi << 1.0, -1.0;
  const Matrix v = scenario_values(inst, x, xi);
  const double r = 0.3 - 0.7;
  EXPECT_DOUBLE_EQ(v(0, 0), 0.1 + std::max(0.0, r - 0.1) / 0.5 + p.chi[0]);
  EXPECT_DOUBLE_EQ(v(0, 1), r + p.chi[1]);
  EXPECT_DOUBLE_EQ(v(0, 2), p.chi[2] - r);
}

TEST(Constrained, PublishedQuantities) {
  const auto inst = build_constrained_instance();
  EXPECT_NEAR(constrained_infeasibility_probability(inst, 128), 0.128949517646169757, 1e-13);
  EXPECT_NEAR(constrained_infeasibility_probability_exact(inst, 128), 0.127424585366539622, 1e-13);
  EXPECT_NEAR(constrained_relaxation(inst, 128), 0.581543576838337043, 1e-12);
}

TEST(Constrained, ClosedFormCvarMatchesScan) {
  const auto inst = build_constrained_instance();
  for (double u1 : {0.0, 0.3, 0.5, 0.9}) {
    Vector x(3);
    x << 0.0, u1, 1.0 - u1;
    const auto f0 = [&](double v) {
      x(0) = v;
      return exact_components(inst, x)(0);
    };
    const double vmin = golden_section_min(f0, -10.0, 10.0, 1e-12);
    const auto& p = inst.as<ConstrainedParams>();
    const Vector u = x.tail(2);
    EXPECT_NEAR(f0(vmin), gaussian_cvar(p.mean.dot(u), std::sqrt(u.dot(p.sigma * u)), p.eps), 1e-8);
  }
}

TEST(Constrained, TrueOptimum) {
  const auto inst = build_constrained_instance();
  const SolveResult r = true_solution(inst);
  EXPECT_NEAR(r.value, 2.26213100069431266, 1e-9);
  EXPECT_NEAR(r.x(1), 0.5, 1e-6);
  EXPECT_NEAR(exact_f(inst, r.x), r.value, 1e-9);
  // Phi vanishes at Opt and is positive below it.
  EXPECT_NEAR(constrained_phi(inst, r.value), 0.0, 1e-8);
  EXPECT_GT(constrained_phi(inst, r.value - 0.1), 0.0);
}

TEST(HardCase, ElevationAndPacking) {
  EXPECT_NEAR(hard_case_elevation(0.125), 0.0078023, 1e-7);
  const auto inst = build_hard_case(6, 21);
  const auto& p = inst.as<HardCaseParams>();
  EXPECT_EQ(p.centers.rows(), 64);
  const double limit = std::cos(2.0 * p.cap_angle);
  for (Eigen::Index i = 0; i < p.centers.rows(); ++i) {
    EXPECT_NEAR(p.centers.row(i).norm(), 1.0, 1e-12);
    for (Eigen::Index j = 0; j < i; ++j) EXPECT_LT(p.centers.row(i).dot(p.centers.row(j)), limit);
  }
  EXPECT_THROW(build_hard_case(2, 1), DomainError);
}

TEST(HardCase, LipschitzAndZeroOptimum) {
  const auto inst = build_hard_case(5, 3);
  const auto& p = inst.as<HardCaseParams>();
  Rng rng(4, 0);
  double max_grad = 0.0;
  for (int k = 0; k < 2000; ++k) {
    Vector x = random_point(inst, rng);
    if (k % 2 == 0) x = p.centers.row(k % p.centers.rows()).transpose() * (1.0 - 0.5 * rng.uniform() * p.elevation);
    max_grad = std::max(max_grad, expected_subgradient(inst, x).norm());
  }
  EXPECT_LE(max_grad, 1.0 + 1e-12);
  EXPECT_EQ(true_opt(inst), 0.0);
  EXPECT_EQ(exact_f(inst, Vector::Zero(5)), 0.0);
}

TEST(HardCase, ZeroMassCenterGivesGapDelta) {
  const auto inst = build_hard_case(6, 8);
  const auto& p = inst.as<HardCaseParams>();
  Matrix xi = sample(inst, 6, 1).xi;
  xi.col(5).setZero();
  const Vector vbar = p.centers.row(5).transpose();
  EXPECT_EQ(saa_objective(inst, vbar, xi), 0.0);
  EXPECT_NEAR(exact_f(inst, vbar), p.elevation, 1e-15);
}

void expect_round_trip(const ProblemInstance& inst) {
  const std::string text = to_key_value(inst);
  const ProblemInstance back = parse_instance(text);
  EXPECT_EQ(to_key_value(back), text);
  EXPECT_EQ(back.kind, inst.kind);
  EXPECT_EQ(back.constants.m1, inst.constants.m1);
  EXPECT_EQ(back.constants.m2, inst.constants.m2);
  EXPECT_EQ(back.geometry.omega_cap, inst.geometry.omega_cap);
  EXPECT_EQ(back.seed, inst.seed);
}

TEST(Serialization, ExactRoundTrip) {
  Rng rng(123, 0);
  auto q = draw_quadratic_instance(7, 0.1, 0.9, rng);
  q.seed = 0xDEADBEEFCAFEull;
  expect_round_trip(q);
  expect_round_trip(draw_gaussian_var_instance(5, 0.9, 0.1, true, rng));
  expect_round_trip(draw_cvar_instance(3, 0.1, 0.9, 0.1, rng));
  expect_round_trip(draw_cvar_instance(0, 0.9, 0.1, 0.9, rng));
  expect_round_trip(build_minimax_instance(2, 0.1, 5));
  expect_round_trip(build_constrained_instance());
  expect_round_trip(build_hard_case(4, 2));
  const auto q2 = parse_instance(to_key_value(q));
  EXPECT_TRUE(q2.as<QuadraticParams>().theta == q.as<QuadraticParams>().theta);
}

TEST(Serialization, RejectsBadRecords) {
  const auto inst = build_constrained_instance();
  const std::string text = to_key_value(inst);
  EXPECT_THROW(parse_instance(text + "colour=blue\n"), DomainError);
  EXPECT_THROW(parse_instance(text + "eps=0.2\n"), DomainError);
  const std::string missing = text.substr(0, text.find("mean="));
  EXPECT_THROW(parse_instance(missing), DomainError);
  EXPECT_THROW(parse_instance("kind=lasso\nseed=1\n"), DomainError);
}

TEST(Instance, WrongKindAccessIsAnError) {
  const auto inst = build_constrained_instance();
  EXPECT_THROW(inst.as<QuadraticParams>(), DomainError);
  EXPECT_THROW(scenario_subgradient(inst, Vector::Zero(3), Vector::Zero(2)), CapabilityError);
}

}  // namespace
}  // namespace saab
