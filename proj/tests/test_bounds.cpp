// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "saab/bounds.hpp"

namespace {

using saab::BoundParams;
using saab::MomentConstants;

const saab::GeometrySpec kUnit = saab::euclidean_geometry(1);

TEST(TauStar, FrozenValue) { EXPECT_NEAR(saab::tau_star(), 0.557409327321379601, 1e-12); }

TEST(TauStar, DefiningInequalityHoldsOnGrid) {
  const double tau = saab::tau_star();
  const int n = 1000000;
  for (int i = 0; i <= n; ++i) {
    const double t = -50.0 + 100.0 * i / n;
    ASSERT_LE(std::exp(t), t + std::exp(tau * t * t) + 1e-12) << t;
  }
}

TEST(TauStar, SmallerValueViolatesInequality) {
  const double tau = saab::tau_star() - 1e-3;
  bool violated = false;
  for (int i = 1; i <= 100000 && !violated; ++i) {
    const double t = 3.0 * i / 100000;
    violated = std::exp(t) > t + std::exp(tau * t * t);
  }
  EXPECT_TRUE(violated);
}

TEST(LowerWidth, GammaClosedForm) {
  EXPECT_NEAR(saab::lower_width_gamma(), 0.657519853982899633, 1e-15);
}

TEST(LowerWidth, Examples) {
  EXPECT_NEAR(saab::lower_width(0.1, 1.0, 1000), 0.0532935870156053554, 1e-15);
  EXPECT_EQ(saab::lower_width(0.5, 1.0, 1000), 0.0);
  EXPECT_THROW(saab::lower_width(1.0, 1.0, 10), saab::DomainError);
}

TEST(BoundA, Examples) {
  EXPECT_NEAR(saab::bound_a(2, 100, 1), 0.2, 1e-16);
  EXPECT_EQ(saab::bound_a(0, 50, 3), 0.0);
  EXPECT_NEAR(saab::bound_a(1, 4, 3), 1.5, 1e-16);
}

TEST(BoundA, RangeErrorNamesInterval) {
  try {
    saab::bound_a(10.0, 4, 1.0);  // limit is 2 sqrt(4 tau*) ~ 2.99
    FAIL();
  } catch (const saab::RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("[0, 2.98"), std::string::npos) << e.what();
  }
  EXPECT_THROW(saab::bound_a(-1.0, 4, 1.0), saab::RangeError);
}

TEST(BoundB, Examples) {
  EXPECT_NEAR(saab::bound_b(0, 1, 0, 4, {1, 1}, kUnit), 1.0, 1e-16);
  EXPECT_NEAR(saab::bound_b(1, 2, 0, 100, {1, 1}, kUnit), 0.6, 1e-15);
  saab::GeometrySpec g = kUnit;
  g.omega_cap = std::numbers::sqrt2;
  g.radius = std::numbers::sqrt2;
  EXPECT_NEAR(saab::bound_b(2, 1.5, 1, 25, {2, 1}, g), 2.66568542494923802, 1e-14);
}

TEST(BoundB, ExtendedRegimeAcceptsLargeLambda) {
  EXPECT_THROW(saab::bound_b(0, 1.1, 100, 4, {1, 1}, kUnit), saab::RangeError);
  EXPECT_NO_THROW(saab::bound_b(0, 1.1, 100, 4, {1, 1}, kUnit, saab::TailRegime::kExtended));
}

TEST(Bounds, MonotoneInParametersAndN) {
  const MomentConstants c{1.3, 0.7};
  for (std::int64_t N : {10, 100, 1000}) {
    for (double mu = 0; mu < 3; mu += 0.25) {
      EXPECT_LE(saab::bound_a(mu, N, c.m1), saab::bound_a(mu + 0.25, N, c.m1));
      EXPECT_GT(saab::bound_a(mu + 0.25, N, c.m1), saab::bound_a(mu + 0.25, N * 2, c.m1));
      for (double s = 1.0; s < 2; s += 0.3) {
        for (double l = 0; l < 3; l += 0.5) {
          const double b = saab::bound_b(mu, s, l, N, c, kUnit);
          EXPECT_LE(b, saab::bound_b(mu + 0.25, s, l, N, c, kUnit));
          EXPECT_LE(b, saab::bound_b(mu, s + 0.1, l, N, c, kUnit));
          EXPECT_LE(b, saab::bound_b(mu, s, l + 0.5, N, c, kUnit));
          EXPECT_GT(b, saab::bound_b(mu, s, l, N * 2, c, kUnit));
        }
      }
    }
  }
}

TEST(RiskBeta, Examples) {
  const auto all_zero = saab::risk_beta({0, 0, 1.0, 0, 100});
  EXPECT_EQ(all_zero.value, 1.0);
  EXPECT_TRUE(all_zero.clipped);
  const double mu = std::sqrt(4 * saab::tau_star() * std::log(100.0));
  const auto one = saab::risk_beta({mu, 5.9, 2.0, 5.9, 100});
  EXPECT_NEAR(one.value, 0.01, 1e-4);
  EXPECT_FALSE(one.clipped);
}

TEST(RiskBeta, StrictlyDecreasingInEachParameter) {
  const BoundParams base{2.0, 2.2, 1.02, 2.4, 50};
  ASSERT_FALSE(saab::risk_beta(base).clipped);
  const double b0 = saab::risk_beta(base).value;
  auto bump = base;
  bump.mu1 += 0.1;
  EXPECT_LT(saab::risk_beta(bump).value, b0);
  bump = base;
  bump.mu2 += 0.1;
  EXPECT_LT(saab::risk_beta(bump).value, b0);
  bump = base;
  bump.s += 0.01;
  EXPECT_LT(saab::risk_beta(bump).value, b0);
  bump = base;
  bump.lambda += 0.1;
  EXPECT_LT(saab::risk_beta(bump).value, b0);
}

TEST(RiskBeta, ExtendedRegimeUsesCubicExponent) {
  const std::int64_t N = 4;
  const double lam = 5.0;  // > 2 sqrt(4 tau*)
  const auto r = saab::risk_beta({2.9, 2.9, 1.5, lam, N}, saab::TailRegime::kExtended);
  const double expect = 2 * std::exp(-2.9 * 2.9 / (4 * saab::tau_star())) + std::exp(-N * 1.25) +
                        std::exp(-lam * lam / 3);
  EXPECT_NEAR(r.value, expect, 1e-15);
  EXPECT_THROW(saab::risk_beta({2.9, 2.9, 1.5, lam, N}), saab::RangeError);
}

TEST(CiSaaTheoretical, Assembly) {
  const auto ci = saab::ci_saa_theoretical(0.0, {2, 1, 2, 0, 100}, {1, 1}, kUnit);
  EXPECT_NEAR(ci.low, -0.2, 1e-15);
  EXPECT_NEAR(ci.up, 0.6, 1e-15);
  EXPECT_LE(ci.low, ci.up);
  EXPECT_EQ(ci.method, saab::CiMethod::kSaa);
  // The lambda = 0 term alone exhausts the risk: no guarantee, flagged.
  EXPECT_TRUE(ci.degenerate);
  EXPECT_EQ(ci.level, 0.0);
  const auto ok = saab::ci_saa_theoretical(1.0, {3, 3, 1.05, 3, 100}, {1, 1}, kUnit);
  EXPECT_FALSE(ok.degenerate);
  EXPECT_NEAR(ok.level, 1 - saab::risk_beta({3, 3, 1.05, 3, 100}).value, 1e-15);
  const auto point = saab::ci_saa_theoretical(2.0, {0, 0, 1.0, 0, 100}, {1, 1}, {saab::NormKind::kL2, 1, 0.0, 0.0, {}, false});
  EXPECT_EQ(point.low, 2.0);
  EXPECT_EQ(point.up, 2.0);
}

TEST(OptimizeCiParams, RiskWithinBudgetForAllRules) {
  for (auto rule : {saab::ParamRule::kMinWidth, saab::ParamRule::kEqualSplit, saab::ParamRule::kTiedRisk}) {
    for (double alpha : {0.1, 0.01, 0.001}) {
      for (std::int64_t N : {10, 100, 1000}) {
        for (double m1 : {1.0, 10.0, 100.0}) {
          const MomentConstants c{m1, 1.0};
          const auto p = saab::optimize_ci_params(alpha, N, c, kUnit, rule);
          EXPECT_LE(saab::risk_beta(p).value, alpha * (1 + 1e-9));
          EXPECT_GT(p.s, 1.0);
        }
      }
    }
  }
}

TEST(OptimizeCiParams, RuleOrdering) {
  for (double alpha : {0.1, 0.01, 0.001}) {
    for (std::int64_t N : {10, 100, 1000}) {
      for (double m1 : {1.0, 10.0, 100.0}) {
        const MomentConstants c{m1, 1.0};
        auto w = [&](saab::ParamRule r) {
          return saab::ci_width(saab::optimize_ci_params(alpha, N, c, kUnit, r), c, kUnit);
        };
        const double wmin = w(saab::ParamRule::kMinWidth);
        const double wtied = w(saab::ParamRule::kTiedRisk);
        const double weq = w(saab::ParamRule::kEqualSplit);
        EXPECT_LE(wmin, wtied * (1 + 1e-10));
        EXPECT_LE(wtied, weq * (1 + 1e-10));
      }
    }
  }
}

// Ratios computed by an independent Nelder-Mead / bounded-scalar
// minimization over the risk allocation.
struct RatioCase {
  double alpha, m1, m2;
  std::int64_t N;
  double min_width, tied, equal;
};

TEST(OptimizeCiParams, MatchesIndependentMinimizer) {
  const std::vector<RatioCase> cases = {
      {0.1, 1, 1, 1000, 7.66206126134751, 7.729173873389403, 7.9958275869270095},
      {0.01, 10, 1, 100, 2.594637430946386, 2.6338735489892615, 2.6957421028271584},
      {0.1, 1, 1, 10, 8.019247716561736, 8.085565388772167, 8.212525488581273},
      {0.001, 100, 1, 1000, 2.0572613855999986, 2.1051464624130842, 2.142519101020533},
      {0.1, 100, 1, 100, 3.131010663889966, 3.3133237208949318, 3.4495708667959644},
  };
  for (const auto& c : cases) {
    EXPECT_NEAR(saab::ratio_table1(c.alpha, c.m1, c.m2, c.N, saab::ParamRule::kMinWidth), c.min_width,
                1e-6 * c.min_width);
    EXPECT_NEAR(saab::ratio_table1(c.alpha, c.m1, c.m2, c.N, saab::ParamRule::kTiedRisk), c.tied,
                1e-8 * c.tied);
    EXPECT_NEAR(saab::ratio_table1(c.alpha, c.m1, c.m2, c.N, saab::ParamRule::kEqualSplit), c.equal,
                1e-12 * c.equal);
  }
}

TEST(OptimizeCiParams, InfeasibleNamesValidityConstraint) {
  try {
    saab::optimize_ci_params(0.1, 1, {1, 1}, kUnit);
    FAIL();
  } catch (const saab::RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("mu <= 2 sqrt(tau* N)"), std::string::npos);
  }
}

TEST(RatioTable1, AlwaysAboveOne) {
  for (double alpha : {0.2, 0.1, 0.01, 0.001}) {
    for (std::int64_t N : {10, 30, 100, 1000, 100000}) {
      for (double m1 : {0.1, 1.0, 10.0, 100.0}) {
        for (double m2 : {0.1, 1.0, 10.0}) {
          EXPECT_GT(saab::ratio_table1(alpha, m1, m2, N, saab::ParamRule::kMinWidth), 1.0);
        }
      }
    }
  }
}

TEST(CiAsymptotic, ConstantValuesAreDegenerate) {
  const std::vector<double> v(10, 3.5);
  const auto ci = saab::ci_asymptotic(v, 0.1);
  EXPECT_EQ(ci.low, 3.5);
  EXPECT_EQ(ci.up, 3.5);
  EXPECT_TRUE(ci.degenerate);
  EXPECT_EQ(ci.method, saab::CiMethod::kAsymptotic);
}

TEST(CiAsymptotic, TwoPointExample) {
  const std::vector<double> v = {0.0, 2.0};
  const auto ci = saab::ci_asymptotic(v, 0.1);
  EXPECT_NEAR(0.5 * (ci.low + ci.up), 1.0, 1e-15);
  EXPECT_NEAR(0.5 * ci.width(), 1.16308715367667409, 1e-14);
  EXPECT_FALSE(ci.degenerate);
  EXPECT_THROW(saab::ci_asymptotic(std::vector<double>{}, 0.1), saab::DomainError);
}

TEST(CiSaaExperimental, UpperGapExample) {
  // With a huge SAA upper bound the second-sample bound is active.
  const auto ci = saab::ci_saa_experimental(0.0, 0.0, 0.1, 100, {1, 1000}, kUnit);
  EXPECT_NEAR(ci.up, 0.286790224037522396, 1e-14);
  const double mu1 = std::sqrt(4 * saab::tau_star() * std::log(20.0));
  EXPECT_NEAR(ci.low, -mu1 / 10, 1e-15);
  EXPECT_NEAR(ci.level, 0.9, 1e-15);
}

TEST(CiSaaExperimental, UpperIsMinOfTwoBounds) {
  const MomentConstants c{5.0, 0.01};
  const auto ci = saab::ci_saa_experimental(1.0, 1.2, 0.1, 400, c, kUnit);
  const double r = 0.1 / 12;
  const double mu = std::sqrt(4 * saab::tau_star() * std::log(1 / r));
  const double s = std::sqrt(1 + std::log(1 / r) / 400);
  const double up_saa = 1.0 + saab::bound_b(mu, s, mu, 400, c, kUnit);
  const double up_sample = 1.2 + 2 * 5.0 * std::sqrt(saab::tau_star() * std::log(40.0) / 400);
  EXPECT_NEAR(ci.up, std::min(up_saa, up_sample), 1e-14);
  EXPECT_LT(up_saa, up_sample);
}

TEST(Minimax, Risks) {
  const double mu = std::sqrt(4 * saab::tau_star() * std::log(100.0));
  const auto r = saab::risks_minimax(mu, 1.2, 1.0, 100, 3);
  EXPECT_NEAR(r.upper, 0.03, 1e-15);
  const auto z = saab::risks_minimax(0, 1, 0, 100, 4);
  EXPECT_EQ(z.upper, 4.0);
  EXPECT_EQ(z.lower, 5.0);  // 1 + 2 (1 + 1)
  EXPECT_NEAR(saab::risks_minimax(1.3, 1.1, 0.5, 100, 1).upper,
              std::exp(-1.69 / (4 * saab::tau_star())), 1e-16);
}

TEST(Underestimator, StrictBoundaryAndFrozenBeta) {
  const MomentConstants c{1, 1};
  const auto at = saab::underestimator_feasible(0.0, 3, 1.1, 3, 1000, c, kUnit, 1);
  EXPECT_NEAR(at.threshold, 0.449359655509926703, 1e-15);
  EXPECT_NEAR(at.beta, 0.0706344999428193423, 1e-15);
  EXPECT_FALSE(saab::underestimator_feasible(at.threshold, 3, 1.1, 3, 1000, c, kUnit, 1).ok);
  EXPECT_TRUE(saab::underestimator_feasible(2 * at.threshold, 3, 1.1, 3, 1000, c, kUnit, 1).ok);
}

TEST(ThetaLowerBound, Examples) {
  EXPECT_EQ(saab::theta_lower_bound(0.3, 0.3), 0.5);
  EXPECT_EQ(saab::theta_lower_bound(0.3, 0.0), 1.0);
  EXPECT_THROW(saab::theta_lower_bound(0.0, 1.0), saab::DomainError);
}

}  // namespace
