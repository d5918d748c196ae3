// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "saab/random.hpp"
#include "saab/simplex_smooth.hpp"

namespace {

using saab::Matrix;
using saab::QuadraticObjective;
using saab::Vector;

QuadraticObjective distance_to(const Vector& target) {
  // |x - t|^2 = t't - 2 t'x + x'x
  return {-2.0 * target, 2.0 * Matrix::Identity(target.size(), target.size()), target.squaredNorm()};
}

TEST(SimplexSmooth, VertexOptimum) {
  const int n = 5;
  const auto r = saab::solve_simplex_smooth(distance_to(Vector::Unit(n, 0)), saab::simplex_geometry(n));
  EXPECT_NEAR(r.x(0), 1.0, 1e-9);
  EXPECT_LE(r.gap, 1e-10);
  EXPECT_NEAR(r.value, 0.0, 1e-10);
  EXPECT_EQ(r.certificate, saab::Certificate::kFwGap);
}

TEST(SimplexSmooth, Barycenter) {
  const int n = 7;
  const Vector c = Vector::Constant(n, 1.0 / n);
  const auto r = saab::solve_simplex_smooth(distance_to(c), saab::simplex_geometry(n));
  EXPECT_TRUE(r.x.isApprox(c, 1e-9));
}

// Exact oracle for tiny instances: enumerate the faces of the simplex and
// solve the KKT system of the equality-constrained QP on each.
double face_enumeration(const QuadraticObjective& f) {
  const int n = static_cast<int>(f.linear.size());
  double best = saab::kInf;
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) idx.push_back(i);
    const int k = static_cast<int>(idx.size());
    Matrix K = Matrix::Zero(k + 1, k + 1);
    Vector rhs(k + 1);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) K(i, j) = f.quad(idx[i], idx[j]);
      K(i, k) = 1.0;
      K(k, i) = 1.0;
      rhs(i) = -f.linear(idx[i]);
    }
    rhs(k) = 1.0;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(K);
    const Vector sol = cod.solve(rhs);
    if ((K * sol - rhs).norm() > 1e-9) continue;
    Vector x = Vector::Zero(n);
    bool ok = true;
    for (int i = 0; i < k; ++i) {
      x(idx[i]) = sol(i);
      ok = ok && sol(i) >= -1e-12;
    }
    if (ok) best = std::min(best, f.value(x.cwiseMax(0.0) / x.cwiseMax(0.0).sum()));
  }
  return best;
}

TEST(SimplexSmooth, QuadraticSaaMatchesFaceEnumerationAndGrid) {
  saab::Rng rng(31, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3, N = 5;
    Matrix xi(N, n);
    for (int t = 0; t < N; ++t)
      for (int i = 0; i < n; ++i) xi(t, i) = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const double k0 = 0.1, k1 = 0.9;
    QuadraticObjective f{k0 * xi.colwise().mean().transpose(), k1 * xi.transpose() * xi / N, 0.0};
    const auto r = saab::solve_simplex_smooth(f, saab::simplex_geometry(n));
    EXPECT_NEAR(r.value, face_enumeration(f), 1e-9);
    double grid = saab::kInf;
    const int K = 1000;
    for (int a = 0; a <= K; ++a) {
      for (int b = 0; a + b <= K; ++b) {
        Vector x(3);
        x << a / double(K), b / double(K), (K - a - b) / double(K);
        grid = std::min(grid, f.value(x));
      }
    }
    EXPECT_LE(r.value, grid + r.gap + 1e-15);  // certified suboptimality
    EXPECT_NEAR(r.value, grid, 1e-5);
  }
}

struct LogSumExp {
  Vector w;
  double value(const Vector& x) const { return std::log((w.array() * x.array()).exp().sum()); }
  Vector gradient(const Vector& x) const {
    const Vector e = (w.array() * x.array()).exp();
    return (w.array() * e.array() / e.sum()).matrix();
  }
};

TEST(SimplexSmooth, GenericObjectiveUsesLineSearch) {
  Vector w(3);
  w << 1.0, -2.0, 0.5;
  const auto r = saab::solve_simplex_smooth(LogSumExp{w}, saab::simplex_geometry(3), {1e-9, 100000});
  EXPECT_LE(r.gap, 1e-9);
  double grid = saab::kInf;
  for (int a = 0; a <= 400; ++a)
    for (int b = 0; a + b <= 400; ++b) {
      Vector x(3);
      x << a / 400.0, b / 400.0, (400 - a - b) / 400.0;
      grid = std::min(grid, LogSumExp{w}.value(x));
    }
  EXPECT_LE(r.value, grid + r.gap + 1e-12);
}

TEST(SimplexSmooth, IterationLimitReportsBestGap) {
  Vector t = Vector::LinSpaced(50, 0.0, 1.0);
  t /= t.sum();
  try {
    saab::solve_simplex_smooth(distance_to(t), saab::simplex_geometry(50), {1e-14, 3});
    FAIL();
  } catch (const saab::ConvergenceError& e) {
    EXPECT_GT(e.best_gap(), 0.0);
  }
}

// Fewer scenarios than assets: the Hessian is singular and the optimal face
// is large, where pairwise steps alone stall.
TEST(SimplexSmooth, RankDeficientQuadraticReachesTolerance) {
  saab::Rng rng(16, 0);
  const int n = 100, N = 64;
  Vector theta(n);
  for (int i = 0; i < n; ++i) theta(i) = rng.uniform();
  Matrix xi(N, n);
  for (int t = 0; t < N; ++t)
    for (int i = 0; i < n; ++i) xi(t, i) = rng.uniform() < theta(i) ? 1.0 : -1.0;
  QuadraticObjective f;
  f.linear = 0.1 * xi.colwise().mean().transpose();
  f.quad = 0.9 / N * xi.transpose() * xi;
  // Pairwise steps alone do not reach 1e-8 within the iteration limit.
  EXPECT_THROW(saab::solve_simplex_smooth(f, saab::simplex_geometry(n), {1e-8, 200000, 0}), saab::ConvergenceError);
  const auto r = saab::solve_simplex_smooth(f, saab::simplex_geometry(n), {1e-10, 200000});
  EXPECT_LE(r.gap, 1e-10);
  EXPECT_NEAR(r.x.sum(), 1.0, 1e-12);
  EXPECT_GE(r.x.minCoeff(), 0.0);
  const Vector g = f.gradient(r.x);
  EXPECT_LE(g.dot(r.x) - g.minCoeff(), 1e-10);
}

TEST(SimplexSmooth, RejectsNonSimplexDomain) {
  EXPECT_THROW(saab::solve_simplex_smooth(distance_to(Vector::Zero(2)), saab::euclidean_geometry(2)),
               saab::CapabilityError);
}

}  // namespace
