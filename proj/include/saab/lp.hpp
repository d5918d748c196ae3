// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Dense bounded-variable revised simplex with primal/dual certificates.
//
//   minimize    cost' x + cost_offset
//   subject to  eq_matrix x  = eq_rhs
//               ub_matrix x <= ub_rhs
//               lower <= x <= upper        (entries may be infinite)
//
// Phase 1 minimizes the sum of artificial variables; phase 2 the cost.
// The explicit basis inverse is updated by rank-one pivots and rebuilt
// from an LU factorization every `refactor_every` pivots. Pricing is
// Dantzig's rule with lowest-index tie-breaking; after a run of degenerate
// pivots the method switches to Bland's rule until the objective moves.

#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "saab/error.hpp"
#include "saab/numeric.hpp"

namespace saab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct LinearProgram {
  Vector cost;
  double cost_offset = 0.0;
  Matrix eq_matrix;
  Vector eq_rhs;
  Matrix ub_matrix;
  Vector ub_rhs;
  Vector lower;
  Vector upper;

  // n variables in [0, inf), no constraints.
  static LinearProgram with_variables(int n) {
    LinearProgram lp;
    lp.cost = Vector::Zero(n);
    lp.eq_matrix.resize(0, n);
    lp.eq_rhs.resize(0);
    lp.ub_matrix.resize(0, n);
    lp.ub_rhs.resize(0);
    lp.lower = Vector::Zero(n);
    lp.upper = Vector::Constant(n, kInf);
    return lp;
  }

  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_eq() const { return static_cast<int>(eq_matrix.rows()); }
  int num_ub() const { return static_cast<int>(ub_matrix.rows()); }

  void validate() const {
    const auto n = cost.size();
    if (eq_matrix.cols() != n || ub_matrix.cols() != n || lower.size() != n || upper.size() != n ||
        eq_rhs.size() != eq_matrix.rows() || ub_rhs.size() != ub_matrix.rows()) {
      throw DomainError("LinearProgram: inconsistent dimensions");
    }
    if (!cost.allFinite() || !eq_matrix.allFinite() || !ub_matrix.allFinite() ||
        !eq_rhs.allFinite() || !ub_rhs.allFinite() || !std::isfinite(cost_offset)) {
      throw DomainError("LinearProgram: non-finite coefficient");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j) ||
          lower(j) == kInf || upper(j) == -kInf) {
        throw DomainError("LinearProgram: invalid bounds on variable " + std::to_string(j));
      }
    }
  }
};

enum class Certificate { kDualPair, kFwGap };

struct SolveResult {
  Vector x;
  double value = 0.0;
  double gap = 0.0;
  Certificate certificate = Certificate::kDualPair;
  int iterations = 0;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration_limit";
  }
  return "?";
}

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  SolveResult solution;  // meaningful when status == kOptimal
  Vector eq_duals;       // multipliers of the equality rows
  Vector ub_duals;       // multipliers of the inequality rows (<= 0)
  Vector reduced_costs;
  double dual_value = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  // kInfeasible: row multipliers y with y'b > max_{l<=x<=u} y'A x
  // (equality rows first, then inequality rows) and that margin.
  Vector farkas;
  double farkas_margin = 0.0;
  // kUnbounded: feasible direction of descent.
  Vector ray;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

struct LpOptions {
  double tol = 1e-9;
  int max_iterations = 0;  // 0: automatic
  int refactor_every = 50;
  int degenerate_before_bland = 50;
};

namespace detail {

class BoundedSimplex {
 public:
  enum class State { kBasic, kLower, kUpper, kFree };

  BoundedSimplex(const LinearProgram& lp, const LpOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.num_vars();
    me_ = lp.num_eq();
    mu_ = lp.num_ub();
    m_ = me_ + mu_;
    ncol_ = n_ + mu_ + m_;
    A_ = Matrix::Zero(m_, ncol_);
    A_.topLeftCorner(me_, n_) = lp.eq_matrix;
    A_.bottomLeftCorner(mu_, n_) = lp.ub_matrix;
    for (int i = 0; i < mu_; ++i) A_(me_ + i, n_ + i) = 1.0;
    b_.resize(m_);
    b_ << lp.eq_rhs, lp.ub_rhs;
    lo_ = Vector::Zero(ncol_);
    hi_ = Vector::Constant(ncol_, kInf);
    lo_.head(n_) = lp.lower;
    hi_.head(n_) = lp.upper;
    c2_ = Vector::Zero(ncol_);
    c2_.head(n_) = lp.cost;
    x_ = Vector::Zero(ncol_);
    state_.assign(ncol_, State::kLower);
    basis_.assign(m_, -1);
    max_iter_ = opt.max_iterations > 0 ? opt.max_iterations : std::max(20000, 60 * (m_ + ncol_));
  }

  LpResult run() {
    LpResult res;
    init_basis();
    Vector c1 = Vector::Zero(ncol_);
    c1.tail(m_).setOnes();
    const LpStatus s1 = iterate(c1, /*phase=*/1);
    if (s1 == LpStatus::kIterationLimit) {
      res.status = s1;
      return res;
    }
    const double infeas = c1.dot(x_);
    const double scale = 1.0 + b_.lpNorm<Eigen::Infinity>();
    if (infeas > 1e3 * opt_.tol * scale) {
      res.status = LpStatus::kInfeasible;
      farkas(c1, res);
      return res;
    }
    // Fix artificials at zero and drive them out of the basis where possible.
    for (int i = 0; i < m_; ++i) {
      const int a = n_ + mu_ + i;
      hi_(a) = 0.0;
      if (state_[a] != State::kBasic) x_(a) = 0.0;
    }
    expel_artificials();
    const LpStatus s2 = iterate(c2_, /*phase=*/2);
    res.status = s2;
    if (s2 == LpStatus::kUnbounded) {
      res.ray = ray_.head(n_);
      return res;
    }
    if (s2 != LpStatus::kOptimal) return res;
    refactor();
    certify(res);
    return res;
  }

 private:
  static double sq(double v) { return v * v; }

  void init_basis() {
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_(j))) {
        x_(j) = lo_(j);
        state_[j] = State::kLower;
      } else if (std::isfinite(hi_(j))) {
        x_(j) = hi_(j);
        state_[j] = State::kUpper;
      } else {
        x_(j) = 0.0;
        state_[j] = State::kFree;
      }
    }
    const Vector r = b_ - A_.leftCols(n_) * x_.head(n_);
    for (int i = 0; i < m_; ++i) {
      const int art = n_ + mu_ + i;
      if (i >= me_ && r(i) >= 0.0) {
        const int slack = n_ + (i - me_);
        basis_[i] = slack;
        state_[slack] = State::kBasic;
        x_(slack) = r(i);
        x_(art) = 0.0;
        state_[art] = State::kLower;
        hi_(art) = 0.0;  // never needed
      } else {
        A_(i, art) = r(i) >= 0.0 ? 1.0 : -1.0;
        basis_[i] = art;
        state_[art] = State::kBasic;
        x_(art) = std::fabs(r(i));
      }
    }
    refactor();
  }

  void refactor() {
    if (m_ == 0) return;
    Matrix B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = A_.col(basis_[i]);
    Eigen::PartialPivLU<Matrix> lu(B);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) throw NumericError("simplex: singular basis");
    // Recompute basic values from the nonbasic ones.
    Vector rhs = b_;
    for (int j = 0; j < ncol_; ++j) {
      if (state_[j] != State::kBasic && x_(j) != 0.0) rhs -= A_.col(j) * x_(j);
    }
    const Vector xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) x_(basis_[i]) = xb(i);
    since_refactor_ = 0;
  }

  Vector duals(const Vector& c) const {
    Vector cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = c(basis_[i]);
    return binv_.transpose() * cb;
  }

  LpStatus iterate(const Vector& c, int phase) {
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (iterations_ >= max_iter_) return LpStatus::kIterationLimit;
      if (since_refactor_ >= opt_.refactor_every) refactor();
      const Vector y = duals(c);
      const Vector d = c - A_.transpose() * y;
      // Pricing.
      int q = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < ncol_; ++j) {
        if (state_[j] == State::kBasic || lo_(j) == hi_(j)) continue;
        int dj = 0;
        if (state_[j] == State::kLower && d(j) < -opt_.tol) dj = 1;
        else if (state_[j] == State::kUpper && d(j) > opt_.tol) dj = -1;
        else if (state_[j] == State::kFree && std::fabs(d(j)) > opt_.tol) dj = d(j) < 0 ? 1 : -1;
        if (dj == 0) continue;
        if (bland) {
          q = j;
          dir = dj;
          break;
        }
        if (std::fabs(d(j)) > best) {
          best = std::fabs(d(j));
          q = j;
          dir = dj;
        }
      }
      if (q < 0) return LpStatus::kOptimal;

      const Vector w = binv_ * A_.col(q);
      // Ratio test.
      double t = kInf;
      int leave = -1;
      bool to_upper = false;
      // Pivot tolerance relative to the entering column, so tiny entries
      // never become pivots and the basis stays well conditioned.
      const double piv = 1e-9 * std::max(1.0, w.lpNorm<Eigen::Infinity>());
      for (int i = 0; i < m_; ++i) {
        const double a = dir * w(i);
        const int bi = basis_[i];
        double ti;
        bool up;
        if (a > piv && std::isfinite(lo_(bi))) {
          ti = (x_(bi) - lo_(bi)) / a;
          up = false;
        } else if (a < -piv && std::isfinite(hi_(bi))) {
          ti = (hi_(bi) - x_(bi)) / -a;
          up = true;
        } else {
          continue;
        }
        ti = std::max(ti, 0.0);
        bool take = false;
        if (leave < 0 || ti < t - 1e-12) {
          take = true;
        } else if (ti <= t + 1e-12) {
          take = bland ? bi < basis_[leave] : std::fabs(w(i)) > std::fabs(w(leave));
        }
        if (take) {
          t = ti;
          leave = i;
          to_upper = up;
        }
      }
      const double span = hi_(q) - lo_(q);
      const bool flip = std::isfinite(span) && span <= t;
      if (!flip && leave < 0) {
        if (phase == 2) {
          ray_ = Vector::Zero(ncol_);
          ray_(q) = dir;
          for (int i = 0; i < m_; ++i) ray_(basis_[i]) = -dir * w(i);
          return LpStatus::kUnbounded;
        }
        throw NumericError("simplex: unbounded phase-1 ray");
      }
      const double step = flip ? span : t;
      ++iterations_;
      if (step > 1e-12) {
        degenerate_run = 0;
        bland = false;
      } else if (++degenerate_run > opt_.degenerate_before_bland) {
        bland = true;
      }
      x_(q) += dir * step;
      for (int i = 0; i < m_; ++i) x_(basis_[i]) -= dir * step * w(i);
      if (flip) {
        state_[q] = dir > 0 ? State::kUpper : State::kLower;
        x_(q) = dir > 0 ? hi_(q) : lo_(q);
        continue;
      }
      const int out = basis_[leave];
      x_(out) = to_upper ? hi_(out) : lo_(out);
      state_[out] = to_upper ? State::kUpper : State::kLower;
      pivot(leave, q, w);
    }
  }

  void pivot(int r, int q, const Vector& w) {
    basis_[r] = q;
    state_[q] = State::kBasic;
    const double wr = w(r);
    binv_.row(r) /= wr;
    for (int i = 0; i < m_; ++i) {
      if (i != r && w(i) != 0.0) binv_.row(i) -= w(i) * binv_.row(r);
    }
    ++since_refactor_;
  }

  void expel_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_ + mu_) continue;
      for (int j = 0; j < n_ + mu_; ++j) {
        if (state_[j] == State::kBasic || lo_(j) == hi_(j)) continue;
        const double wr = binv_.row(r).dot(A_.col(j));
        if (std::fabs(wr) > 1e-7) {
          const Vector w = binv_ * A_.col(j);
          const int out = basis_[r];
          x_(out) = 0.0;
          state_[out] = State::kLower;
          pivot(r, j, w);
          break;
        }
      }
    }
    refactor();
  }

  void farkas(const Vector& c1, LpResult& res) {
    refactor();
    const Vector y = duals(c1);
    double sup = 0.0;
    for (int j = 0; j < n_ + mu_; ++j) {
      const double g = y.dot(A_.col(j));
      if (std::fabs(g) < 1e-12) continue;
      sup += g > 0 ? g * hi_(j) : g * lo_(j);
    }
    res.farkas = y;
    res.farkas_margin = y.dot(b_) - sup;
  }

  void certify(LpResult& res) {
    const Vector y = duals(c2_);
    const Vector d = c2_ - A_.transpose() * y;
    double dual = y.dot(b_);
    double dres = 0.0;
    for (int j = 0; j < n_ + mu_; ++j) {
      if (d(j) > 0.0) {
        if (std::isfinite(lo_(j))) dual += lo_(j) * d(j);
        else dres = std::max(dres, d(j));
      } else if (d(j) < 0.0) {
        if (std::isfinite(hi_(j))) dual += hi_(j) * d(j);
        else dres = std::max(dres, -d(j));
      }
    }
    // Artificials left basic on redundant rows are fixed at zero.
    const Vector x = x_.head(n_);
    double pres = 0.0;
    if (me_ > 0) pres = (lp_.eq_matrix * x - lp_.eq_rhs).lpNorm<Eigen::Infinity>();
    if (mu_ > 0) pres = std::max(pres, (lp_.ub_matrix * x - lp_.ub_rhs).cwiseMax(0.0).maxCoeff());
    for (int j = 0; j < n_; ++j) {
      pres = std::max({pres, lo_(j) - x(j), x(j) - hi_(j)});
    }
    const double primal = lp_.cost.dot(x);
    res.solution.x = x;
    res.solution.value = primal + lp_.cost_offset;
    res.solution.gap = std::fabs(primal - dual);
    res.solution.certificate = Certificate::kDualPair;
    res.solution.iterations = iterations_;
    res.dual_value = dual + lp_.cost_offset;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.eq_duals = y.head(me_);
    res.ub_duals = y.tail(mu_);
    res.reduced_costs = d.head(n_);
  }

  const LinearProgram& lp_;
  LpOptions opt_;
  int n_ = 0, me_ = 0, mu_ = 0, m_ = 0, ncol_ = 0;
  Matrix A_;
  Vector b_, lo_, hi_, c2_, x_, ray_;
  std::vector<State> state_;
  std::vector<int> basis_;
  Matrix binv_;
  int since_refactor_ = 0;
  int iterations_ = 0;
  int max_iter_ = 0;
};

}  // namespace detail

inline LpResult solve_lp(const LinearProgram& lp, const LpOptions& opt = {}) {
  lp.validate();
  return detail::BoundedSimplex(lp, opt).run();
}

// Writes the program in CPLEX LP text format (variables x0, x1, ...).
inline void write_lp(std::ostream& os, const LinearProgram& lp) {
  lp.validate();
  auto term = [&](double a, int j, bool first) {
    std::ostringstream t;
    t << std::setprecision(17);
    if (a < 0) t << (first ? "-" : " - ") << -a;
    else t << (first ? "" : " + ") << a;
    t << " x" << j;
    return t.str();
  };
  auto row = [&](const Eigen::Ref<const Vector>& r) {
    std::string s;
    bool first = true;
    for (Eigen::Index j = 0; j < r.size(); ++j) {
      if (r(j) == 0.0) continue;
      s += term(r(j), static_cast<int>(j), first);
      first = false;
    }
    return first ? std::string("0 x0") : s;
  };
  os << std::setprecision(17);
  os << "\\ objective constant: " << lp.cost_offset << "\n";
  os << "Minimize\n obj: " << row(lp.cost) << "\nSubject To\n";
  for (int i = 0; i < lp.num_eq(); ++i) {
    os << " e" << i << ": " << row(lp.eq_matrix.row(i).transpose()) << " = " << lp.eq_rhs(i) << "\n";
  }
  for (int i = 0; i < lp.num_ub(); ++i) {
    os << " u" << i << ": " << row(lp.ub_matrix.row(i).transpose()) << " <= " << lp.ub_rhs(i) << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < lp.num_vars(); ++j) {
    const double l = lp.lower(j), u = lp.upper(j);
    if (!std::isfinite(l) && !std::isfinite(u)) {
      os << " x" << j << " free\n";
    } else if (!std::isfinite(l)) {
      os << " -inf <= x" << j << " <= " << u << "\n";
    } else if (!std::isfinite(u)) {
      os << " x" << j << " >= " << l << "\n";
    } else {
      os << " " << l << " <= x" << j << " <= " << u << "\n";
    }
  }
  os << "End\n";
}

}  // namespace saab
