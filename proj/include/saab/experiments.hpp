// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// Monte Carlo experiments on confidence intervals and SAA solution quality.
//
// Every replication r draws from its own random streams, keyed by
// (seed, stream_id(r, purpose)), and writes its outcome into slot r. Reports
// aggregate the slots in index order with pairwise summation, so a report
// is a function of the configuration alone, whatever the worker count.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "saab/bounds.hpp"
#include "saab/error.hpp"
#include "saab/keyvalue.hpp"
#include "saab/normal.hpp"
#include "saab/numeric.hpp"
#include "saab/parallel.hpp"
#include "saab/problems.hpp"
#include "saab/random.hpp"
#include "saab/saa.hpp"
#include "saab/smd.hpp"

namespace saab {

enum class ExperimentKind { kCoverage, kWidths, kMinimax, kConstrained, kHardCase, kCurves };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kCoverage: return "coverage";
    case ExperimentKind::kWidths: return "widths";
    case ExperimentKind::kMinimax: return "minimax";
    case ExperimentKind::kConstrained: return "constrained";
    case ExperimentKind::kHardCase: return "hardcase";
    case ExperimentKind::kCurves: return "curves";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::kCoverage, ExperimentKind::kWidths, ExperimentKind::kMinimax,
                 ExperimentKind::kConstrained, ExperimentKind::kHardCase, ExperimentKind::kCurves}) {
    if (s == to_string(k)) return k;
  }
  throw DomainError("unknown experiment '" + s + "'");
}

// Which random instance family a replication draws from.
struct InstanceSpec {
  ProblemKind kind = ProblemKind::kQuadraticRisk;
  int n = 2;
  double kappa0 = 0.1;
  double kappa1 = 0.9;
  double eps = 0.1;
  double chi = 0.3;          // constrained right-hand side
  bool improved_m2 = true;   // Gaussian VaR constant
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kCoverage;
  InstanceSpec instance;
  std::int64_t N = 20;
  std::int64_t reps = 200;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  // Draw one instance for all replications instead of one per replication.
  bool fixed_instance = false;
  // Width ratios: keep only replications whose asymptotic interval covers Opt.
  bool exclusion = true;
  // Total risk of the non-asymptotic minimax lower bound, split equally.
  double minimax_risk = 0.1;
  std::vector<std::int64_t> curve_sizes;
  double smd_step_scale = 1.0;
  double tol = 1e-8;
  int workers = 0;  // execution only; never changes results

  void validate() const;
};

inline std::vector<std::int64_t> default_curve_sizes() {
  std::vector<std::int64_t> sizes;
  for (int k = 4; k <= 14; ++k) sizes.push_back(std::int64_t{1} << k);
  return sizes;
}

// Settings of the published runs for each experiment.
inline ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::kCoverage: break;
    case ExperimentKind::kWidths: c.N = 1000; break;
    case ExperimentKind::kMinimax:
      c.instance.kind = ProblemKind::kMinimaxCvar;
      c.instance.eps = 0.5;
      c.N = 128;
      c.reps = 100;
      break;
    case ExperimentKind::kConstrained:
      c.instance.kind = ProblemKind::kConstrainedCvar;
      c.N = 128;
      c.reps = 100;
      c.fixed_instance = true;
      break;
    case ExperimentKind::kHardCase:
      c.instance.kind = ProblemKind::kHardCase;
      c.instance.n = 10;
      c.N = 10;
      c.reps = 1000;
      c.fixed_instance = true;
      break;
    case ExperimentKind::kCurves:
      c.instance.n = 100;
      c.reps = 100;
      c.fixed_instance = true;
      c.curve_sizes = default_curve_sizes();
      break;
  }
  return c;
}

inline void ExperimentConfig::validate() const {
  using detail::require;
  require(reps >= 1, "reps must be at least 1, got " + std::to_string(reps));
  require(N >= 1, "n_samples must be at least 1, got " + std::to_string(N));
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1), got " + format_double(alpha));
  require(tol > 0.0, "tol must be positive");
  require(smd_step_scale > 0.0, "smd_step_scale must be positive");
  const ProblemKind k = instance.kind;
  const std::string kind = ::saab::to_string(k);
  const std::string exp = ::saab::to_string(experiment);
  auto need_kind = [&](ProblemKind want) {
    if (k != want) {
      throw DomainError("experiment " + exp + " needs instance " + ::saab::to_string(want) + ", got " + kind);
    }
  };
  switch (experiment) {
    case ExperimentKind::kCoverage:
    case ExperimentKind::kWidths:
    case ExperimentKind::kCurves:
      if (k != ProblemKind::kQuadraticRisk && k != ProblemKind::kGaussianVar && k != ProblemKind::kCvar) {
        throw DomainError("experiment " + exp + " needs instance quadratic, gaussian-var or cvar, got " + kind);
      }
      break;
    case ExperimentKind::kMinimax: need_kind(ProblemKind::kMinimaxCvar); break;
    case ExperimentKind::kConstrained:
      need_kind(ProblemKind::kConstrainedCvar);
      require(instance.n == 2, "constrained experiment uses the two-asset instance, got n = " +
                                   std::to_string(instance.n));
      break;
    case ExperimentKind::kHardCase:
      need_kind(ProblemKind::kHardCase);
      require(N <= instance.n, "hard case needs n_samples <= n, got n_samples = " + std::to_string(N) +
                                   " > n = " + std::to_string(instance.n));
      break;
  }
  if (experiment == ExperimentKind::kCurves) {
    require(!curve_sizes.empty(), "curves need at least one sample size");
    for (auto s : curve_sizes) require(s >= 1, "curve sample sizes must be positive");
    require(std::is_sorted(curve_sizes.begin(), curve_sizes.end()), "curve sample sizes must be increasing");
  }
  if (experiment == ExperimentKind::kMinimax) {
    require(minimax_risk > 0.0 && minimax_risk < 1.0, "minimax_risk must lie in (0,1)");
  }
  const int min_n = k == ProblemKind::kCvar ? 0 : (k == ProblemKind::kHardCase ? 3 : 1);
  require(instance.n >= min_n, "instance dimension n = " + std::to_string(instance.n) + " below " +
                                   std::to_string(min_n) + " for " + kind);
  if ((k == ProblemKind::kCvar || k == ProblemKind::kMinimaxCvar) && instance.n > kMaxScenarioSetDim) {
    throw CapabilityError("the exact optimum of " + kind + " is computed by enumeration, limited to n <= " +
                          std::to_string(kMaxScenarioSetDim) + ", got n = " + std::to_string(instance.n));
  }
  if (k == ProblemKind::kCvar || k == ProblemKind::kMinimaxCvar || k == ProblemKind::kConstrainedCvar) {
    require(instance.eps > 0.0 && instance.eps < 1.0, "eps must lie in (0,1)");
  }
}

// One instance of the family described by `s`.
inline ProblemInstance draw_instance(const InstanceSpec& s, Rng& rng) {
  switch (s.kind) {
    case ProblemKind::kQuadraticRisk: return draw_quadratic_instance(s.n, s.kappa0, s.kappa1, rng);
    case ProblemKind::kGaussianVar: return draw_gaussian_var_instance(s.n, s.kappa0, s.kappa1, s.improved_m2, rng);
    case ProblemKind::kCvar: return draw_cvar_instance(s.n, s.kappa0, s.kappa1, s.eps, rng);
    case ProblemKind::kMinimaxCvar: {
      Vector theta(s.n);
      for (int i = 0; i < s.n; ++i) theta(i) = rng.uniform();
      return build_minimax_instance_from_theta(s.eps, theta);
    }
    case ProblemKind::kConstrainedCvar: return build_constrained_instance(s.eps, s.chi);
    case ProblemKind::kHardCase: break;
  }
  throw DomainError("draw_instance: the hard-case instance is built from a seed, not drawn");
}

// The instance of replication 0 for a given seed; hard cases are built from
// the seed directly.
inline ProblemInstance make_instance(const InstanceSpec& s, std::uint64_t seed) {
  if (s.kind == ProblemKind::kHardCase) return build_hard_case(s.n, seed);
  Rng rng(seed, stream_id(0, StreamPurpose::kInstance));
  ProblemInstance inst = draw_instance(s, rng);
  inst.seed = seed;
  return inst;
}



// ---------------------------------------------------------------------------
// Config as key=value text. Missing keys keep the values of `base`.

inline std::string to_key_value(const ExperimentConfig& c) {
  std::vector<double> sizes(c.curve_sizes.begin(), c.curve_sizes.end());
  std::string out;
  auto put = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
  put("experiment", to_string(c.experiment));
  put("instance", to_string(c.instance.kind));
  put("n", std::to_string(c.instance.n));
  put("kappa0", format_double(c.instance.kappa0));
  put("kappa1", format_double(c.instance.kappa1));
  put("eps", format_double(c.instance.eps));
  put("chi", format_double(c.instance.chi));
  put("improved_m2", c.instance.improved_m2 ? "true" : "false");
  put("n_samples", std::to_string(c.N));
  put("reps", std::to_string(c.reps));
  put("alpha", format_double(c.alpha));
  put("seed", std::to_string(c.seed));
  put("fixed_instance", c.fixed_instance ? "true" : "false");
  put("exclusion", c.exclusion ? "true" : "false");
  put("minimax_risk", format_double(c.minimax_risk));
  put("curve_sizes", format_vector(Eigen::Map<const Vector>(sizes.data(), static_cast<Eigen::Index>(sizes.size()))));
  put("smd_step_scale", format_double(c.smd_step_scale));
  put("tol", format_double(c.tol));
  put("workers", std::to_string(c.workers));
  return out;
}

namespace detail {
inline std::int64_t to_count(double v, const std::string& key) {
  if (!(v >= 0.0 && v <= 9.0e15) || std::floor(v) != v) {
    throw DomainError("key '" + key + "' needs a nonnegative integer, got " + format_double(v));
  }
  return static_cast<std::int64_t>(v);
}
}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text, const ExperimentConfig& base) {
  KeyValueRecord rec = KeyValueRecord::parse(text);
  ExperimentConfig c = base;
  if (rec.has("experiment")) {
    const ExperimentKind kind = parse_experiment_kind(rec.get("experiment"));
    if (kind != base.experiment) c = default_config(kind);
  }
  if (rec.has("instance")) c.instance.kind = parse_problem_kind(rec.get("instance"));
  if (rec.has("n")) c.instance.n = static_cast<int>(detail::to_count(rec.get_double("n"), "n"));
  if (rec.has("kappa0")) c.instance.kappa0 = rec.get_double("kappa0");
  if (rec.has("kappa1")) c.instance.kappa1 = rec.get_double("kappa1");
  if (rec.has("eps")) c.instance.eps = rec.get_double("eps");
  if (rec.has("chi")) c.instance.chi = rec.get_double("chi");
  if (rec.has("improved_m2")) c.instance.improved_m2 = rec.get_bool("improved_m2");
  if (rec.has("n_samples")) c.N = detail::to_count(rec.get_double("n_samples"), "n_samples");
  if (rec.has("reps")) c.reps = detail::to_count(rec.get_double("reps"), "reps");
  if (rec.has("alpha")) c.alpha = rec.get_double("alpha");
  if (rec.has("seed")) c.seed = rec.get_u64("seed");
  if (rec.has("fixed_instance")) c.fixed_instance = rec.get_bool("fixed_instance");
  if (rec.has("exclusion")) c.exclusion = rec.get_bool("exclusion");
  if (rec.has("minimax_risk")) c.minimax_risk = rec.get_double("minimax_risk");
  if (rec.has("curve_sizes")) {
    const Vector v = rec.get_vector("curve_sizes");
    c.curve_sizes.clear();
    for (Eigen::Index i = 0; i < v.size(); ++i) c.curve_sizes.push_back(detail::to_count(v(i), "curve_sizes"));
  }
  if (rec.has("smd_step_scale")) c.smd_step_scale = rec.get_double("smd_step_scale");
  if (rec.has("tol")) c.tol = rec.get_double("tol");
  if (rec.has("workers")) c.workers = static_cast<int>(detail::to_count(rec.get_double("workers"), "workers"));
  rec.finish();
  return c;
}

// ---------------------------------------------------------------------------
// Reports.

struct ReportRow {
  std::string statistic;
  double value = 0.0;
  double se = 0.0;
  std::int64_t excluded = 0;
};

struct CurvePoint {
  std::int64_t N = 0;
  std::string method;
  double mean_gap = 0.0;
  double se = 0.0;
};

struct ReplicationFailure {
  std::int64_t replication = 0;
  std::string message;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  std::vector<CurvePoint> curve;
  std::int64_t completed = 0;  // replications that ran (successfully or not)
  std::int64_t retained = 0;
  std::int64_t excluded = 0;
  std::vector<ReplicationFailure> failures;
  bool interrupted = false;
  double runtime_seconds = 0.0;

  std::int64_t failed() const { return static_cast<std::int64_t>(failures.size()); }

  const ReportRow& row(const std::string& statistic) const {
    for (const auto& r : rows) {
      if (r.statistic == statistic) return r;
    }
    throw DomainError("report has no statistic '" + statistic + "'");
  }
  double value(const std::string& statistic) const { return row(statistic).value; }
};

inline void write_report_csv(std::ostream& os, const ExperimentReport& rep, bool echo_config = true) {
  const ExperimentConfig& c = rep.config;
  if (echo_config) {
    const std::string kv = to_key_value(c);
    std::size_t start = 0;
    while (start < kv.size()) {
      const std::size_t end = kv.find('\n', start);
      os << "# " << kv.substr(start, end - start) << '\n';
      start = end + 1;
    }
  }
  os << "experiment,instance_kind,n,N,alpha,reps,statistic,value,se,excluded,seed\n";
  for (const auto& r : rep.rows) {
    os << to_string(c.experiment) << ',' << to_string(c.instance.kind) << ',' << c.instance.n << ',' << c.N
       << ',' << format_double(c.alpha) << ',' << rep.completed << ',' << r.statistic << ','
       << format_double(r.value) << ',' << format_double(r.se) << ',' << r.excluded << ',' << c.seed << '\n';
  }
}

inline void write_curve_csv(std::ostream& os, const ExperimentReport& rep) {
  os << "N,method,mean_gap,se\n";
  for (const auto& p : rep.curve) {
    os << p.N << ',' << p.method << ',' << format_double(p.mean_gap) << ',' << format_double(p.se) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Shared machinery.

namespace detail {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

inline Estimate mean_estimate(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  const double m = mean(v);
  if (v.size() < 2) return {m, 0.0};
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  const double var = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

inline Estimate frequency(std::int64_t hits, std::int64_t total) {
  if (total <= 0) return {std::nan(""), std::nan("")};
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(total))};
}

// Instance used by replication `rep`, and its optimal value.
class InstanceSource {
 public:
  explicit InstanceSource(const ExperimentConfig& c) : config_(c) {
    if (c.fixed_instance || c.instance.kind == ProblemKind::kHardCase) {
      fixed_ = make_instance(c.instance, c.seed);
      opt_ = true_opt(fixed_, solve_options());
      has_fixed_ = true;
    }
  }

  std::pair<ProblemInstance, double> get(std::int64_t rep) const {
    if (has_fixed_) return {fixed_, opt_};
    Rng rng(config_.seed, stream_id(static_cast<std::uint64_t>(rep), StreamPurpose::kInstance));
    ProblemInstance inst = draw_instance(config_.instance, rng);
    const double opt = true_opt(inst, solve_options());
    return {std::move(inst), opt};
  }

 private:
  SolveOptions solve_options() const {
    SolveOptions o;
    o.tol = config_.tol;
    return o;
  }

  ExperimentConfig config_;
  ProblemInstance fixed_;
  double opt_ = 0.0;
  bool has_fixed_ = false;
};

inline Matrix draw_sample(const ProblemInstance& inst, std::int64_t N, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed, stream);
  return sample_matrix(inst, N, rng);
}

inline SaaOptions saa_options(const ExperimentConfig& c) {
  SaaOptions o;
  o.tol = c.tol;
  return o;
}

enum class SlotState : char { kNotRun, kDone, kFailed };

// Runs body for every replication. Solver breakdowns (NumericError,
// ConvergenceError) are recorded as failed replications; any other error
// aborts the experiment.
template <class Outcome>
std::vector<SlotState> run_replications(const ExperimentConfig& c, std::int64_t count, std::vector<Outcome>& out,
                                        const std::function<Outcome(std::int64_t)>& body,
                                        ExperimentReport& report, const std::atomic<bool>* cancel) {
  out.assign(static_cast<std::size_t>(count), Outcome{});
  std::vector<SlotState> state(static_cast<std::size_t>(count), SlotState::kNotRun);
  std::vector<std::string> errors(static_cast<std::size_t>(count));
  parallel_for(
      count, c.workers,
      [&](std::int64_t r) {
        const auto i = static_cast<std::size_t>(r);
        try {
          out[i] = body(r);
          state[i] = SlotState::kDone;
        } catch (const NumericError& e) {
          errors[i] = e.what();
          state[i] = SlotState::kFailed;
        } catch (const ConvergenceError& e) {
          errors[i] = e.what();
          state[i] = SlotState::kFailed;
        }
      },
      cancel);
  for (std::int64_t r = 0; r < count; ++r) {
    const auto s = state[static_cast<std::size_t>(r)];
    if (s == SlotState::kNotRun) {
      report.interrupted = true;
      continue;
    }
    ++report.completed;
    if (s == SlotState::kFailed) report.failures.push_back({r, errors[static_cast<std::size_t>(r)]});
  }
  return state;
}

inline void add_row(ExperimentReport& rep, const std::string& stat, double value, double se = 0.0,
                    std::int64_t excluded = 0) {
  rep.rows.push_back({stat, value, se, excluded});
}

inline void add_row(ExperimentReport& rep, const std::string& stat, const Estimate& e, std::int64_t excluded = 0) {
  rep.rows.push_back({stat, e.value, e.se, excluded});
}

inline void add_accounting(ExperimentReport& rep) {
  add_row(rep, "replications", static_cast<double>(rep.completed));
  add_row(rep, "retained", static_cast<double>(rep.retained));
  add_row(rep, "excluded", static_cast<double>(rep.excluded));
  add_row(rep, "failed", static_cast<double>(rep.failed()));
}

inline std::uint64_t stream(std::int64_t rep, StreamPurpose p) {
  return stream_id(static_cast<std::uint64_t>(rep), p);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Both intervals of one replication.
struct IntervalOutcome {
  double opt = 0.0;
  ConfidenceInterval asymptotic;
  ConfidenceInterval saa;
};

inline IntervalOutcome interval_replication(const ExperimentConfig& c, const InstanceSource& src, std::int64_t r) {
  const auto [inst, opt] = src.get(r);
  const Matrix xi = draw_sample(inst, c.N, c.seed, stream(r, StreamPurpose::kSample));
  const SaaResult saa = solve_saa(inst, xi, saa_options(c));
  const Matrix xbar = draw_sample(inst, c.N, c.seed, stream(r, StreamPurpose::kEvaluation));
  const Vector values = scenario_values(inst, saa.solution.x, xbar).col(0);
  const std::span<const double> vs(values.data(), static_cast<std::size_t>(values.size()));
  IntervalOutcome o;
  o.opt = opt;
  o.asymptotic = ci_asymptotic(vs, c.alpha);
  o.saa = ci_saa_experimental(saa.solution.value, mean(vs), c.alpha, c.N, inst.constants, inst.geometry);
  return o;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments.

inline ExperimentReport run_coverage(const ExperimentConfig& c, const std::atomic<bool>* cancel = nullptr) {
  c.validate();
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.config = c;
  const detail::InstanceSource src(c);
  std::vector<detail::IntervalOutcome> out;
  const auto state = detail::run_replications<detail::IntervalOutcome>(
      c, c.reps, out, [&](std::int64_t r) { return detail::interval_replication(c, src, r); }, rep, cancel);
  std::int64_t n_ok = 0, cover_a = 0, cover_saa = 0, degenerate = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (state[i] != detail::SlotState::kDone) continue;
    ++n_ok;
    cover_a += out[i].asymptotic.contains(out[i].opt);
    cover_saa += out[i].saa.contains(out[i].opt);
    degenerate += out[i].asymptotic.degenerate;
  }
  rep.retained = n_ok;
  detail::add_row(rep, "coverage_asymptotic", detail::frequency(cover_a, n_ok));
  detail::add_row(rep, "coverage_saa", detail::frequency(cover_saa, n_ok));
  detail::add_row(rep, "degenerate_asymptotic", detail::frequency(degenerate, n_ok));
  detail::add_accounting(rep);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

inline ExperimentReport run_width_ratios(const ExperimentConfig& c, const std::atomic<bool>* cancel = nullptr) {
  c.validate();
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.config = c;
  const detail::InstanceSource src(c);
  std::vector<detail::IntervalOutcome> out;
  const auto state = detail::run_replications<detail::IntervalOutcome>(
      c, c.reps, out, [&](std::int64_t r) { return detail::interval_replication(c, src, r); }, rep, cancel);
  std::vector<double> ratios;
  std::int64_t below_one = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (state[i] != detail::SlotState::kDone) continue;
    const auto& o = out[i];
    const double wa = o.asymptotic.width();
    if (!(wa > 0.0) || (c.exclusion && !o.asymptotic.contains(o.opt))) {
      ++rep.excluded;
      continue;
    }
    const double ratio = o.saa.width() / wa;
    ratios.push_back(ratio);
    below_one += ratio < 1.0;
  }
  rep.retained = static_cast<std::int64_t>(ratios.size());
  if (ratios.empty()) {
    throw RangeError("width ratios: all " + std::to_string(rep.completed) +
                     " replications were excluded or failed; no ratio to report");
  }
  detail::add_row(rep, "width_ratio", detail::mean_estimate(ratios), rep.excluded);
  detail::add_row(rep, "ratio_below_one", static_cast<double>(below_one), 0.0, rep.excluded);
  detail::add_accounting(rep);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// Parameters of the non-asymptotic minimax lower bound: the total risk is
// split equally over its three tail terms.
struct MinimaxBoundParams {
  double mu = 0.0;
  double s = 1.0;
  double lambda = 0.0;
  double risk = 0.0;
};

inline MinimaxBoundParams minimax_bound_params(double total_risk, std::int64_t N) {
  detail::require(total_risk > 0.0 && total_risk < 1.0, "minimax risk must lie in (0,1)");
  const double part = total_risk / 3.0;
  MinimaxBoundParams p;
  p.mu = detail::mu_for_risk(part);
  p.s = std::sqrt(1.0 + std::log(2.0 / part) / static_cast<double>(N));
  p.lambda = detail::mu_for_risk(part / 2.0);
  p.risk = risks_minimax(p.mu, p.s, p.lambda, N, 3).lower;
  return p;
}

inline ExperimentReport run_minimax_lower_bound(const ExperimentConfig& c,
                                                const std::atomic<bool>* cancel = nullptr) {
  c.validate();
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.config = c;
  const detail::InstanceSource src(c);
  const MinimaxBoundParams bp = minimax_bound_params(c.minimax_risk, c.N);
  const double q = normal_quantile(1.0 - c.alpha / 3.0);
  struct Outcome {
    double opt = 0.0, opt_n = 0.0, asymptotic = 0.0, guaranteed = 0.0;
  };
  std::vector<Outcome> out;
  const auto state = detail::run_replications<Outcome>(
      c, c.reps, out,
      [&](std::int64_t r) {
        const auto [inst, opt] = src.get(r);
        const Matrix xi = detail::draw_sample(inst, c.N, c.seed, detail::stream(r, StreamPurpose::kSample));
        const SaaResult saa = solve_saa(inst, xi, detail::saa_options(c));
        const Matrix xbar = detail::draw_sample(inst, c.N, c.seed, detail::stream(r, StreamPurpose::kEvaluation));
        const Matrix vals = scenario_values(inst, saa.solution.x, xbar);
        Outcome o;
        o.opt = opt;
        o.opt_n = saa.solution.value;
        o.asymptotic = -kInf;
        for (Eigen::Index i = 0; i < vals.cols(); ++i) {
          const double m = vals.col(i).mean();
          const double sd = std::sqrt(std::max(0.0, (vals.col(i).array() - m).square().mean()));
          o.asymptotic = std::max(o.asymptotic, m - q * sd / std::sqrt(static_cast<double>(c.N)));
        }
        o.guaranteed = o.opt_n - minimax_lower_margin(bp.mu, bp.s, bp.lambda, c.N, inst.constants, inst.geometry);
        return o;
      },
      rep, cancel);
  std::int64_t n_ok = 0, fail_a = 0, fail_g = 0;
  std::vector<double> opt, opt_n, lb_a, lb_g;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (state[i] != detail::SlotState::kDone) continue;
    ++n_ok;
    fail_a += out[i].asymptotic > out[i].opt;
    fail_g += out[i].guaranteed > out[i].opt;
    opt.push_back(out[i].opt);
    opt_n.push_back(out[i].opt_n);
    lb_a.push_back(out[i].asymptotic);
    lb_g.push_back(out[i].guaranteed);
  }
  rep.retained = n_ok;
  detail::add_row(rep, "asymptotic_failure_rate", detail::frequency(fail_a, n_ok));
  detail::add_row(rep, "asymptotic_failures", static_cast<double>(fail_a));
  detail::add_row(rep, "guaranteed_failure_rate", detail::frequency(fail_g, n_ok));
  detail::add_row(rep, "guaranteed_failures", static_cast<double>(fail_g));
  detail::add_row(rep, "mean_opt", detail::mean_estimate(opt));
  detail::add_row(rep, "mean_saa_opt", detail::mean_estimate(opt_n));
  detail::add_row(rep, "mean_asymptotic_bound", detail::mean_estimate(lb_a));
  detail::add_row(rep, "mean_guaranteed_bound", detail::mean_estimate(lb_g));
  detail::add_row(rep, "guaranteed_risk", bp.risk);
  detail::add_row(rep, "guaranteed_mu", bp.mu);
  detail::add_row(rep, "guaranteed_s", bp.s);
  detail::add_row(rep, "guaranteed_lambda", bp.lambda);
  detail::add_accounting(rep);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

inline ExperimentReport run_constrained_stability(const ExperimentConfig& c,
                                                  const std::atomic<bool>* cancel = nullptr) {
  c.validate();
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.config = c;
  const ProblemInstance inst = make_instance(c.instance, c.seed);
  const auto& p = inst.as<ConstrainedParams>();
  const double delta = constrained_relaxation(inst, c.N);
  struct Outcome {
    bool infeasible = false, infeasible_relaxed = false;
    double opt_n = 0.0, opt_n_relaxed = 0.0, mu_x = 0.0, mu_x_relaxed = 0.0;
  };
  std::vector<Outcome> out;
  const auto state = detail::run_replications<Outcome>(
      c, c.reps, out,
      [&](std::int64_t r) {
        const Matrix xi = detail::draw_sample(inst, c.N, c.seed, detail::stream(r, StreamPurpose::kSample));
        SaaOptions so = detail::saa_options(c);
        const SaaResult plain = solve_saa(inst, xi, so);
        so.constraint_relaxation = delta;
        const SaaResult relaxed = solve_saa(inst, xi, so);
        Outcome o;
        o.infeasible = !plain.feasible();
        o.infeasible_relaxed = !relaxed.feasible();
        if (plain.feasible()) {
          o.opt_n = plain.solution.value;
          o.mu_x = p.mean.dot(plain.solution.x.tail(p.mean.size()));
        }
        if (relaxed.feasible()) {
          o.opt_n_relaxed = relaxed.solution.value;
          o.mu_x_relaxed = p.mean.dot(relaxed.solution.x.tail(p.mean.size()));
        }
        return o;
      },
      rep, cancel);
  std::int64_t n_ok = 0, inf = 0, inf_r = 0;
  std::vector<double> opt_n, opt_r, mux, mux_r;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (state[i] != detail::SlotState::kDone) continue;
    const auto& o = out[i];
    ++n_ok;
    inf += o.infeasible;
    inf_r += o.infeasible_relaxed;
    if (!o.infeasible) {
      opt_n.push_back(o.opt_n);
      mux.push_back(o.mu_x);
    }
    if (!o.infeasible_relaxed) {
      opt_r.push_back(o.opt_n_relaxed);
      mux_r.push_back(o.mu_x_relaxed);
    }
  }
  rep.retained = n_ok;
  detail::add_row(rep, "infeasible_rate", detail::frequency(inf, n_ok));
  detail::add_row(rep, "infeasible_rate_relaxed", detail::frequency(inf_r, n_ok));
  detail::add_row(rep, "infeasibility_probability_mean_only", constrained_infeasibility_probability(inst, c.N));
  detail::add_row(rep, "infeasibility_probability_exact", constrained_infeasibility_probability_exact(inst, c.N));
  detail::add_row(rep, "relaxation_delta", delta);
  detail::add_row(rep, "true_opt", constrained_true_solution(inst, p.chi).value);
  detail::add_row(rep, "true_opt_relaxed", constrained_true_solution(inst, p.chi - delta).value);
  detail::add_row(rep, "mean_saa_opt", detail::mean_estimate(opt_n), inf);
  detail::add_row(rep, "mean_saa_opt_relaxed", detail::mean_estimate(opt_r), inf_r);
  detail::add_row(rep, "mean_mu_x", detail::mean_estimate(mux), inf);
  detail::add_row(rep, "mean_mu_x_relaxed", detail::mean_estimate(mux_r), inf_r);
  detail::add_accounting(rep);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

inline ExperimentReport run_hard_case(const ExperimentConfig& c, const std::atomic<bool>* cancel = nullptr) {
  c.validate();
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.config = c;
  const detail::InstanceSource src(c);
  const ProblemInstance inst = src.get(0).first;
  const auto& p = inst.as<HardCaseParams>();
  struct Outcome {
    bool event = false;
    double saa_value = 0.0;  // sample objective at the adversarial point
    double gap = 0.0;        // f at that point minus Opt = 0
  };
  std::vector<Outcome> out;
  const auto state = detail::run_replications<Outcome>(
      c, c.reps, out,
      [&](std::int64_t r) {
        const Matrix xi = detail::draw_sample(inst, c.N, c.seed, detail::stream(r, StreamPurpose::kSample));
        Outcome o;
        for (Eigen::Index k = 0; k < xi.cols(); ++k) {
          if (xi.col(k).isZero(0.0)) {
            const Vector x = p.centers.row(k).transpose();
            o.event = true;
            o.saa_value = saa_objective(inst, x, xi);
            o.gap = exact_f(inst, x);
            break;
          }
        }
        return o;
      },
      rep, cancel);
  std::int64_t n_ok = 0, events = 0;
  std::vector<double> gaps;
  double max_saa = 0.0, max_dev = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (state[i] != detail::SlotState::kDone) continue;
    ++n_ok;
    if (!out[i].event) continue;
    ++events;
    gaps.push_back(out[i].gap);
    max_saa = std::max(max_saa, std::fabs(out[i].saa_value));
    max_dev = std::max(max_dev, std::fabs(out[i].gap - p.elevation));
  }
  rep.retained = n_ok;
  const double K = static_cast<double>(p.centers.rows());
  detail::add_row(rep, "event_frequency", detail::frequency(events, n_ok));
  detail::add_row(rep, "event_probability", 1.0 - std::pow(1.0 - std::ldexp(1.0, -static_cast<int>(c.N)), K));
  detail::add_row(rep, "event_probability_bound", 1.0 - std::exp(-1.0));
  detail::add_row(rep, "centers", K);
  detail::add_row(rep, "elevation", p.elevation);
  detail::add_row(rep, "conditional_gap", detail::mean_estimate(gaps), n_ok - events);
  detail::add_row(rep, "conditional_gap_max_deviation", max_dev, 0.0, n_ok - events);
  detail::add_row(rep, "saa_value_max", max_saa, 0.0, n_ok - events);
  detail::add_accounting(rep);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

// Least-squares slope of log(gap) against log(N) over the points with a
// positive gap.
inline double loglog_slope(const std::vector<std::int64_t>& sizes, const std::vector<double>& gaps) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (gaps[i] > 0.0) {
      lx.push_back(std::log(static_cast<double>(sizes[i])));
      ly.push_back(std::log(gaps[i]));
    }
  }
  if (lx.size() < 2) return std::nan("");
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

inline ExperimentReport run_inaccuracy_curves(const ExperimentConfig& c,
                                              const std::atomic<bool>* cancel = nullptr) {
  c.validate();
  detail::Stopwatch clock;
  ExperimentReport rep;
  rep.config = c;
  const detail::InstanceSource src(c);
  const auto& sizes = c.curve_sizes;
  const auto G = static_cast<std::int64_t>(sizes.size());
  struct Outcome {
    double saa = 0.0, smd = 0.0;
    bool certified = true;
  };
  // Slot r * G + g holds replication r at sample size sizes[g].
  std::vector<Outcome> out;
  const auto state = detail::run_replications<Outcome>(
      c, c.reps * G, out,
      [&](std::int64_t slot) {
        const std::int64_t r = slot / G;
        const std::int64_t N = sizes[static_cast<std::size_t>(slot % G)];
        const auto [inst, opt] = src.get(r);
        const Matrix xi = detail::draw_sample(inst, N, c.seed, detail::stream(slot, StreamPurpose::kSample));
        const SaaResult saa = solve_saa(inst, xi, detail::saa_options(c));
        SmdOptions so;
        so.step_scale = c.smd_step_scale;
        const SmdRun smd = run_smd(inst, N, c.seed, detail::stream(slot, StreamPurpose::kSmd), so);
        return Outcome{exact_f(inst, saa.solution.x) - opt, exact_f(inst, smd.iterates_avg) - opt,
                       smd.certificate_holds()};
      },
      rep, cancel);
  std::vector<double> mean_saa(sizes.size()), mean_smd(sizes.size()), se_saa(sizes.size()), se_smd(sizes.size());
  std::int64_t uncertified = 0;
  for (std::int64_t g = 0; g < G; ++g) {
    std::vector<double> a, b;
    for (std::int64_t r = 0; r < c.reps; ++r) {
      const auto i = static_cast<std::size_t>(r * G + g);
      if (state[i] != detail::SlotState::kDone) continue;
      a.push_back(out[i].saa);
      b.push_back(out[i].smd);
      uncertified += !out[i].certified;
    }
    const auto ea = detail::mean_estimate(a), eb = detail::mean_estimate(b);
    const auto gi = static_cast<std::size_t>(g);
    mean_saa[gi] = ea.value;
    se_saa[gi] = ea.se;
    mean_smd[gi] = eb.value;
    se_smd[gi] = eb.se;
    rep.curve.push_back({sizes[gi], "saa", ea.value, ea.se});
    rep.curve.push_back({sizes[gi], "smd", eb.value, eb.se});
  }
  // A curve counts as decreasing when no step goes up by more than two
  // standard errors of the difference.
  auto monotone = [&](const std::vector<double>& m, const std::vector<double>& se) {
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
      if (m[i + 1] > m[i] + 2.0 * std::hypot(se[i], se[i + 1])) return 0.0;
    }
    return 1.0;
  };
  rep.retained = rep.completed - rep.failed();
  detail::add_row(rep, "slope_saa", loglog_slope(sizes, mean_saa));
  detail::add_row(rep, "slope_smd", loglog_slope(sizes, mean_smd));
  detail::add_row(rep, "decreasing_saa", monotone(mean_saa, se_saa));
  detail::add_row(rep, "decreasing_smd", monotone(mean_smd, se_smd));
  detail::add_row(rep, "saa_below_smd_at_largest_n", mean_saa.back() < mean_smd.back() ? 1.0 : 0.0);
  detail::add_row(rep, "smd_uncertified_runs", static_cast<double>(uncertified));
  detail::add_accounting(rep);
  rep.runtime_seconds = clock.seconds();
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& c, const std::atomic<bool>* cancel = nullptr) {
  switch (c.experiment) {
    case ExperimentKind::kCoverage: return run_coverage(c, cancel);
    case ExperimentKind::kWidths: return run_width_ratios(c, cancel);
    case ExperimentKind::kMinimax: return run_minimax_lower_bound(c, cancel);
    case ExperimentKind::kConstrained: return run_constrained_stability(c, cancel);
    case ExperimentKind::kHardCase: return run_hard_case(c, cancel);
    case ExperimentKind::kCurves: return run_inaccuracy_curves(c, cancel);
  }
  throw DomainError("unknown experiment");
}

}  // namespace saab
