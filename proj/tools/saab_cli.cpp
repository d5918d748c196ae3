// Copyright 2026 The saab Authors
// SPDX-License-Identifier: Apache-2.0

// saab: confidence bounds and Monte Carlo experiments for sample average
// approximation.
//
// Exit codes:
//   0    success
//   1    the report was written but some replications failed
//   2    command-line parse error
//   3    invalid parameter (domain, range or capability error)
//   4    any other runtime error (numerical breakdown, I/O)
//   130  interrupted; the partial report was written

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "saab/saab.hpp"

namespace {

using saab::format_double;

constexpr int kExitFailedReplications = 1;
constexpr int kExitParse = 2;
constexpr int kExitDomain = 3;
constexpr int kExitRuntime = 4;
constexpr int kExitInterrupted = 130;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw saab::DomainError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  if (text == "auto") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }
  return saab::parse_u64(text, what);
}

// SAAB_SEED, when set, replaces the built-in default seed.
std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("SAAB_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return parse_seed(v, "SAAB_SEED");
}

saab::GeometrySpec parse_geometry(const std::string& name, int dim) {
  if (name == "euclidean") return saab::euclidean_geometry(dim);
  if (name == "simplex") return saab::simplex_geometry(dim);
  if (name == "mixed") return saab::mixed_geometry(dim);
  throw saab::DomainError("geometry must be euclidean, simplex or mixed, got '" + name + "'");
}

saab::ParamRule parse_rule(const std::string& name) {
  if (name == "min-width") return saab::ParamRule::kMinWidth;
  if (name == "equal-split") return saab::ParamRule::kEqualSplit;
  if (name == "tied-risk") return saab::ParamRule::kTiedRisk;
  throw saab::DomainError("rule must be min-width, equal-split or tied-risk, got '" + name + "'");
}

void print_pairs(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv, bool csv) {
  if (csv) {
    for (std::size_t i = 0; i < kv.size(); ++i) os << (i ? "," : "") << kv[i].first;
    os << '\n';
    for (std::size_t i = 0; i < kv.size(); ++i) os << (i ? "," : "") << kv[i].second;
    os << '\n';
  } else {
    for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
  }
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsArgs {
  double alpha = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  std::int64_t N = 0;
  std::string geometry = "euclidean";
  int dim = 1;
  std::string rule = "tied-risk";
  double opt_n = 0.0;
  bool csv = false;
};

int cmd_bounds(const BoundsArgs& a) {
  const saab::GeometrySpec geo = parse_geometry(a.geometry, a.dim);
  const saab::MomentConstants consts{a.m1, a.m2};
  const saab::BoundParams p = saab::optimize_ci_params(a.alpha, a.N, consts, geo, parse_rule(a.rule));
  const double lower = saab::bound_a(p.mu1, p.N, consts.m1);
  const double upper = saab::bound_b(p.mu2, p.s, p.lambda, p.N, consts, geo);
  const saab::ConfidenceInterval ci = saab::ci_saa_theoretical(a.opt_n, p, consts, geo);
  const double wbar = saab::lower_width(a.alpha, a.m1, a.N);
  if (!(wbar > 0.0)) {
    std::cerr << "warning: the width lower bound is 0 for alpha = " << format_double(a.alpha)
              << " (normal quantile of 1 - alpha is not positive); ratio is infinite\n";
  }
  const double ratio = wbar > 0.0 ? ci.width() / wbar : saab::kInf;
  print_pairs(std::cout,
              {{"alpha", format_double(a.alpha)},
               {"m1", format_double(a.m1)},
               {"m2", format_double(a.m2)},
               {"n_samples", std::to_string(a.N)},
               {"geometry", a.geometry},
               {"omega", format_double(geo.omega_cap)},
               {"radius", format_double(geo.radius)},
               {"rule", a.rule},
               {"mu1", format_double(p.mu1)},
               {"mu2", format_double(p.mu2)},
               {"s", format_double(p.s)},
               {"lambda", format_double(p.lambda)},
               {"a", format_double(lower)},
               {"b", format_double(upper)},
               {"beta", format_double(saab::risk_beta(p).value)},
               {"low", format_double(ci.low)},
               {"up", format_double(ci.up)},
               {"width", format_double(ci.width())},
               {"width_lower_bound", format_double(wbar)},
               {"ratio", format_double(ratio)}},
              a.csv);
  return 0;
}

// ---------------------------------------------------------------------------
// Instance flags shared by constants, solve and experiment.

struct InstanceFlags {
  std::optional<std::string> kind;
  std::optional<int> n;
  std::optional<double> kappa0, kappa1, eps, chi;
  std::optional<bool> improved_m2;

  void add_to(CLI::App* app) {
    app->add_option("--instance", kind, "quadratic, gaussian-var, cvar, minimax, constrained or hardcase");
    app->add_option("--n", n, "problem dimension");
    app->add_option("--kappa0", kappa0, "weight of the mean term");
    app->add_option("--kappa1", kappa1, "weight of the risk term");
    app->add_option("--eps", eps, "CVaR level");
    app->add_option("--chi", chi, "constraint right-hand side (constrained)");
    app->add_option("--improved-m2", improved_m2, "Gaussian VaR: use the sharper sup constant (true/false)");
  }

  void apply(saab::InstanceSpec& s) const {
    if (kind) s.kind = saab::parse_problem_kind(*kind);
    if (n) s.n = *n;
    if (kappa0) s.kappa0 = *kappa0;
    if (kappa1) s.kappa1 = *kappa1;
    if (eps) s.eps = *eps;
    if (chi) s.chi = *chi;
    if (improved_m2) s.improved_m2 = *improved_m2;
  }
};

// ---------------------------------------------------------------------------
// constants

struct ConstantsArgs {
  InstanceFlags inst;
  double sigma_max = std::sqrt(6.0);
  double cap_angle = 0.125;
};

int cmd_constants(const ConstantsArgs& a) {
  if (!a.inst.kind) throw saab::DomainError("--instance is required");
  saab::InstanceSpec s;
  a.inst.apply(s);
  std::vector<std::pair<std::string, std::string>> out{{"instance", saab::to_string(s.kind)}};
  saab::MomentConstants c;
  switch (s.kind) {
    case saab::ProblemKind::kQuadraticRisk: c = saab::constants_quadratic(s.kappa0, s.kappa1); break;
    case saab::ProblemKind::kGaussianVar: {
      c = saab::constants_gaussian_var(s.kappa0, s.kappa1, a.sigma_max, s.n, s.improved_m2);
      out.emplace_back("sigma_max", format_double(a.sigma_max));
      out.emplace_back("sup_constant", format_double(1.0 / saab::gaussian_tn(a.sigma_max, s.n)));
      out.emplace_back("sup_constant_plain", format_double(saab::gaussian_sup_constant(a.sigma_max, s.n)));
      break;
    }
    case saab::ProblemKind::kCvar: c = saab::constants_cvar(s.kappa0, s.kappa1, s.eps, s.n); break;
    case saab::ProblemKind::kMinimaxCvar: c = saab::constants_minimax(s.eps); break;
    case saab::ProblemKind::kConstrainedCvar:
      c = saab::build_constrained_instance(s.eps, s.chi).constants;
      break;
    case saab::ProblemKind::kHardCase: {
      const double delta = saab::hard_case_elevation(a.cap_angle);
      c = saab::constants_hard_case(delta);
      out.emplace_back("elevation", format_double(delta));
      break;
    }
  }
  if (s.kind == saab::ProblemKind::kGaussianVar || s.kind == saab::ProblemKind::kCvar) {
    out.emplace_back("n", std::to_string(s.n));
  }
  out.emplace_back("m1", format_double(c.m1));
  out.emplace_back("m2", format_double(c.m2));
  print_pairs(std::cout, out, false);
  return 0;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  InstanceFlags inst;
  std::optional<std::string> instance_file;
  std::optional<std::string> write_instance;
  std::int64_t N = 100;
  std::optional<std::string> seed;
  std::string form = "auto";
  double tol = 1e-8;
  double relaxation = 0.0;
  bool evaluate = false;
};

int cmd_solve(const SolveArgs& a) {
  std::uint64_t seed = 1;
  if (auto e = env_seed()) seed = *e;
  if (a.seed) seed = parse_seed(*a.seed, "seed");
  saab::ProblemInstance inst;
  if (a.instance_file) {
    inst = saab::parse_instance(read_file(*a.instance_file));
  } else {
    if (!a.inst.kind) throw saab::DomainError("either --instance or --instance-file is required");
    saab::InstanceSpec s;
    a.inst.apply(s);
    inst = saab::make_instance(s, seed);
  }
  if (a.write_instance) {
    std::ofstream os(*a.write_instance);
    if (!os) throw std::runtime_error("cannot write '" + *a.write_instance + "'");
    os << saab::to_key_value(inst);
  }
  saab::SaaOptions opt;
  opt.tol = a.tol;
  opt.constraint_relaxation = a.relaxation;
  if (a.form == "auto") {
    opt.form = saab::LpForm::kAuto;
  } else if (a.form == "primal") {
    opt.form = saab::LpForm::kPrimal;
  } else if (a.form == "dual") {
    opt.form = saab::LpForm::kDual;
  } else {
    throw saab::DomainError("form must be auto, primal or dual, got '" + a.form + "'");
  }
  const saab::Sample smp = saab::sample(inst, a.N, seed, saab::stream_id(0, saab::StreamPurpose::kSample));
  const saab::SaaResult res = saab::solve_saa(inst, smp.xi, opt);
  std::vector<std::pair<std::string, std::string>> out{
      {"instance", saab::to_string(inst.kind)},
      {"n", std::to_string(inst.n())},
      {"n_samples", std::to_string(a.N)},
      {"seed", std::to_string(seed)},
      {"status", saab::to_string(res.status)},
  };
  if (res.feasible()) {
    if (res.solution.certificate != saab::Certificate::kFwGap)
      out.emplace_back("form", res.form == saab::LpForm::kDual ? "dual" : "primal");
    out.emplace_back("opt_n", format_double(res.solution.value));
    out.emplace_back("gap", format_double(res.solution.gap));
    out.emplace_back("certificate",
                     res.solution.certificate == saab::Certificate::kFwGap ? "frank-wolfe-gap" : "primal-dual");
    out.emplace_back("x", saab::format_vector(res.solution.x));
    if (a.evaluate) {
      const double opt_true = saab::true_opt(inst);
      out.emplace_back("f_x", format_double(saab::exact_f(inst, res.solution.x)));
      out.emplace_back("opt", format_double(opt_true));
    }
  }
  print_pairs(std::cout, out, false);
  return 0;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
  saab::ExperimentKind kind = saab::ExperimentKind::kCoverage;
  std::optional<std::string> config_file;
  InstanceFlags inst;
  std::optional<std::int64_t> N, reps;
  std::optional<double> alpha, minimax_risk, smd_step_scale, tol;
  std::optional<std::string> seed;
  std::optional<bool> fixed_instance, exclusion;
  std::optional<std::vector<std::int64_t>> curve_sizes;
  std::optional<int> workers;
  std::optional<std::string> output, curves_output;
};

saab::ExperimentConfig resolve_config(const ExperimentArgs& a) {
  saab::ExperimentConfig c = saab::default_config(a.kind);
  if (auto e = env_seed()) c.seed = *e;
  if (a.config_file) {
    c = saab::parse_experiment_config(read_file(*a.config_file), c);
    if (c.experiment != a.kind) {
      throw saab::DomainError("config file '" + *a.config_file + "' is for experiment " +
                              saab::to_string(c.experiment) + ", not " + saab::to_string(a.kind));
    }
  }
  a.inst.apply(c.instance);
  if (a.N) c.N = *a.N;
  if (a.reps) c.reps = *a.reps;
  if (a.alpha) c.alpha = *a.alpha;
  if (a.minimax_risk) c.minimax_risk = *a.minimax_risk;
  if (a.smd_step_scale) c.smd_step_scale = *a.smd_step_scale;
  if (a.tol) c.tol = *a.tol;
  if (a.seed) c.seed = parse_seed(*a.seed, "seed");
  if (a.fixed_instance) c.fixed_instance = *a.fixed_instance;
  if (a.exclusion) c.exclusion = *a.exclusion;
  if (a.curve_sizes) c.curve_sizes = *a.curve_sizes;
  if (a.workers) c.workers = *a.workers;
  c.validate();
  return c;
}

std::string curves_path(const std::string& output) {
  const std::string ext = ".csv";
  if (output.size() > ext.size() && output.compare(output.size() - ext.size(), ext.size(), ext) == 0) {
    return output.substr(0, output.size() - ext.size()) + ".curves.csv";
  }
  return output + ".curves.csv";
}

void write_or_throw(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << text;
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

int cmd_experiment(const ExperimentArgs& a) {
  const saab::ExperimentConfig c = resolve_config(a);
  std::signal(SIGINT, on_sigint);
  const saab::ExperimentReport rep = saab::run_experiment(c, &g_interrupted);

  std::ostringstream report;
  saab::write_report_csv(report, rep);
  std::ostringstream curve;
  if (c.experiment == saab::ExperimentKind::kCurves) saab::write_curve_csv(curve, rep);
  if (a.output) {
    write_or_throw(*a.output, report.str());
    write_or_throw(*a.output + ".cfg", saab::to_key_value(c));
    if (c.experiment == saab::ExperimentKind::kCurves) {
      write_or_throw(a.curves_output ? *a.curves_output : curves_path(*a.output), curve.str());
    }
  } else {
    std::cout << report.str();
    if (c.experiment == saab::ExperimentKind::kCurves) {
      if (a.curves_output) {
        write_or_throw(*a.curves_output, curve.str());
      } else {
        std::cout << '\n' << curve.str();
      }
    }
    std::cout.flush();
  }

  std::cerr << saab::to_string(c.experiment) << ": " << rep.completed << " replications, " << rep.failed()
            << " failed, " << rep.excluded << " excluded, seed " << c.seed << ", "
            << format_double(std::round(rep.runtime_seconds * 100.0) / 100.0) << " s\n";
  for (const auto& f : rep.failures) {
    std::cerr << "replication " << f.replication << " failed: " << f.message << '\n';
  }
  if (rep.interrupted) {
    std::cerr << "interrupted; partial report written\n";
    return kExitInterrupted;
  }
  return rep.failures.empty() ? 0 : kExitFailedReplications;
}

void add_experiment_options(CLI::App* sub, ExperimentArgs& a) {
  sub->add_option("--config", a.config_file, "key=value config file; flags override its entries");
  a.inst.add_to(sub);
  sub->add_option("--n-samples,-N", a.N, "sample size N");
  sub->add_option("--reps", a.reps, "number of replications");
  sub->add_option("--alpha", a.alpha, "risk of the confidence intervals");
  sub->add_option("--seed", a.seed, "random seed, or 'auto' (default: $SAAB_SEED, else 1)");
  sub->add_option("--fixed-instance", a.fixed_instance, "one instance for all replications (true/false)");
  sub->add_option("--exclusion", a.exclusion,
                  "width ratios: keep only replications whose asymptotic interval covers Opt (true/false)");
  sub->add_option("--minimax-risk", a.minimax_risk, "total risk of the guaranteed minimax lower bound");
  sub->add_option("--curve-sizes", a.curve_sizes, "sample sizes of the inaccuracy curves")->delimiter(',');
  sub->add_option("--smd-step-scale", a.smd_step_scale, "multiplier of the mirror descent step");
  sub->add_option("--tol", a.tol, "solver tolerance");
  sub->add_option("--workers", a.workers, "worker threads (0: one per hardware thread)");
  sub->add_option("--output,-o", a.output, "CSV report path (default: stdout); the config goes to <path>.cfg");
  sub->add_option("--curves-output", a.curves_output, "curve CSV path (default: <output>.curves.csv)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-asymptotic confidence bounds for sample average approximation"};
  app.require_subcommand(1);

  BoundsArgs bounds;
  auto* b = app.add_subcommand("bounds", "confidence interval widths and parameters");
  b->add_option("--alpha", bounds.alpha, "risk")->required();
  b->add_option("--m1", bounds.m1, "constant M1")->required();
  b->add_option("--m2", bounds.m2, "constant M2")->required();
  b->add_option("--n-samples,-N", bounds.N, "sample size N")->required();
  b->add_option("--geometry", bounds.geometry, "euclidean, simplex or mixed")->capture_default_str();
  b->add_option("--dim", bounds.dim, "dimension of the geometry")->capture_default_str();
  b->add_option("--rule", bounds.rule, "risk allocation: tied-risk, min-width or equal-split")
      ->capture_default_str();
  b->add_option("--opt-n", bounds.opt_n, "SAA optimal value for the interval endpoints")->capture_default_str();
  b->add_flag("--csv", bounds.csv, "print a CSV header and row");

  ConstantsArgs constants;
  auto* k = app.add_subcommand("constants", "moment constants M1, M2 of the instance families");
  constants.inst.add_to(k);
  k->add_option("--sigma-max", constants.sigma_max, "Gaussian VaR: largest coordinate std")->capture_default_str();
  k->add_option("--cap-angle", constants.cap_angle, "hard case: cap angle")->capture_default_str();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "solve one sample average approximation with a certificate");
  solve.inst.add_to(s);
  s->add_option("--instance-file", solve.instance_file, "instance as key=value text");
  s->add_option("--write-instance", solve.write_instance, "save the instance as key=value text");
  s->add_option("--n-samples,-N", solve.N, "sample size N")->capture_default_str();
  s->add_option("--seed", solve.seed, "random seed, or 'auto'");
  s->add_option("--form", solve.form, "LP form: auto, primal or dual")->capture_default_str();
  s->add_option("--tol", solve.tol, "solver tolerance")->capture_default_str();
  s->add_option("--relaxation", solve.relaxation, "constrained: subtract from the right-hand side");
  s->add_flag("--evaluate", solve.evaluate, "also print f(x) and the true optimum");

  auto* e = app.add_subcommand("experiment", "Monte Carlo experiments");
  e->require_subcommand(1);
  std::vector<ExperimentArgs> exp_args(6);
  const std::vector<std::pair<saab::ExperimentKind, std::string>> experiments{
      {saab::ExperimentKind::kCoverage, "coverage of the asymptotic and SAA intervals"},
      {saab::ExperimentKind::kWidths, "mean width ratio of the SAA and asymptotic intervals"},
      {saab::ExperimentKind::kMinimax, "failures of asymptotic and guaranteed minimax lower bounds"},
      {saab::ExperimentKind::kConstrained, "stability of a stochastically constrained SAA"},
      {saab::ExperimentKind::kHardCase, "SAA solution quality on the spherical-cap instance"},
      {saab::ExperimentKind::kCurves, "mean inaccuracy of SAA and mirror descent against N"},
  };
  std::vector<CLI::App*> exp_cmds;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    exp_args[i].kind = experiments[i].first;
    auto* sub = e->add_subcommand(saab::to_string(experiments[i].first), experiments[i].second);
    add_experiment_options(sub, exp_args[i]);
    exp_cmds.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (b->parsed()) return cmd_bounds(bounds);
    if (k->parsed()) return cmd_constants(constants);
    if (s->parsed()) return cmd_solve(solve);
    for (std::size_t i = 0; i < exp_cmds.size(); ++i) {
      if (exp_cmds[i]->parsed()) return cmd_experiment(exp_args[i]);
    }
  } catch (const saab::DomainError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitDomain;
  } catch (const saab::RangeError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitDomain;
  } catch (const saab::CapabilityError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitRuntime;
  }
  return kExitParse;
}
