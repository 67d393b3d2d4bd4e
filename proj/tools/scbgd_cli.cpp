// Command-line front end: solve, bench, verify and trace.
//
// Exit status: 0 success, 1 runtime failure (or no convergence), 2 usage error.

#include "scbgd/scbgd.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct SolveFlags {
  std::string problem;
  long long n = 0;
  std::string method;
  long long q = 10;
  double delta = 1.0;
  double tol = 1e-6;
  long long max_iter = 200000;
  std::uint64_t seed = 0;
  std::string residual_mode = "auto";
  std::string linear_file;
  std::string out;
};

void add_solve_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--problem", f.problem, "Problem: broyden, li-tridiagonal, identity, or linear (with --linear-file)")
      ->required();
  cmd->add_option("--n", f.n, "Dimension (inferred from --linear-file for linear problems)");
  cmd->add_option("--method", f.method, "Method")->required()->check(CLI::IsMember({"gd", "scbgd", "rowblock-gd"}));
  cmd->add_option("--q", f.q, "Block size for scbgd and rowblock-gd")->capture_default_str();
  cmd->add_option("--delta", f.delta, "Relaxation in (0, 2)")->capture_default_str();
  cmd->add_option("--tol", f.tol, "Stop when ||f(x)||_2 <= tol")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "Iteration cap")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed of the block sampler")->capture_default_str();
  cmd->add_option("--residual-mode", f.residual_mode, "Residual refresh: auto, full or incremental")
      ->check(CLI::IsMember({"auto", "full", "incremental"}))
      ->capture_default_str();
  cmd->add_option("--linear-file", f.linear_file, "Linear system file: \"m n\", m rows of A, then b");
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

scbgd::ProblemInstance build_problem(const SolveFlags& f) {
  if (f.problem == "linear") {
    if (f.linear_file.empty()) throw UsageError("--problem linear requires --linear-file");
    auto problem = scbgd::make_linear(scbgd::load_linear_problem(f.linear_file), "linear");
    if (f.n != 0 && f.n != problem.n()) throw UsageError("--n does not match the column count of --linear-file");
    return problem;
  }
  if (f.n <= 0) throw UsageError("--n is required and must be positive");
  try {
    return scbgd::make_problem(f.problem, f.n);
  } catch (const scbgd::RegistryError& e) {
    throw UsageError(e.what());
  } catch (const scbgd::InvalidProblemError& e) {
    throw UsageError(e.what());
  }
}

scbgd::SolverConfig build_config(const SolveFlags& f) {
  scbgd::SolverConfig c;
  c.method = scbgd::parse_method(f.method);
  c.q = f.q;
  c.delta = f.delta;
  c.tol = f.tol;
  c.max_iter = f.max_iter;
  c.seed = f.seed;
  c.residual_mode = scbgd::parse_residual_mode(f.residual_mode);
  return c;
}

void print_summary(const SolveFlags& f, const scbgd::ProblemInstance& p, const scbgd::SolveResult& r) {
  std::cout << f.method << ' ' << p.name() << ' ' << p.n() << ' ' << r.iterations << ' '
            << scbgd::shortest(r.final_residual()) << ' ' << scbgd::shortest(r.wall_seconds) << ' '
            << (r.converged() ? "true" : "false") << '\n';
}

int run_solve(const SolveFlags& f, bool write_trace) {
  std::optional<scbgd::ProblemInstance> problem;
  scbgd::SolverConfig config;
  try {
    problem.emplace(build_problem(f));
    config = build_config(f);
    config.validate(problem->n(), problem->m());
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const scbgd::InvalidConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const scbgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }

  try {
    const scbgd::SolveResult result = scbgd::solve(*problem, config);
    print_summary(f, *problem, result);
    if (write_trace) scbgd::export_trace(result, f.out);
    return result.converged() ? kOk : kRuntime;
  } catch (const scbgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

struct BenchFlags {
  std::string config;
  std::string csv;
  std::string table;
  unsigned workers = 0;
  bool quiet = false;
};

int run_bench(const BenchFlags& f) {
  scbgd::ExperimentConfig config;
  try {
    config = scbgd::load_experiment_config(f.config);
    if (!f.csv.empty()) config.csv_path = f.csv;
    if (!f.table.empty()) config.table_path = f.table;
    if (f.workers > 0) config.workers = f.workers;
    config.validate();
  } catch (const scbgd::ConfigParseError& e) {
    std::cerr << f.config << ": " << e.what() << '\n';
    return kUsage;
  } catch (const scbgd::Error& e) {
    std::cerr << f.config << ": " << e.what() << '\n';
    return kUsage;
  }

  scbgd::BenchmarkReport report;
  try {
    report = scbgd::run_experiment(config, [&](const scbgd::RunRecord& r) {
      if (f.quiet) return;
      std::cerr << scbgd::to_string(r.spec.method) << " n=" << r.n << " seed=" << r.seed << " IT=" << r.iterations
                << (r.failed() ? " error: " + r.error : (r.converged ? "" : " (not converged)")) << '\n';
    });
  } catch (const scbgd::RegistryError& e) {
    std::cerr << f.config << ": " << e.what() << '\n';
    return kUsage;
  } catch (const scbgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }

  const std::string table = scbgd::compare_table(report);
  std::cout << table;
  try {
    if (!config.csv_path.empty()) scbgd::export_csv(report, config.csv_path);
    if (!config.table_path.empty()) {
      std::ofstream out(config.table_path, std::ios::binary | std::ios::trunc);
      if (!(out << table)) throw scbgd::IoError("cannot write table: " + config.table_path);
    }
  } catch (const scbgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return report.all_completed() ? kOk : kRuntime;
}

int run_verify(const std::string& suite) {
  std::vector<std::string> suites;
  if (suite == "all") {
    suites = scbgd::verification_suites();
  } else {
    suites.push_back(suite);
  }
  bool ok = true;
  for (const auto& name : suites) {
    std::vector<scbgd::CheckLine> lines;
    try {
      lines = scbgd::run_suite(name);
    } catch (const scbgd::Error& e) {
      std::cerr << name << ": error: " << e.what() << '\n';
      return kRuntime;
    }
    std::size_t passed = 0;
    for (const auto& line : lines) {
      std::cout << scbgd::format_check(line) << '\n';
      passed += line.passed;
    }
    std::cout << name << ": " << passed << '/' << lines.size() << " checks passed\n";
    ok = ok && passed == lines.size();
  }
  return ok ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic column-block gradient descent for nonlinear systems"};
  app.require_subcommand(1);

  SolveFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "Run one solve and print: method problem n IT final_residual seconds converged");
  add_solve_flags(solve, solve_flags);

  SolveFlags trace_flags;
  auto* trace = app.add_subcommand("trace", "Run one solve and write the residual-versus-time trace CSV");
  add_solve_flags(trace, trace_flags);
  trace->add_option("--out", trace_flags.out, "Trace CSV path")->required();

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "Run an experiment config; print the comparison table and write CSV");
  bench->add_option("--config", bench_flags.config, "Experiment config file")->required();
  bench->add_option("--csv", bench_flags.csv, "Per-run CSV path (overrides the config)");
  bench->add_option("--table", bench_flags.table, "Table output path (overrides the config)");
  bench->add_option("--workers", bench_flags.workers, "Parallel repetitions (overrides the config)");
  bench->add_flag("--quiet", bench_flags.quiet, "Do not report progress on stderr");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run a verification suite and print one line per check");
  verify->add_option("--suite", suite, "Suite: descent, expectation, bounds, jacobian or all")
      ->required()
      ->check(CLI::IsMember({"descent", "expectation", "bounds", "jacobian", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (solve->parsed()) return run_solve(solve_flags, false);
  if (trace->parsed()) return run_solve(trace_flags, true);
  if (bench->parsed()) return run_bench(bench_flags);
  if (verify->parsed()) return run_verify(suite);
  return kUsage;
}
