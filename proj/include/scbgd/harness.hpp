#pragma once

#include "scbgd/format.hpp"
#include "scbgd/problems.hpp"
#include "scbgd/solver.hpp"
#include "scbgd/types.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace scbgd {

struct MethodSpec {
  Method method = Method::gd;
  Index q = 1;
  double delta = 1.0;

  /// Row label for comparison tables, e.g. "SCBGD (q=10, δ=1)".
  [[nodiscard]] std::string label() const {
    switch (method) {
      case Method::gd: return delta == 1.0 ? "GD" : "GD (δ=" + shortest(delta) + ")";
      case Method::scbgd: return "SCBGD (q=" + std::to_string(q) + ", δ=" + shortest(delta) + ")";
      case Method::rowblock_gd: return "SGD row-block (q=" + std::to_string(q) + ", δ=" + shortest(delta) + ")";
    }
    return "?";
  }
};

struct ExperimentConfig {
  std::string problem;
  std::vector<Index> dimensions;
  std::vector<MethodSpec> methods;
  int repetitions = 10;
  double tol = 1e-6;
  std::int64_t max_iter = 200000;
  std::uint64_t base_seed = 1;
  ResidualMode residual_mode = ResidualMode::automatic;
  unsigned workers = 1;
  std::string csv_path;
  std::string table_path;

  void validate() const {
    if (problem.empty()) throw InvalidConfigError("experiment needs a problem");
    if (dimensions.empty()) throw InvalidConfigError("experiment needs at least one dimension");
    if (methods.empty()) throw InvalidConfigError("experiment needs at least one [method] section");
    if (repetitions < 1) throw InvalidConfigError("repetitions must be at least 1");
    if (workers < 1) throw InvalidConfigError("workers must be at least 1");
    for (Index n : dimensions) {
      if (n <= 0) throw InvalidConfigError("dimensions must be positive");
    }
  }

  [[nodiscard]] SolverConfig solver_config(const MethodSpec& m, std::uint64_t seed) const {
    SolverConfig c;
    c.method = m.method;
    c.q = m.q;
    c.delta = m.delta;
    c.tol = tol;
    c.max_iter = max_iter;
    c.seed = seed;
    c.residual_mode = residual_mode;
    return c;
  }
};

struct RunRecord {
  MethodSpec spec;
  std::string problem;
  Index n = 0;
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
  bool converged = false;
  std::string error;  ///< non-empty when the solve threw

  [[nodiscard]] bool failed() const { return !error.empty(); }
};

/// One (method, n) cell. Means are taken over converged runs only; the cell
/// counts as converged only if every repetition converged.
struct CellSummary {
  MethodSpec spec;
  Index n = 0;
  double mean_iterations = std::numeric_limits<double>::quiet_NaN();
  double mean_seconds = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::vector<RunRecord> runs;
};

struct BenchmarkReport {
  std::string problem;
  std::vector<Index> dimensions;
  std::vector<MethodSpec> methods;
  std::vector<CellSummary> cells;  ///< method-major, in config order

  [[nodiscard]] const CellSummary& cell(std::size_t method, std::size_t dim) const {
    return cells.at(method * dimensions.size() + dim);
  }

  /// True when no run ended in an evaluation error.
  [[nodiscard]] bool all_completed() const {
    for (const auto& c : cells)
      for (const auto& r : c.runs)
        if (r.failed()) return false;
    return true;
  }
};

inline CellSummary summarize(const MethodSpec& spec, Index n, std::vector<RunRecord> runs) {
  CellSummary cell;
  cell.spec = spec;
  cell.n = n;
  cell.runs = std::move(runs);
  double it = 0.0;
  double sec = 0.0;
  int converged = 0;
  for (const auto& r : cell.runs) {
    if (!r.converged) continue;
    it += static_cast<double>(r.iterations);
    sec += r.wall_seconds;
    ++converged;
  }
  if (converged > 0) {
    cell.mean_iterations = it / converged;
    cell.mean_seconds = sec / converged;
  }
  cell.converged = !cell.runs.empty() && converged == static_cast<int>(cell.runs.size());
  return cell;
}

/// Single repetition: builds the problem, then solves with seed base_seed + rep.
inline RunRecord run_single(const ExperimentConfig& config, const MethodSpec& spec, Index n, int rep) {
  RunRecord rec;
  rec.spec = spec;
  rec.problem = config.problem;
  rec.n = n;
  rec.seed = config.base_seed + static_cast<std::uint64_t>(rep);
  try {
    const ProblemInstance problem = make_problem(config.problem, n);
    const SolveResult res = solve(problem, config.solver_config(spec, rec.seed));
    rec.iterations = res.iterations;
    rec.final_residual = res.final_residual();
    rec.wall_seconds = res.wall_seconds;
    rec.converged = res.converged();
  } catch (const Error& e) {
    rec.error = e.what();
  }
  return rec;
}

/// Runs every (method, n, repetition) combination. Problem construction is
/// outside the timed region. With workers > 1 repetitions run concurrently;
/// the report order is (method, n, rep) regardless.
inline BenchmarkReport run_experiment(const ExperimentConfig& config,
                                      const std::function<void(const RunRecord&)>& on_run = {}) {
  config.validate();
  if (std::find(registered_problems().begin(), registered_problems().end(), config.problem) ==
      registered_problems().end()) {
    throw RegistryError("unknown problem '" + config.problem + "'");
  }

  struct Job {
    std::size_t method;
    std::size_t dim;
    int rep;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < config.methods.size(); ++m)
    for (std::size_t d = 0; d < config.dimensions.size(); ++d)
      for (int r = 0; r < config.repetitions; ++r) jobs.push_back({m, d, r});

  std::vector<RunRecord> records(jobs.size());
  std::mutex report_mutex;
  auto execute = [&](std::size_t i) {
    const Job& job = jobs[i];
    records[i] = run_single(config, config.methods[job.method], config.dimensions[job.dim], job.rep);
    if (on_run) {
      std::lock_guard lock(report_mutex);
      on_run(records[i]);
    }
  };

  if (config.workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < config.workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) execute(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  BenchmarkReport report;
  report.problem = config.problem;
  report.dimensions = config.dimensions;
  report.methods = config.methods;
  const auto reps = static_cast<std::size_t>(config.repetitions);
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (std::size_t d = 0; d < config.dimensions.size(); ++d) {
      const std::size_t first = (m * config.dimensions.size() + d) * reps;
      std::vector<RunRecord> runs(records.begin() + static_cast<std::ptrdiff_t>(first),
                                  records.begin() + static_cast<std::ptrdiff_t>(first + reps));
      report.cells.push_back(summarize(config.methods[m], config.dimensions[d], std::move(runs)));
    }
  }
  return report;
}

inline constexpr const char* kRunCsvHeader =
    "method,problem,n,q,delta,seed,iterations,final_residual,wall_time_s,converged";
inline constexpr const char* kTraceCsvHeader = "iteration,residual_norm,cumulative_seconds";

/// One row per run. For gd the q column holds n (the full column block).
inline void write_csv(const BenchmarkReport& report, std::ostream& out) {
  out << kRunCsvHeader << '\n';
  for (const auto& cell : report.cells) {
    for (const auto& r : cell.runs) {
      const Index q = r.spec.method == Method::gd ? r.n : r.spec.q;
      out << to_string(r.spec.method) << ',' << r.problem << ',' << r.n << ',' << q << ',' << shortest(r.spec.delta)
          << ',' << r.seed << ',' << r.iterations << ',' << shortest(r.final_residual) << ','
          << shortest(r.wall_seconds) << ',' << (r.converged ? "true" : "false") << '\n';
    }
  }
}

namespace detail {

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  writer(out);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

inline void export_csv(const BenchmarkReport& report, const std::string& path) {
  detail::write_file(path, [&](std::ostream& out) { write_csv(report, out); });
}

inline void write_trace(const SolveResult& result, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& s : result.trace) {
    out << s.iteration << ',' << shortest(s.residual_norm) << ',' << shortest(s.seconds) << '\n';
  }
}

inline void export_trace(const SolveResult& result, const std::string& path) {
  detail::write_file(path, [&](std::ostream& out) { write_trace(result, out); });
}

/// Text table in the layout of the published comparisons: one IT line and
/// one CPU line per method, one column per dimension, "--" where any
/// repetition failed to converge.
inline std::string compare_table(const BenchmarkReport& report) {
  if (report.cells.empty()) throw InvalidConfigError("cannot tabulate an empty report");

  auto fmt_it = [](double v) {
    char buf[32];
    if (v == std::round(v)) {
      std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
      std::snprintf(buf, sizeof buf, "%.1f", v);
    }
    return std::string(buf);
  };
  auto fmt_cpu = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Method", "n"});
  for (Index n : report.dimensions) rows.back().push_back(std::to_string(n));
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    std::vector<std::string> it{report.methods[m].label(), "IT"};
    std::vector<std::string> cpu{"", "CPU"};
    for (std::size_t d = 0; d < report.dimensions.size(); ++d) {
      const CellSummary& c = report.cell(m, d);
      it.push_back(c.converged ? fmt_it(c.mean_iterations) : "--");
      cpu.push_back(c.converged ? fmt_cpu(c.mean_seconds) : "--");
    }
    rows.push_back(std::move(it));
    rows.push_back(std::move(cpu));
  }

  // Width in code points so the δ in labels does not skew alignment.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], width(r[i]));

  std::ostringstream out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      line += r[i] + std::string(widths[i] - width(r[i]), ' ');
      if (i + 1 < r.size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

/// Parses the experiment config format:
///
///   # comment
///   [experiment]
///   problem = broyden
///   dimensions = 200, 400
///   repetitions = 10
///   [method]
///   method = scbgd
///   q = 10
///   delta = 1
///
/// Errors carry the offending line number.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  enum class Section { none, experiment, method } section = Section::none;
  bool saw_experiment = false;
  std::vector<std::size_t> method_lines;
  std::vector<bool> method_has_name;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line == "[experiment]") {
        if (saw_experiment) throw ConfigParseError(lineno, "duplicate [experiment] section");
        saw_experiment = true;
        section = Section::experiment;
      } else if (line == "[method]") {
        section = Section::method;
        cfg.methods.emplace_back();
        method_lines.push_back(lineno);
        method_has_name.push_back(false);
      } else {
        throw ConfigParseError(lineno, "unknown section " + std::string(line));
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigParseError(lineno, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty() || value.empty()) throw ConfigParseError(lineno, "expected 'key = value'");

    auto need_double = [&] {
      const auto v = parse_double(value);
      if (!v) throw ConfigParseError(lineno, key + ": not a number: " + value);
      return *v;
    };
    auto need_int = [&] {
      const auto v = parse_int(value);
      if (!v) throw ConfigParseError(lineno, key + ": not an integer: " + value);
      return *v;
    };

    try {
      if (section == Section::experiment) {
        if (key == "problem") {
          cfg.problem = value;
        } else if (key == "dimensions") {
          cfg.dimensions.clear();
          std::string_view rest = value;
          while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = rest.substr(0, comma);
            const auto v = parse_int(item);
            if (!v || *v <= 0) throw ConfigParseError(lineno, "dimensions: bad entry '" + std::string(trim(item)) + "'");
            cfg.dimensions.push_back(static_cast<Index>(*v));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
          }
        } else if (key == "repetitions") {
          const auto v = need_int();
          if (v < 1) throw ConfigParseError(lineno, "repetitions must be at least 1");
          cfg.repetitions = static_cast<int>(v);
        } else if (key == "tol") {
          cfg.tol = need_double();
        } else if (key == "max_iter") {
          cfg.max_iter = need_int();
        } else if (key == "base_seed") {
          const auto v = parse_uint(value);
          if (!v) throw ConfigParseError(lineno, "base_seed: not an unsigned integer: " + value);
          cfg.base_seed = *v;
        } else if (key == "residual_mode") {
          cfg.residual_mode = parse_residual_mode(value);
        } else if (key == "workers") {
          const auto v = need_int();
          if (v < 1) throw ConfigParseError(lineno, "workers must be at least 1");
          cfg.workers = static_cast<unsigned>(v);
        } else if (key == "csv") {
          cfg.csv_path = value;
        } else if (key == "table") {
          cfg.table_path = value;
        } else {
          throw ConfigParseError(lineno, "unknown key '" + key + "' in [experiment]");
        }
      } else if (section == Section::method) {
        MethodSpec& m = cfg.methods.back();
        if (key == "method") {
          m.method = parse_method(value);
          method_has_name.back() = true;
        } else if (key == "q") {
          const auto v = need_int();
          if (v < 1) throw ConfigParseError(lineno, "q must be at least 1");
          m.q = static_cast<Index>(v);
        } else if (key == "delta") {
          const double d = need_double();
          if (!(d > 0.0 && d < 2.0)) throw ConfigParseError(lineno, "delta must lie in (0, 2)");
          m.delta = d;
        } else {
          throw ConfigParseError(lineno, "unknown key '" + key + "' in [method]");
        }
      } else {
        throw ConfigParseError(lineno, "key outside of a section");
      }
    } catch (const ConfigParseError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigParseError(lineno, e.what());
    }
  }

  if (!saw_experiment) throw ConfigParseError(0, "missing [experiment] section");
  if (cfg.problem.empty()) throw ConfigParseError(0, "[experiment] lacks 'problem'");
  if (cfg.dimensions.empty()) throw ConfigParseError(0, "[experiment] lacks 'dimensions'");
  if (cfg.methods.empty()) throw ConfigParseError(0, "no [method] sections");
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    if (!method_has_name[i]) throw ConfigParseError(method_lines[i], "[method] section lacks 'method'");
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  return parse_experiment_config(in);
}

}  // namespace scbgd
