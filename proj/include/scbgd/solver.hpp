#pragma once

#include "scbgd/block.hpp"
#include "scbgd/problems.hpp"
#include "scbgd/sampling.hpp"
#include "scbgd/steps.hpp"
#include "scbgd/types.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scbgd {

enum class Method { gd, scbgd, rowblock_gd };

enum class ResidualMode {
  automatic,    ///< incremental when the problem declares row supports, else full
  full,
  incremental,  ///< falls back to full without row supports
};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::gd: return "gd";
    case Method::scbgd: return "scbgd";
    case Method::rowblock_gd: return "rowblock-gd";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "gd") return Method::gd;
  if (s == "scbgd") return Method::scbgd;
  if (s == "rowblock-gd") return Method::rowblock_gd;
  throw InvalidConfigError("unknown method '" + s + "' (expected gd, scbgd or rowblock-gd)");
}

inline std::string to_string(ResidualMode m) {
  switch (m) {
    case ResidualMode::automatic: return "auto";
    case ResidualMode::full: return "full";
    case ResidualMode::incremental: return "incremental";
  }
  return "?";
}

inline ResidualMode parse_residual_mode(const std::string& s) {
  if (s == "auto") return ResidualMode::automatic;
  if (s == "full") return ResidualMode::full;
  if (s == "incremental") return ResidualMode::incremental;
  throw InvalidConfigError("unknown residual mode '" + s + "' (expected auto, full or incremental)");
}

struct SolverConfig {
  Method method = Method::scbgd;
  Index q = 1;  ///< ignored by gd
  double delta = 1.0;
  double tol = 1e-6;
  std::int64_t max_iter = 200000;
  std::uint64_t seed = 0;
  ResidualMode residual_mode = ResidualMode::automatic;
  std::int64_t stall_limit = 5000;  ///< consecutive degenerate steps before giving up
  std::int64_t time_stride = 100;   ///< wall-clock sampling stride in iterations

  /// Throws InvalidConfigError unless the config is usable on an n-column, m-row problem.
  void validate(Index n, Index m) const {
    check_relaxation(delta);
    if (!(tol >= 0.0)) throw InvalidConfigError("tolerance must be non-negative");
    if (max_iter < 0) throw InvalidConfigError("max_iter must be non-negative");
    if (stall_limit < 1) throw InvalidConfigError("stall limit must be positive");
    if (time_stride < 1) throw InvalidConfigError("time stride must be positive");
    const Index extent = method == Method::rowblock_gd ? m : n;
    if (method != Method::gd && (q < 1 || q > extent)) {
      throw InvalidConfigError("block size q=" + std::to_string(q) + " must satisfy 1 <= q <= " +
                               std::to_string(extent));
    }
  }
};

enum class Termination { converged, iteration_cap, degenerate_stall };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::iteration_cap: return "iteration-cap";
    case Termination::degenerate_stall: return "degenerate-stall";
  }
  return "?";
}

struct TraceSample {
  std::int64_t iteration = 0;
  double residual_norm = 0.0;
  double seconds = 0.0;
};

struct SolveResult {
  std::int64_t iterations = 0;
  Termination reason = Termination::iteration_cap;
  /// ||f(x_k)||_2 for k = 0..iterations.
  std::vector<double> residual_history;
  /// Wall-clock samples every `time_stride` iterations, plus the first and last iterate.
  std::vector<TraceSample> trace;
  double wall_seconds = 0.0;
  Vector x;

  [[nodiscard]] bool converged() const noexcept { return reason == Termination::converged; }
  [[nodiscard]] double final_residual() const { return residual_history.back(); }
};

/// Returns f(x_new) given f_old = f(x_old), where x_new and x_old differ only
/// on `changed_cols`. Only rows in the supports of the changed columns are
/// re-evaluated; all other rows are copied from f_old.
inline Vector incremental_residual_update(const ProblemInstance& problem, const Vector& f_old, const Vector& x_new,
                                          std::span<const Index> changed_cols) {
  if (!problem.has_row_supports()) {
    throw UnsupportedModeError(problem.name() + ": incremental residual update needs a row-support map");
  }
  if (f_old.size() != problem.m() || x_new.size() != problem.n()) {
    throw InvalidProblemError(problem.name() + ": dimension mismatch in incremental residual update");
  }
  Vector f = f_old;
  if (changed_cols.empty()) return f;
  for (Index i : problem.rows_touched(changed_cols)) {
    f(i) = problem.residual_row(x_new, i);
    if (!std::isfinite(f(i))) throw EvaluationError(problem.name() + ": non-finite residual");
  }
  return f;
}

/// Runs the configured method from `start` (or the problem's default start)
/// until ||f(x_k)||_2 <= tol, k reaches max_iter, or stall_limit consecutive
/// degenerate steps occur. Degenerate steps consume an iteration and leave x
/// unchanged. Evaluation failures are rethrown as SolveError.
inline SolveResult solve(const ProblemInstance& problem, const SolverConfig& config,
                         const std::optional<Vector>& start = std::nullopt) {
  config.validate(problem.n(), problem.m());
  using Clock = std::chrono::steady_clock;

  const bool incremental = config.method == Method::scbgd && problem.has_row_supports() &&
                           config.residual_mode != ResidualMode::full;

  SolveResult result;
  result.x = start ? *start : problem.default_start();
  if (result.x.size() != problem.n()) throw InvalidProblemError(problem.name() + ": start point has wrong dimension");
  result.residual_history.reserve(static_cast<std::size_t>(std::min<std::int64_t>(config.max_iter, 1 << 20)) + 1);

  Rng rng(config.seed);
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  std::int64_t k = 0;
  Vector f;
  try {
    f = problem.residual(result.x);
    if (!f.allFinite()) throw EvaluationError(problem.name() + ": non-finite residual");
  } catch (const Error& e) {
    throw SolveError(0, e.what());
  }
  double norm = f.norm();
  result.residual_history.push_back(norm);
  result.trace.push_back({0, norm, 0.0});

  std::int64_t degenerate_run = 0;
  for (;;) {
    if (norm <= config.tol) {
      result.reason = Termination::converged;
      break;
    }
    if (k >= config.max_iter) {
      result.reason = Termination::iteration_cap;
      break;
    }
    const std::int64_t attempt = k + 1;
    try {
      StepOutcome step;
      switch (config.method) {
        case Method::gd: step = gd_step(problem, result.x, f, config.delta); break;
        case Method::scbgd:
          step = scbgd_step(problem, result.x, f, sample_block(rng, problem.n(), config.q), config.delta);
          break;
        case Method::rowblock_gd:
          step = rowblock_gd_step(problem, result.x, f, sample_block(rng, problem.m(), config.q), config.delta);
          break;
      }
      ++k;
      if (step.degenerate) {
        ++degenerate_run;
      } else {
        degenerate_run = 0;
        result.x = std::move(step.next);
        if (incremental) {
          f = incremental_residual_update(problem, f, result.x, step.block.indices());
        } else {
          f = problem.residual(result.x);
          if (!f.allFinite()) throw EvaluationError(problem.name() + ": non-finite residual");
        }
        norm = f.norm();
      }
    } catch (const Error& e) {
      throw SolveError(attempt, e.what());
    }
    result.residual_history.push_back(norm);
    if (k % config.time_stride == 0) result.trace.push_back({k, norm, elapsed()});
    if (degenerate_run >= config.stall_limit) {
      result.reason = Termination::degenerate_stall;
      break;
    }
  }
  result.wall_seconds = elapsed();
  result.iterations = k;
  if (result.trace.back().iteration != k) result.trace.push_back({k, norm, result.wall_seconds});
  return result;
}

}  // namespace scbgd
