#pragma once

#include "scbgd/analysis.hpp"
#include "scbgd/format.hpp"
#include "scbgd/problems.hpp"
#include "scbgd/sampling.hpp"
#include "scbgd/solver.hpp"
#include "scbgd/steps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace scbgd {

/// One line of a verification report.
struct CheckLine {
  std::string name;
  std::string instance;
  double measured = 0.0;
  std::string bound;  ///< human-readable threshold, e.g. "< 0" or "<= 1e-05"
  bool passed = false;
};

inline std::string format_check(const CheckLine& c) {
  return c.name + " " + c.instance + " measured=" + shortest(c.measured) + " bound" + c.bound + " " +
         (c.passed ? "PASS" : "FAIL");
}

inline bool all_passed(const std::vector<CheckLine>& lines) {
  return std::all_of(lines.begin(), lines.end(), [](const CheckLine& c) { return c.passed; });
}

namespace detail {

inline Vector random_point(Rng& rng, Index n, double lo, double hi) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = rng.uniform(lo, hi);
  return x;
}

inline std::vector<ProblemInstance> benchmark_problems(Index n) {
  return {make_broyden(n), make_li_tridiagonal(n)};
}

}  // namespace detail

/// Analytic Jacobian columns against central differences, and declared row
/// supports against the numerically nonzero rows.
inline std::vector<CheckLine> jacobian_suite(std::uint64_t seed = 1, Index n = 10, int points = 100, double h = 1e-6,
                                             double rel_tol = 1e-5) {
  std::vector<CheckLine> lines;
  Rng rng(seed);
  for (const auto& problem : detail::benchmark_problems(n)) {
    double worst_rel = 0.0;
    double worst_off_support = 0.0;
    for (int p = 0; p < points; ++p) {
      const Vector x = detail::random_point(rng, n, -2.0, 2.0);
      const Matrix J = problem.jacobian(x);
      for (Index j = 0; j < n; ++j) {
        const Vector fd = finite_difference_column(problem, x, j, h);
        const double denom = std::max(J.col(j).norm(), std::numeric_limits<double>::min());
        worst_rel = std::max(worst_rel, (fd - J.col(j)).norm() / denom);
        const auto& support = problem.row_support(j);
        for (Index i = 0; i < problem.m(); ++i) {
          if (!std::binary_search(support.begin(), support.end(), i)) {
            worst_off_support = std::max({worst_off_support, std::abs(fd(i)), std::abs(J(i, j))});
          }
        }
      }
    }
    const std::string inst = problem.name() + "(n=" + std::to_string(n) + ",points=" + std::to_string(points) + ")";
    lines.push_back({"jacobian-fd", inst, worst_rel, "<=" + shortest(rel_tol), worst_rel <= rel_tol});
    lines.push_back({"row-support", inst, worst_off_support, "==0", worst_off_support == 0.0});
  }
  return lines;
}

/// Descent direction property of the column-block step on random states of
/// both benchmarks: d^T grad g < 0 and d^T grad g = -eta ||p||^2.
inline std::vector<CheckLine> descent_suite(std::uint64_t seed = 2, Index n = 50, Index q = 5, int draws = 1000,
                                            double delta = 1.0) {
  std::vector<CheckLine> lines;
  Rng rng(seed);
  for (const auto& problem : detail::benchmark_problems(n)) {
    double worst_inner = -std::numeric_limits<double>::infinity();
    double worst_identity = 0.0;
    int accepted = 0;
    int negative = 0;
    while (accepted < draws) {
      const Vector x = detail::random_point(rng, n, -2.0, 2.0);
      const BlockSelection block = sample_block(rng, n, q);
      const DescentCheck c = descent_direction_check(problem, x, block, delta);
      if (std::sqrt(c.p_norm_sq) <= 1e-8) continue;
      ++accepted;
      if (c.inner_product < 0.0) ++negative;
      worst_inner = std::max(worst_inner, c.inner_product);
      worst_identity = std::max(worst_identity, std::abs(c.inner_product - c.identity) / std::abs(c.identity));
    }
    const std::string inst = problem.name() + "(n=" + std::to_string(n) + ",q=" + std::to_string(q) +
                             ",draws=" + std::to_string(draws) + ",negative=" + std::to_string(negative) + ")";
    lines.push_back({"descent-sign", inst, worst_inner, "<0", negative == draws});
    lines.push_back({"descent-identity", inst, worst_identity, "<=1e-12", worst_identity <= 1e-12});
  }
  return lines;
}

/// Exhaustive expected-decrease inequality on a random well-conditioned
/// square linear system.
inline std::vector<CheckLine> expectation_suite(std::uint64_t seed = 3, Index n = 8, Index q = 2, int iterates = 100,
                                                const std::vector<double>& deltas = {0.5, 1.0}) {
  std::vector<CheckLine> lines;
  Rng rng(seed);
  LinearProblemSpec spec{random_well_conditioned(n, rng), Vector(n)};
  for (Index i = 0; i < n; ++i) spec.b(i) = rng.uniform(-1.0, 1.0);
  const ProblemInstance problem = make_linear(spec);

  for (double delta : deltas) {
    const TheoremConstants c = linear_theorem_constants(spec, q, delta);
    double worst_margin = -std::numeric_limits<double>::infinity();
    int held = 0;
    double blocks = 0.0;
    for (int t = 0; t < iterates; ++t) {
      const Vector x = detail::random_point(rng, n, -3.0, 3.0);
      const ExpectedDecrease e = expected_decrease_check(problem, c, x, q);
      blocks = e.blocks;
      worst_margin = std::max(worst_margin, e.expectation - e.bound);
      if (e.holds()) ++held;
    }
    const std::string inst = "linear(n=" + std::to_string(n) + ",q=" + std::to_string(q) + ",blocks=" +
                             shortest(blocks) + ",delta=" + shortest(delta) + ",iterates=" + std::to_string(iterates) +
                             ",held=" + std::to_string(held) + ")";
    lines.push_back({"expected-decrease", inst, worst_margin, "<=0", held == iterates});
  }
  return lines;
}

/// Rate-bound algebra plus a Monte-Carlo trajectory compared against the
/// linear-rate bound on a strongly convex linear instance.
inline std::vector<CheckLine> bounds_suite(std::uint64_t seed = 4, Index n = 8, Index q = 2, int runs = 200,
                                           int horizon = 500, double delta = 1.0) {
  std::vector<CheckLine> lines;
  Rng rng(seed);
  const Matrix A = random_well_conditioned(n, rng);
  const Vector x_star = detail::random_point(rng, n, -1.0, 1.0);
  const LinearProblemSpec spec{A, A * x_star};
  const ProblemInstance problem = make_linear(spec);
  const Vector x0 = detail::random_point(rng, n, -3.0, 3.0);

  TheoremConstants c = linear_theorem_constants(spec, q, delta);
  const double psi0 = 0.5 * problem.residual(x0).squaredNorm();

  std::vector<double> mean_gap(static_cast<std::size_t>(horizon) + 1, 0.0);
  double r0 = 0.0;
  for (int r = 0; r < runs; ++r) {
    Rng path(seed * 1000003ULL + static_cast<std::uint64_t>(r));
    Vector x = x0;
    Vector f = problem.residual(x);
    for (int k = 0; k <= horizon; ++k) {
      mean_gap[static_cast<std::size_t>(k)] += 0.5 * f.squaredNorm() / runs;
      r0 = std::max(r0, (x - x_star).norm());
      if (k == horizon) break;
      const StepOutcome s = scbgd_step(problem, x, f, sample_block(path, n, q), delta);
      x = s.next;
      f = problem.residual(x);
    }
  }
  c.R0 = r0;

  const std::string inst = "linear(n=" + std::to_string(n) + ",q=" + std::to_string(q) + ",delta=" + shortest(delta) +
                           ",runs=" + std::to_string(runs) + ",k<=" + std::to_string(horizon) + ")";

  double worst_excess = -std::numeric_limits<double>::infinity();
  bool below = true;
  for (int k = 1; k <= horizon; ++k) {
    const ConvergenceBounds b = convergence_bounds(c, k, psi0);
    const double excess = mean_gap[static_cast<std::size_t>(k)] - *b.linear;
    worst_excess = std::max(worst_excess, excess);
    if (excess > 0.0) below = false;
  }
  lines.push_back({"trajectory-vs-linear-bound", inst, worst_excess, "<=0", below});

  double worst_sub = -std::numeric_limits<double>::infinity();
  bool sub_ok = true;
  for (int k = 1; k <= horizon; ++k) {
    const double excess = mean_gap[static_cast<std::size_t>(k)] - convergence_bounds(c, k, psi0).sublinear;
    worst_sub = std::max(worst_sub, excess);
    if (excess > 0.0) sub_ok = false;
  }
  lines.push_back({"trajectory-vs-sublinear-bound", inst, worst_sub, "<=0", sub_ok});

  const ConvergenceBounds b1 = convergence_bounds(c, 1, psi0);
  lines.push_back({"sublinear-closed-form", inst, b1.sublinear, "==R0^2/(k*alpha)", b1.consistent});
  lines.push_back({"strong-convexity-side-condition", inst, 1.0 - 2.0 * *c.gamma * c.alpha(), ">=0",
                   b1.side_condition.value_or(false)});

  const double halving = convergence_bounds(c, 20, psi0).sublinear / convergence_bounds(c, 10, psi0).sublinear;
  lines.push_back({"sublinear-1/k-scaling", inst, halving, "==0.5", std::abs(halving - 0.5) <= 1e-15});

  const double pl = pl_rate_bound(c, horizon, psi0);
  const double lin = *convergence_bounds(c, horizon, psi0).linear;
  lines.push_back({"pl-equals-linear-when-mu=gamma", inst, pl - lin, "==0", pl == lin});
  return lines;
}

inline const std::vector<std::string>& verification_suites() {
  static const std::vector<std::string> names{"descent", "expectation", "bounds", "jacobian"};
  return names;
}

inline std::vector<CheckLine> run_suite(const std::string& name) {
  if (name == "descent") return descent_suite();
  if (name == "expectation") return expectation_suite();
  if (name == "bounds") return bounds_suite();
  if (name == "jacobian") return jacobian_suite();
  throw InvalidConfigError("unknown verification suite '" + name + "'");
}

}  // namespace scbgd
