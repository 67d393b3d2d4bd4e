#pragma once

#include "scbgd/block.hpp"
#include "scbgd/problems.hpp"
#include "scbgd/types.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace scbgd {

/// Squared block-gradient norm at or below which a step is degenerate.
inline constexpr double kDegenerateThreshold = 1e-30;

inline void check_relaxation(double delta) {
  if (!(delta > 0.0 && delta < 2.0)) {
    throw InvalidConfigError("relaxation delta=" + std::to_string(delta) + " must lie in (0, 2)");
  }
}

struct StepSize {
  double eta = 0.0;
  bool degenerate = false;
};

/// eta = delta * ||p||^2 / ||w||^2 where p is the block gradient and w its image
/// under the Jacobian block. Returns eta = 0 and the degenerate flag when
/// ||p||^2 <= kDegenerateThreshold.
inline StepSize compute_step_size(const Vector& p_raw, const Vector& w, double delta) {
  const double pp = p_raw.squaredNorm();
  if (pp <= kDegenerateThreshold) return {0.0, true};
  const double ww = w.squaredNorm();
  if (ww == 0.0) {
    throw NumericalInconsistencyError("block image vanished while block gradient has squared norm " +
                                      std::to_string(pp));
  }
  return {delta * (pp / ww), false};
}

/// One update x_{k+1} = x_k - eta * scatter(p_raw, block).
///
/// For column blocks `block` holds the sampled columns and `w` is the full
/// m-vector B p_raw. For row blocks `block` holds the columns reached by the
/// sampled rows and `w` carries the image on those rows (zero elsewhere).
struct StepOutcome {
  BlockSelection block;
  Vector p_raw;
  Vector w;
  double eta = 0.0;
  Vector direction;
  Vector next;
  bool degenerate = false;
};

namespace detail {

inline void check_state(const ProblemInstance& problem, const Vector& x, const Vector& f) {
  if (x.size() != problem.n()) throw InvalidProblemError(problem.name() + ": iterate has wrong dimension");
  if (f.size() != problem.m()) throw InvalidProblemError(problem.name() + ": residual has wrong dimension");
  if (!x.allFinite()) throw EvaluationError(problem.name() + ": non-finite iterate");
  if (!f.allFinite()) throw EvaluationError(problem.name() + ": non-finite residual");
}

inline void apply_update(const Vector& x, const BlockSelection& coords, const Vector& p_raw, StepOutcome& out) {
  out.direction = Vector::Zero(x.size());
  out.next = x;
  if (out.degenerate) return;
  for (Index c = 0; c < coords.size(); ++c) {
    const double d = -out.eta * p_raw(c);
    out.direction(coords[c]) = d;
    out.next(coords[c]) = x(coords[c]) + d;
  }
}

}  // namespace detail

/// Stochastic column-block gradient step on the columns `block`, given the
/// current residual f = f(x).
inline StepOutcome scbgd_step(const ProblemInstance& problem, const Vector& x, const Vector& f,
                              const BlockSelection& block, double delta) {
  check_relaxation(delta);
  detail::check_state(problem, x, f);
  if (block.empty()) throw InvalidBlockError("column block must be non-empty");

  const JacobianBlock jac = problem.jacobian_columns(x, block);
  const auto rows = static_cast<Index>(jac.rows.size());
  Vector f_rows(rows);
  for (Index r = 0; r < rows; ++r) f_rows(r) = f(jac.rows[static_cast<std::size_t>(r)]);

  StepOutcome out;
  out.block = block;
  out.p_raw = jac.values.transpose() * f_rows;
  const Vector w_rows = jac.values * out.p_raw;
  out.w = Vector::Zero(problem.m());
  for (Index r = 0; r < rows; ++r) out.w(jac.rows[static_cast<std::size_t>(r)]) = w_rows(r);

  const StepSize step = compute_step_size(out.p_raw, w_rows, delta);
  out.eta = step.eta;
  out.degenerate = step.degenerate;
  detail::apply_update(x, block, out.p_raw, out);
  return out;
}

inline StepOutcome scbgd_step(const ProblemInstance& problem, const Vector& x, const BlockSelection& block,
                              double delta) {
  return scbgd_step(problem, x, problem.residual(x), block, delta);
}

/// Full gradient step: the column-block step over every column.
inline StepOutcome gd_step(const ProblemInstance& problem, const Vector& x, const Vector& f, double delta = 1.0) {
  return scbgd_step(problem, x, f, BlockSelection::all(problem.n()), delta);
}

inline StepOutcome gd_step(const ProblemInstance& problem, const Vector& x, double delta = 1.0) {
  return gd_step(problem, x, problem.residual(x), delta);
}

/// Row-block gradient step x_{k+1} = x_k - eta J_rows^T f_rows with
/// eta = delta ||J_rows^T f_rows||^2 / ||J_rows J_rows^T f_rows||^2.
/// The update is dense in x apart from columns no sampled row depends on.
inline StepOutcome rowblock_gd_step(const ProblemInstance& problem, const Vector& x, const Vector& f,
                                    const BlockSelection& rows, double delta) {
  check_relaxation(delta);
  detail::check_state(problem, x, f);
  if (rows.empty()) throw InvalidBlockError("row block must be non-empty");
  if (rows[rows.size() - 1] >= problem.m()) {
    throw InvalidBlockError("row index outside 1.." + std::to_string(problem.m()));
  }

  BlockSelection cols;
  if (problem.has_row_supports()) {
    std::vector<Index> reached;
    for (Index r : rows.indices()) {
      const auto& s = problem.column_support(r);
      reached.insert(reached.end(), s.begin(), s.end());
    }
    std::sort(reached.begin(), reached.end());
    reached.erase(std::unique(reached.begin(), reached.end()), reached.end());
    cols = BlockSelection(std::move(reached), problem.n());
  } else {
    cols = BlockSelection::all(problem.n());
  }

  StepOutcome out;
  out.block = cols;
  out.w = Vector::Zero(problem.m());
  if (cols.empty()) {
    out.p_raw = Vector::Zero(0);
    out.degenerate = true;
    detail::apply_update(x, cols, out.p_raw, out);
    return out;
  }

  const JacobianBlock jac = problem.jacobian_columns(x, cols);
  Matrix sub = Matrix::Zero(rows.size(), cols.size());
  Vector f_rows(rows.size());
  for (Index r = 0; r < rows.size(); ++r) {
    f_rows(r) = f(rows[r]);
    auto it = std::lower_bound(jac.rows.begin(), jac.rows.end(), rows[r]);
    if (it != jac.rows.end() && *it == rows[r]) sub.row(r) = jac.values.row(it - jac.rows.begin());
  }

  out.p_raw = sub.transpose() * f_rows;
  const Vector w_rows = sub * out.p_raw;
  for (Index r = 0; r < rows.size(); ++r) out.w(rows[r]) = w_rows(r);

  const StepSize step = compute_step_size(out.p_raw, w_rows, delta);
  out.eta = step.eta;
  out.degenerate = step.degenerate;
  detail::apply_update(x, cols, out.p_raw, out);
  return out;
}

}  // namespace scbgd
