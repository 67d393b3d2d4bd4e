#pragma once

#include "scbgd/block.hpp"
#include "scbgd/problems.hpp"
#include "scbgd/sampling.hpp"
#include "scbgd/steps.hpp"
#include "scbgd/types.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scbgd {

/// Relative cutoff below which a singular value counts as zero.
inline constexpr double kSingularValueCutoff = 1e-12;

/// Default cap on exhaustive block enumeration.
inline constexpr double kMaxEnumeratedBlocks = 1e6;

struct SigmaBounds {
  double min = 0.0;  ///< smallest nonzero singular value
  double max = 0.0;
};

inline SigmaBounds sigma_bounds(const Matrix& jacobian) {
  if (!jacobian.allFinite()) throw EvaluationError("sigma_bounds: non-finite matrix entry");
  if (jacobian.size() == 0) throw NoNonzeroSingularValueError("sigma_bounds: empty matrix");
  const Vector s = Eigen::JacobiSVD<Matrix>(jacobian).singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  if (!(smax > 0.0)) throw NoNonzeroSingularValueError("sigma_bounds: matrix has no nonzero singular value");
  double smin = smax;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > kSingularValueCutoff * smax) smin = std::min(smin, s(i));
  }
  return {smin, smax};
}

/// C(n, q) in floating point (exact while below 2^53).
inline double binomial(Index n, Index q) {
  if (q < 0 || q > n) return 0.0;
  q = std::min(q, n - q);
  double c = 1.0;
  for (Index i = 1; i <= q; ++i) c = c * static_cast<double>(n - q + i) / static_cast<double>(i);
  return std::round(c);
}

/// Calls fn(const std::vector<Index>&) for every q-subset of {0..n-1} in
/// lexicographic order.
template <typename Fn>
void for_each_combination(Index n, Index q, Fn&& fn) {
  if (q < 1 || q > n) throw InvalidConfigError("combination size must satisfy 1 <= q <= n");
  std::vector<Index> idx(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    fn(static_cast<const std::vector<Index>&>(idx));
    Index i = q - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - q + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < q; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline void check_enumeration(Index n, Index q, double limit) {
  if (q < 1 || q > n) throw InvalidConfigError("block size must satisfy 1 <= q <= n");
  const double tau = binomial(n, q);
  if (tau > limit) {
    throw TooManyBlocksError("C(" + std::to_string(n) + ", " + std::to_string(q) + ") blocks exceed the enumeration limit");
  }
}

struct BlockLipschitz {
  std::vector<double> per_block;  ///< lexicographic block order
  double max = 0.0;
};

/// For g(x) = 1/2 ||A x - b||^2 the block gradient is Lipschitz in its own
/// block with constant sigma_max(A[:, J])^2.
inline BlockLipschitz block_lipschitz_constants(const LinearProblemSpec& linear, Index q,
                                                double limit = kMaxEnumeratedBlocks) {
  const Index n = linear.A.cols();
  check_enumeration(n, q, limit);
  BlockLipschitz out;
  out.per_block.reserve(static_cast<std::size_t>(binomial(n, q)));
  for_each_combination(n, q, [&](const std::vector<Index>& cols) {
    const Matrix sub = linear.A(Eigen::all, cols);
    const Vector s = Eigen::JacobiSVD<Matrix>(sub).singularValues();
    const double l = s.size() > 0 ? s(0) * s(0) : 0.0;
    out.per_block.push_back(l);
    out.max = std::max(out.max, l);
  });
  return out;
}

/// Constants entering the convergence-rate bounds.
struct TheoremConstants {
  double sigma_min_lb = 0.0;
  double sigma_max_ub = 0.0;
  double L_max = 0.0;
  double R0 = 0.0;  ///< max ||x - x*||_2 over the level set (unsquared)
  std::optional<double> gamma;  ///< strong-convexity modulus
  std::optional<double> mu;     ///< PL constant
  double tau = 1.0;             ///< block count C(n, q)
  double delta = 1.0;

  /// Largest admissible relaxation, min{2, 4 sigma_min^2 / L_max}.
  [[nodiscard]] double delta_limit() const {
    return L_max > 0.0 ? std::min(2.0, 4.0 * sigma_min_lb * sigma_min_lb / L_max) : 2.0;
  }

  /// (delta / (tau sigma_max^2)) (2 - delta L_max / (2 sigma_min^2)).
  [[nodiscard]] double alpha() const {
    const double smin2 = sigma_min_lb * sigma_min_lb;
    return delta / (tau * sigma_max_ub * sigma_max_ub) * (2.0 - delta * L_max / (2.0 * smin2));
  }

  void validate() const {
    if (!(sigma_min_lb > 0.0) || !(sigma_min_lb <= sigma_max_ub) || !std::isfinite(sigma_max_ub)) {
      throw InvalidConstantsError("singular-value bounds must satisfy 0 < sigma_min <= sigma_max < inf");
    }
    if (!(tau >= 1.0)) throw InvalidConstantsError("block count must be at least 1");
    if (!(L_max >= 0.0)) throw InvalidConstantsError("L_max must be non-negative");
    if (!(alpha() > 0.0)) {
      throw InvalidConstantsError("decrease factor alpha is not positive; delta must be below " +
                                  std::to_string(delta_limit()));
    }
  }
};

/// Constants of g(x) = 1/2 ||A x - b||^2 for blocks of size q. gamma and mu are
/// set to sigma_min(A)^2 when A has full column rank. R0 is left at 0.
inline TheoremConstants linear_theorem_constants(const LinearProblemSpec& linear, Index q, double delta,
                                                 double limit = kMaxEnumeratedBlocks) {
  const SigmaBounds s = sigma_bounds(linear.A);
  TheoremConstants c;
  c.sigma_min_lb = s.min;
  c.sigma_max_ub = s.max;
  c.L_max = block_lipschitz_constants(linear, q, limit).max;
  c.tau = binomial(linear.A.cols(), q);
  c.delta = delta;
  const Index rank = Eigen::JacobiSVD<Matrix>(linear.A).setThreshold(kSingularValueCutoff).rank();
  if (rank == linear.A.cols()) {
    c.gamma = s.min * s.min;
    c.mu = s.min * s.min;
  }
  return c;
}

/// Descent quantities for one column-block step.
struct DescentCheck {
  double inner_product = 0.0;  ///< d^T grad g(x), with grad g = J^T f
  double identity = 0.0;       ///< -eta ||p_raw||^2
  double p_norm_sq = 0.0;
  double eta = 0.0;
};

inline DescentCheck descent_direction_check(const ProblemInstance& problem, const Vector& x,
                                            const BlockSelection& block, double delta) {
  const Vector f = problem.residual(x);
  const StepOutcome step = scbgd_step(problem, x, f, block, delta);
  const JacobianBlock full = problem.jacobian_columns(x, BlockSelection::all(problem.n()));
  Vector f_rows(static_cast<Index>(full.rows.size()));
  for (std::size_t r = 0; r < full.rows.size(); ++r) f_rows(static_cast<Index>(r)) = f(full.rows[r]);
  const Vector grad = full.values.transpose() * f_rows;

  DescentCheck out;
  out.inner_product = step.direction.dot(grad);
  out.p_norm_sq = step.p_raw.squaredNorm();
  out.eta = step.eta;
  out.identity = -step.eta * out.p_norm_sq;
  return out;
}

struct ExpectedDecrease {
  double expectation = 0.0;  ///< exact E[g(x_{k+1})] over all blocks
  double bound = 0.0;        ///< g(x_k) - alpha ||grad g(x_k)||^2
  double g_current = 0.0;
  double alpha = 0.0;
  double grad_norm_sq = 0.0;
  double blocks = 0.0;

  [[nodiscard]] bool holds() const { return expectation <= bound; }
};

/// Exact conditional expectation of g after one step, by enumerating every
/// q-column block with weight 1/tau, against the expected-decrease bound.
/// `constants` must carry the relaxation used for the steps.
inline ExpectedDecrease expected_decrease_check(const ProblemInstance& linear_problem, const TheoremConstants& constants,
                                                const Vector& x, Index q, double limit = kMaxEnumeratedBlocks) {
  const Index n = linear_problem.n();
  check_enumeration(n, q, limit);
  if (!(constants.delta > 0.0 && constants.delta < constants.delta_limit())) {
    throw InvalidConfigError("delta=" + std::to_string(constants.delta) + " outside (0, " +
                             std::to_string(constants.delta_limit()) + ")");
  }
  constants.validate();

  const Vector f = linear_problem.residual(x);
  const Matrix J = linear_problem.jacobian(x);
  const Vector grad = J.transpose() * f;

  double sum = 0.0;
  double count = 0.0;
  for_each_combination(n, q, [&](const std::vector<Index>& cols) {
    const StepOutcome step = scbgd_step(linear_problem, x, f, BlockSelection(cols, n), constants.delta);
    sum += 0.5 * linear_problem.residual(step.next).squaredNorm();
    count += 1.0;
  });

  ExpectedDecrease out;
  out.blocks = count;
  out.expectation = sum / count;
  out.g_current = 0.5 * f.squaredNorm();
  out.alpha = constants.alpha();
  out.grad_norm_sq = grad.squaredNorm();
  out.bound = out.g_current - out.alpha * out.grad_norm_sq;
  return out;
}

inline ExpectedDecrease expected_decrease_check(const LinearProblemSpec& linear, const Vector& x, Index q,
                                                double delta) {
  const TheoremConstants c = linear_theorem_constants(linear, q, delta);
  return expected_decrease_check(make_linear(linear), c, x, q);
}

struct ConvergenceBounds {
  double sublinear = 0.0;
  std::optional<double> linear;          ///< present when gamma > 0
  std::optional<bool> side_condition;    ///< delta^2 L gamma - 4 delta gamma smin^2 + tau smax^2 smin^2 >= 0
  bool consistent = false;               ///< R0^2/(k alpha) matches the closed form
};

/// Sublinear bound 2 tau smin^2 smax^2 R0^2 / (k delta (4 smin^2 - delta L_max))
/// and, under strong convexity, (1 - 2 gamma alpha)^k psi0.
inline ConvergenceBounds convergence_bounds(const TheoremConstants& c, std::int64_t k, double psi0) {
  if (k < 1) throw InvalidConfigError("iteration count must be at least 1");
  c.validate();
  const double smin2 = c.sigma_min_lb * c.sigma_min_lb;
  const double smax2 = c.sigma_max_ub * c.sigma_max_ub;
  const auto kd = static_cast<double>(k);

  ConvergenceBounds out;
  out.sublinear = 2.0 * c.tau * smin2 * smax2 * c.R0 * c.R0 / (kd * c.delta * (4.0 * smin2 - c.delta * c.L_max));
  const double via_alpha = c.R0 * c.R0 / (kd * c.alpha());
  const double scale = std::max(std::abs(via_alpha), std::abs(out.sublinear));
  out.consistent = std::abs(via_alpha - out.sublinear) <= 1e-12 * scale;

  if (c.gamma && *c.gamma > 0.0) {
    const double g = *c.gamma;
    out.linear = std::pow(1.0 - 2.0 * g * c.alpha(), kd) * psi0;
    out.side_condition = c.delta * c.delta * c.L_max * g - 4.0 * c.delta * g * smin2 + c.tau * smax2 * smin2 >= 0.0;
  }
  return out;
}

/// (1 - 2 mu alpha)^k psi0 under the PL condition with constant mu.
inline double pl_rate_bound(const TheoremConstants& c, std::int64_t k, double psi0) {
  if (!c.mu || !(*c.mu > 0.0)) throw InvalidConstantsError("PL constant mu must be positive");
  if (k < 0) throw InvalidConfigError("iteration count must be non-negative");
  c.validate();
  return std::pow(1.0 - 2.0 * *c.mu * c.alpha(), static_cast<double>(k)) * psi0;
}

/// Square matrix Q1 diag(s) Q2 with Q1, Q2 orthogonal and s uniform in
/// [1, condition]; entries are drawn from `rng` so instances are reproducible.
inline Matrix random_well_conditioned(Index n, Rng& rng, double condition = 1.4) {
  auto random_orthogonal = [&] {
    Matrix g(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) g(i, j) = rng.uniform(-1.0, 1.0);
    return Matrix(Eigen::HouseholderQR<Matrix>(g).householderQ());
  };
  Vector s(n);
  for (Index i = 0; i < n; ++i) s(i) = rng.uniform(1.0, condition);
  if (n > 1) {
    s(0) = 1.0;
    s(1) = condition;
  }
  return random_orthogonal() * s.asDiagonal() * random_orthogonal();
}

}  // namespace scbgd
