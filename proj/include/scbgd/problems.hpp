#pragma once

#include "scbgd/block.hpp"
#include "scbgd/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace scbgd {

struct ColumnEntry {
  Index row;
  double value;
};

/// Column block of the Jacobian restricted to the rows it can touch.
///
/// `values` is dense with shape rows.size() x cols.size(). Rows of the full
/// m x q block that are absent from `rows` are identically zero. Without a
/// declared row-support map `rows` is 0..m-1 and the block is the full one.
struct JacobianBlock {
  std::vector<Index> rows;
  std::vector<Index> cols;
  Matrix values;
  Index m = 0;

  [[nodiscard]] Matrix to_dense() const {
    Matrix dense = Matrix::Zero(m, static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) dense.row(rows[r]) = values.row(static_cast<Index>(r));
    return dense;
  }
};

/// A differentiable residual map f: R^n -> R^m with column access to its Jacobian.
///
/// The residual is defined row by row so that a full evaluation and a partial
/// re-evaluation of selected rows produce bitwise-identical values. Instances
/// are immutable and may be shared by concurrent solves.
class ProblemInstance {
 public:
  using RowEvaluator = std::function<double(const Vector& x, Index row)>;
  /// Appends the nonzero entries of Jacobian column `col` at `x` to `out`.
  using ColumnEvaluator = std::function<void(const Vector& x, Index col, std::vector<ColumnEntry>& out)>;
  using RowSupports = std::vector<std::vector<Index>>;

  ProblemInstance(std::string name, Index n, Index m, RowEvaluator row, ColumnEvaluator column, Vector start,
                  std::optional<RowSupports> supports = std::nullopt)
      : name_(std::move(name)),
        n_(n),
        m_(m),
        row_(std::move(row)),
        column_(std::move(column)),
        start_(std::move(start)) {
    if (n_ <= 0 || m_ <= 0) throw InvalidProblemError(name_ + ": dimensions must be positive");
    if (start_.size() != n_) throw InvalidProblemError(name_ + ": start point has wrong dimension");
    if (supports) {
      if (static_cast<Index>(supports->size()) != n_) {
        throw InvalidProblemError(name_ + ": row-support map must have one entry per column");
      }
      for (auto& s : *supports) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        if (!s.empty() && (s.front() < 0 || s.back() >= m_)) {
          throw InvalidProblemError(name_ + ": row support outside 1.." + std::to_string(m_));
        }
      }
      auto by_row = std::make_shared<RowSupports>(static_cast<std::size_t>(m_));
      for (Index j = 0; j < n_; ++j) {
        for (Index i : (*supports)[static_cast<std::size_t>(j)]) (*by_row)[static_cast<std::size_t>(i)].push_back(j);
      }
      supports_ = std::make_shared<const RowSupports>(std::move(*supports));
      columns_by_row_ = std::move(by_row);
    }
  }

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] Index n() const noexcept { return n_; }
  [[nodiscard]] Index m() const noexcept { return m_; }
  [[nodiscard]] const Vector& default_start() const noexcept { return start_; }
  [[nodiscard]] bool has_row_supports() const noexcept { return supports_ != nullptr; }

  /// Sorted rows where column `col` may be nonzero. Requires a declared support map.
  [[nodiscard]] const std::vector<Index>& row_support(Index col) const {
    if (!supports_) throw UnsupportedModeError(name_ + ": no row-support map declared");
    return (*supports_)[static_cast<std::size_t>(col)];
  }

  /// Sorted columns whose support contains `row`. Requires a declared support map.
  [[nodiscard]] const std::vector<Index>& column_support(Index row) const {
    if (!columns_by_row_) throw UnsupportedModeError(name_ + ": no row-support map declared");
    return (*columns_by_row_)[static_cast<std::size_t>(row)];
  }

  [[nodiscard]] double residual_row(const Vector& x, Index row) const { return row_(x, row); }

  [[nodiscard]] Vector residual(const Vector& x) const {
    check_point(x);
    Vector f(m_);
    for (Index i = 0; i < m_; ++i) f(i) = row_(x, i);
    return f;
  }

  /// Union of the row supports of `cols` (all rows when no map is declared).
  [[nodiscard]] std::vector<Index> rows_touched(std::span<const Index> cols) const {
    std::vector<Index> rows;
    if (!supports_) {
      rows.resize(static_cast<std::size_t>(m_));
      for (Index i = 0; i < m_; ++i) rows[static_cast<std::size_t>(i)] = i;
      return rows;
    }
    for (Index j : cols) {
      const auto& s = (*supports_)[static_cast<std::size_t>(j)];
      rows.insert(rows.end(), s.begin(), s.end());
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
  }

  [[nodiscard]] JacobianBlock jacobian_columns(const Vector& x, const BlockSelection& cols) const {
    check_point(x);
    if (!cols.empty() && cols[cols.size() - 1] >= n_) {
      throw InvalidBlockError(name_ + ": column index outside 1.." + std::to_string(n_));
    }
    JacobianBlock block;
    block.m = m_;
    block.cols.assign(cols.indices().begin(), cols.indices().end());
    block.rows = rows_touched(cols.indices());
    const bool all_rows = static_cast<Index>(block.rows.size()) == m_;
    block.values = Matrix::Zero(static_cast<Index>(block.rows.size()), cols.size());

    std::vector<ColumnEntry> entries;
    for (Index c = 0; c < cols.size(); ++c) {
      entries.clear();
      column_(x, cols[c], entries);
      for (const auto& e : entries) {
        Index local = e.row;
        if (!all_rows) {
          auto it = std::lower_bound(block.rows.begin(), block.rows.end(), e.row);
          if (it == block.rows.end() || *it != e.row) {
            throw InvalidProblemError(name_ + ": Jacobian entry (" + std::to_string(e.row + 1) + ", " +
                                      std::to_string(cols[c] + 1) + ") outside declared row support");
          }
          local = static_cast<Index>(it - block.rows.begin());
        }
        block.values(local, c) = e.value;
      }
    }
    if (!block.values.allFinite()) throw EvaluationError(name_ + ": non-finite Jacobian entry");
    return block;
  }

  [[nodiscard]] Matrix dense_jacobian_columns(const Vector& x, const BlockSelection& cols) const {
    return jacobian_columns(x, cols).to_dense();
  }

  [[nodiscard]] Matrix jacobian(const Vector& x) const { return dense_jacobian_columns(x, BlockSelection::all(n_)); }

 private:
  void check_point(const Vector& x) const {
    if (x.size() != n_) {
      throw InvalidProblemError(name_ + ": point has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(n_));
    }
  }

  std::string name_;
  Index n_;
  Index m_;
  RowEvaluator row_;
  ColumnEvaluator column_;
  Vector start_;
  std::shared_ptr<const RowSupports> supports_;
  std::shared_ptr<const RowSupports> columns_by_row_;
};

/// Dense linear system A x = b; its residual is f(x) = A x - b.
struct LinearProblemSpec {
  Matrix A;
  Vector b;
};

namespace detail {

inline ProblemInstance::RowSupports tridiagonal_supports(Index n) {
  ProblemInstance::RowSupports s(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    auto& col = s[static_cast<std::size_t>(j)];
    if (j > 0) col.push_back(j - 1);
    col.push_back(j);
    if (j + 1 < n) col.push_back(j + 1);
  }
  return s;
}

}  // namespace detail

/// Broyden tridiagonal system:
///   f_k = (0.5 x_k - 3) x_k + x_{k-1} + 2 x_{k+1} - 1,  with ghost values x_0 = x_{n+1} = 0.
inline ProblemInstance make_broyden(Index n) {
  if (n < 2) throw InvalidProblemError("broyden: dimension must be at least 2");
  auto row = [n](const Vector& x, Index k) {
    const double prev = k > 0 ? x(k - 1) : 0.0;
    const double next = k + 1 < n ? x(k + 1) : 0.0;
    return (0.5 * x(k) - 3.0) * x(k) + prev + 2.0 * next - 1.0;
  };
  auto column = [n](const Vector& x, Index j, std::vector<ColumnEntry>& out) {
    if (j > 0) out.push_back({j - 1, 2.0});
    out.push_back({j, x(j) - 3.0});
    if (j + 1 < n) out.push_back({j + 1, 1.0});
  };
  return {"broyden", n, n, row, column, Vector::Constant(n, -1.5), detail::tridiagonal_supports(n)};
}

/// Li's tridiagonal system:
///   f_1 = 4 (x_1 - x_2^2)
///   f_k = 8 x_k (x_k^2 - x_{k-1}) - 2 (1 - x_k) + 4 (x_k - x_{k+1}^2),  1 < k < n
///   f_n = 8 x_n (x_n^2 - x_{n-1}) - 2 (1 - x_n)
inline ProblemInstance make_li_tridiagonal(Index n) {
  if (n < 2) throw InvalidProblemError("li-tridiagonal: dimension must be at least 2");
  auto row = [n](const Vector& x, Index k) {
    if (k == 0) return 4.0 * (x(0) - x(1) * x(1));
    const double core = 8.0 * x(k) * (x(k) * x(k) - x(k - 1)) - 2.0 * (1.0 - x(k));
    if (k == n - 1) return core;
    return core + 4.0 * (x(k) - x(k + 1) * x(k + 1));
  };
  auto column = [n](const Vector& x, Index j, std::vector<ColumnEntry>& out) {
    // f_{j-1} depends on x_j through -4 x_j^2.
    if (j > 0) out.push_back({j - 1, -8.0 * x(j)});
    double diag = 4.0;
    if (j > 0) diag = 24.0 * x(j) * x(j) - 8.0 * x(j - 1) + (j == n - 1 ? 2.0 : 6.0);
    out.push_back({j, diag});
    // f_{j+1} depends on x_j through -8 x_{j+1} x_j.
    if (j + 1 < n) out.push_back({j + 1, -8.0 * x(j + 1)});
  };
  return {"li-tridiagonal", n, n, row, column, Vector::Constant(n, 0.5), detail::tridiagonal_supports(n)};
}

/// Linear residual f(x) = A x - b. Row supports are the structurally nonzero
/// entries of each column of A. The default start point is the origin.
inline ProblemInstance make_linear(LinearProblemSpec spec, std::string name = "linear") {
  const Index m = spec.A.rows();
  const Index n = spec.A.cols();
  if (m <= 0 || n <= 0) throw InvalidProblemError(name + ": matrix must be non-empty");
  if (spec.b.size() != m) throw InvalidProblemError(name + ": right-hand side length must equal row count");
  if (!spec.A.allFinite() || !spec.b.allFinite()) throw InvalidProblemError(name + ": non-finite coefficients");

  ProblemInstance::RowSupports supports(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      if (spec.A(i, j) != 0.0) supports[static_cast<std::size_t>(j)].push_back(i);
    }
  }
  auto data = std::make_shared<const LinearProblemSpec>(std::move(spec));
  auto row = [data](const Vector& x, Index i) { return data->A.row(i).dot(x) - data->b(i); };
  auto column = [data](const Vector&, Index j, std::vector<ColumnEntry>& out) {
    for (Index i = 0; i < data->A.rows(); ++i) {
      if (data->A(i, j) != 0.0) out.push_back({i, data->A(i, j)});
    }
  };
  return {std::move(name), n, m, row, column, Vector::Zero(n), std::move(supports)};
}

/// f(x) = x - 1 on R^n, started from the origin.
inline ProblemInstance make_identity(Index n) {
  if (n < 1) throw InvalidProblemError("identity: dimension must be positive");
  return make_linear({Matrix::Identity(n, n), Vector::Ones(n)}, "identity");
}

/// Reads "m n", then m rows of n entries, then m entries of b.
inline LinearProblemSpec read_linear_problem(std::istream& in, const std::string& origin = "<stream>") {
  long long m = 0;
  long long n = 0;
  if (!(in >> m >> n) || m <= 0 || n <= 0) {
    throw InvalidProblemError(origin + ": expected positive \"m n\" header");
  }
  LinearProblemSpec spec{Matrix(m, n), Vector(m)};
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (!(in >> spec.A(i, j))) {
        throw InvalidProblemError(origin + ": matrix entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                  ") missing or malformed");
      }
    }
  }
  for (Index i = 0; i < m; ++i) {
    if (!(in >> spec.b(i))) {
      throw InvalidProblemError(origin + ": right-hand side entry " + std::to_string(i + 1) + " missing or malformed");
    }
  }
  std::string trailing;
  if (in >> trailing) throw InvalidProblemError(origin + ": unexpected trailing data '" + trailing + "'");
  return spec;
}

inline LinearProblemSpec load_linear_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open linear problem file: " + path);
  return read_linear_problem(in, path);
}

/// Names accepted by `make_problem` and `default_start`.
inline const std::vector<std::string>& registered_problems() {
  static const std::vector<std::string> names{"broyden", "li-tridiagonal", "identity"};
  return names;
}

inline ProblemInstance make_problem(const std::string& name, Index n) {
  if (name == "broyden") return make_broyden(n);
  if (name == "li-tridiagonal") return make_li_tridiagonal(n);
  if (name == "identity") return make_identity(n);
  throw RegistryError("unknown problem '" + name + "'");
}

inline Vector default_start(const std::string& name, Index n) {
  if (name == "broyden") return Vector::Constant(n, -1.5);
  if (name == "li-tridiagonal") return Vector::Constant(n, 0.5);
  if (name == "identity") return Vector::Zero(n);
  throw RegistryError("unknown problem '" + name + "'");
}

/// Central difference (f(x + h e_j) - f(x - h e_j)) / (2h).
inline Vector finite_difference_column(const ProblemInstance& problem, const Vector& x, Index j, double h = 1e-6) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidConfigError("finite difference step must be positive");
  if (j < 0 || j >= problem.n()) throw InvalidBlockError("finite difference column outside 1.." + std::to_string(problem.n()));
  Vector plus = x;
  Vector minus = x;
  plus(j) += h;
  minus(j) -= h;
  const Vector fp = problem.residual(plus);
  const Vector fm = problem.residual(minus);
  if (!fp.allFinite() || !fm.allFinite()) {
    throw EvaluationError(problem.name() + ": non-finite residual at perturbed point");
  }
  return (fp - fm) / (2.0 * h);
}

}  // namespace scbgd
