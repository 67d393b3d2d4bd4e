#include "scbgd/problems.hpp"
#include "scbgd/sampling.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

namespace scbgd {
namespace {

Vector random_point(Rng& rng, Index n, double lo = -2.0, double hi = 2.0) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = rng.uniform(lo, hi);
  return x;
}

// Independent scalar transcription with explicit ghost values, 1-based.
double broyden_component(const Vector& x, Index k) {
  const Index n = x.size();
  auto at = [&](Index i) { return (i < 1 || i > n) ? 0.0 : x(i - 1); };
  return (0.5 * at(k) - 3.0) * at(k) + at(k - 1) + 2.0 * at(k + 1) - 1.0;
}

TEST(Broyden, ZeroInput) {
  const auto p = make_broyden(5);
  const Vector f = p.residual(Vector::Zero(5));
  EXPECT_EQ(f, Vector::Constant(5, -1.0));
}

TEST(Broyden, StartPointValues) {
  const auto p = make_broyden(3);
  const Vector f = p.residual(Vector::Constant(3, -1.5));
  EXPECT_DOUBLE_EQ(f(0), 1.625);
  EXPECT_DOUBLE_EQ(f(1), 0.125);
  EXPECT_DOUBLE_EQ(f(2), 3.125);
}

TEST(Broyden, InteriorComponentAtTwos) {
  const auto p = make_broyden(4);
  EXPECT_DOUBLE_EQ(p.residual(Vector::Constant(4, 2.0))(1), 1.0);
}

TEST(Broyden, MatchesScalarTranscription) {
  Rng rng(11);
  const auto p = make_broyden(9);
  for (int t = 0; t < 50; ++t) {
    const Vector x = random_point(rng, 9);
    const Vector f = p.residual(x);
    for (Index k = 1; k <= 9; ++k) EXPECT_DOUBLE_EQ(f(k - 1), broyden_component(x, k));
  }
}

TEST(Broyden, RejectsTinyDimensions) {
  EXPECT_THROW(make_broyden(0), InvalidProblemError);
  EXPECT_THROW(make_broyden(1), InvalidProblemError);
}

TEST(Broyden, JacobianColumnsAtZero) {
  const auto p = make_broyden(5);
  const Matrix J = p.dense_jacobian_columns(Vector::Zero(5), BlockSelection({2}, 5));
  ASSERT_EQ(J.rows(), 5);
  ASSERT_EQ(J.cols(), 1);
  EXPECT_EQ(J(1, 0), 2.0);
  EXPECT_EQ(J(2, 0), -3.0);
  EXPECT_EQ(J(3, 0), 1.0);
  EXPECT_EQ(J(0, 0), 0.0);
  EXPECT_EQ(J(4, 0), 0.0);
}

TEST(Broyden, JacobianDiagonalAtStart) {
  const auto p = make_broyden(6);
  const Matrix J = p.jacobian(Vector::Constant(6, -1.5));
  for (Index j = 0; j < 6; ++j) EXPECT_EQ(J(j, j), -4.5);
}

TEST(Broyden, FirstColumnHasNoGhostRow) {
  const auto p = make_broyden(4);
  EXPECT_EQ(p.row_support(0), (std::vector<Index>{0, 1}));
  const JacobianBlock b = p.jacobian_columns(Vector::Constant(4, 0.3), BlockSelection({0}, 4));
  EXPECT_EQ(b.rows, (std::vector<Index>{0, 1}));
  EXPECT_EQ(p.row_support(3), (std::vector<Index>{2, 3}));
}

TEST(Broyden, BlockRejectsBadIndices) {
  EXPECT_THROW(BlockSelection({1, 1}, 4), InvalidBlockError);
  EXPECT_THROW(BlockSelection({4}, 4), InvalidBlockError);
  EXPECT_THROW(BlockSelection({-1}, 4), InvalidBlockError);
  const auto p = make_broyden(4);
  EXPECT_THROW(p.jacobian_columns(Vector::Zero(4), BlockSelection({5}, 6)), InvalidBlockError);
}

TEST(LiTridiagonal, KnownRoot) {
  const auto p = make_li_tridiagonal(12);
  EXPECT_EQ(p.residual(Vector::Ones(12)), Vector::Zero(12));
}

TEST(LiTridiagonal, HalfVector) {
  const auto p = make_li_tridiagonal(3);
  const Vector f = p.residual(Vector::Constant(3, 0.5));
  EXPECT_DOUBLE_EQ(f(0), 1.0);
  EXPECT_DOUBLE_EQ(f(1), -1.0);
  EXPECT_DOUBLE_EQ(f(2), -2.0);
}

TEST(LiTridiagonal, SmallestDimension) {
  const auto p = make_li_tridiagonal(2);
  const Vector f = p.residual(Vector::Zero(2));
  EXPECT_DOUBLE_EQ(f(0), 0.0);
  EXPECT_DOUBLE_EQ(f(1), -2.0);
  EXPECT_THROW(make_li_tridiagonal(1), InvalidProblemError);
}

TEST(LiTridiagonal, JacobianDiagonalValues) {
  const auto p = make_li_tridiagonal(6);
  const Matrix J1 = p.jacobian(Vector::Ones(6));
  EXPECT_DOUBLE_EQ(J1(2, 2), 22.0);
  EXPECT_DOUBLE_EQ(J1(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(J1(5, 5), 18.0);

  const Matrix J0 = p.jacobian(Vector::Zero(6));
  EXPECT_DOUBLE_EQ(J0(2, 2), 6.0);
  EXPECT_EQ(J0(1, 2), 0.0);
  EXPECT_EQ(J0(3, 2), 0.0);
}

TEST(LiTridiagonal, ColumnsMatchFiniteDifferencesAtHalf) {
  const auto p = make_li_tridiagonal(10);
  const Vector x = Vector::Constant(10, 0.5);
  const Matrix J = p.jacobian(x);
  for (Index j = 0; j < 10; ++j) {
    const Vector fd = finite_difference_column(p, x, j);
    EXPECT_LE((fd - J.col(j)).norm() / J.col(j).norm(), 1e-6) << "column " << j + 1;
  }
}

TEST(FiniteDifference, LinearIsExactUpToRounding) {
  Rng rng(5);
  Matrix A(4, 3);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) A(i, j) = rng.uniform(-1, 1);
  const auto p = make_linear({A, Vector::Ones(4)});
  const Vector x = random_point(rng, 3);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_LE((finite_difference_column(p, x, j) - A.col(j)).norm(), 1e-9);
  }
}

TEST(FiniteDifference, BroydenAtZero) {
  const auto p = make_broyden(5);
  const Vector fd = finite_difference_column(p, Vector::Zero(5), 2, 1e-6);
  EXPECT_NEAR(fd(1), 2.0, 1e-6);
  EXPECT_NEAR(fd(2), -3.0, 1e-6);
  EXPECT_NEAR(fd(3), 1.0, 1e-6);
}

TEST(FiniteDifference, RejectsNonPositiveStep) {
  const auto p = make_broyden(3);
  EXPECT_THROW(finite_difference_column(p, Vector::Zero(3), 0, 0.0), InvalidConfigError);
  EXPECT_THROW(finite_difference_column(p, Vector::Zero(3), 0, -1e-6), InvalidConfigError);
}

TEST(FiniteDifference, NonFiniteResidualIsEvaluationError) {
  const auto p = make_li_tridiagonal(3);
  const Vector x = Vector::Constant(3, 1e200);
  EXPECT_THROW(finite_difference_column(p, x, 1), EvaluationError);
}

TEST(Registry, DefaultStarts) {
  EXPECT_EQ(default_start("broyden", 3), Vector::Constant(3, -1.5));
  EXPECT_EQ(default_start("li-tridiagonal", 2), Vector::Constant(2, 0.5));
  EXPECT_THROW(default_start("unknown", 5), RegistryError);
  EXPECT_THROW(make_problem("unknown", 5), RegistryError);
  EXPECT_EQ(make_problem("broyden", 7).default_start(), default_start("broyden", 7));
  EXPECT_EQ(make_problem("li-tridiagonal", 7).default_start(), default_start("li-tridiagonal", 7));
}

// Every analytic column within 1e-5 relative of central differences, and no
// numerically nonzero entry outside the declared support.
TEST(Properties, JacobianAgreesWithFiniteDifferencesAtRandomPoints) {
  Rng rng(2024);
  for (const auto& p : {make_broyden(8), make_li_tridiagonal(8)}) {
    for (int t = 0; t < 100; ++t) {
      const Vector x = random_point(rng, 8);
      const Matrix J = p.jacobian(x);
      for (Index j = 0; j < 8; ++j) {
        const Vector fd = finite_difference_column(p, x, j, 1e-6);
        ASSERT_LE((fd - J.col(j)).norm() / J.col(j).norm(), 1e-5) << p.name() << " column " << j + 1;
        const auto& s = p.row_support(j);
        for (Index i = 0; i < 8; ++i) {
          if (!std::binary_search(s.begin(), s.end(), i)) {
            ASSERT_EQ(fd(i), 0.0) << p.name() << " row " << i + 1 << " column " << j + 1;
          }
        }
      }
    }
  }
}

TEST(Properties, LinearResidualDifferenceIsAd) {
  Rng rng(77);
  Matrix A(5, 4);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j) A(i, j) = rng.uniform(-2, 2);
  Vector b(5);
  for (Index i = 0; i < 5; ++i) b(i) = rng.uniform(-1, 1);
  const auto p = make_linear({A, b});
  for (int t = 0; t < 100; ++t) {
    const Vector x = random_point(rng, 4);
    const Vector d = random_point(rng, 4);
    EXPECT_LE((p.residual(x + d) - p.residual(x) - A * d).norm(), 1e-12);
    EXPECT_EQ(p.jacobian(x), A);
  }
}

TEST(Properties, ResidualIsDeterministicAcrossThreads) {
  const auto p = make_li_tridiagonal(200);
  Rng rng(3);
  const Vector x = random_point(rng, 200);
  const Vector ref = p.residual(x);
  std::vector<Vector> out(8);
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < out.size(); ++i) pool.emplace_back([&, i] { out[i] = p.residual(x); });
  for (auto& t : pool) t.join();
  for (const auto& f : out) EXPECT_EQ(f, ref);
}

TEST(Linear, SupportsFollowSparsity) {
  Matrix A{{1.0, 0.0}, {0.0, 0.0}, {2.0, 3.0}};
  const auto p = make_linear({A, Vector::Zero(3)});
  EXPECT_EQ(p.row_support(0), (std::vector<Index>{0, 2}));
  EXPECT_EQ(p.row_support(1), (std::vector<Index>{2}));
}

TEST(Linear, RejectsShapeMismatch) {
  EXPECT_THROW(make_linear({Matrix::Identity(3, 3), Vector::Zero(2)}), InvalidProblemError);
  EXPECT_THROW(make_linear({Matrix(0, 0), Vector(0)}), InvalidProblemError);
}

TEST(LinearFile, ParsesWhitespaceSeparatedLayout) {
  std::istringstream in("2 3\n1 2 3\n4 5 6\n7 8\n");
  const LinearProblemSpec spec = read_linear_problem(in);
  EXPECT_EQ(spec.A, (Matrix{{1, 2, 3}, {4, 5, 6}}));
  EXPECT_EQ(spec.b, (Vector{{7, 8}}));
}

TEST(LinearFile, MalformedInputs) {
  for (const char* text : {"", "2", "0 3\n", "2 2\n1 2\n3\n", "2 2\n1 2\n3 4\n5\n", "1 1\n1\n2\n3\n", "1 1\nx\n1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_linear_problem(in), InvalidProblemError) << '"' << text << '"';
  }
  EXPECT_THROW(load_linear_problem("/nonexistent/path/system.txt"), IoError);
}

TEST(LinearFile, LoadsFromDisk) {
  const auto path = std::filesystem::temp_directory_path() / "scbgd_linear_test.txt";
  {
    std::ofstream out(path);
    out << "2 2\n2 0\n0 4\n2 4\n";
  }
  const auto p = make_linear(load_linear_problem(path.string()));
  EXPECT_EQ(p.residual(Vector::Ones(2)), Vector::Zero(2));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace scbgd
