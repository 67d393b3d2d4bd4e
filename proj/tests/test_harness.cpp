#include "scbgd/harness.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

namespace scbgd {
namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_config(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    (void)parse(text);
  } catch (const ConfigParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no ConfigParseError for:\n" << text;
  return 0;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

const char* kSmallConfig = R"(# small broyden sweep
[experiment]
problem = broyden
dimensions = 20, 30
repetitions = 3
base_seed = 11

[method]
method = gd

[method]
method = scbgd   ; sampled columns
q = 4
delta = 1.0
)";

TEST(Config, ParsesAllKeys) {
  const ExperimentConfig c = parse(kSmallConfig);
  EXPECT_EQ(c.problem, "broyden");
  EXPECT_EQ(c.dimensions, (std::vector<Index>{20, 30}));
  EXPECT_EQ(c.repetitions, 3);
  EXPECT_EQ(c.base_seed, 11u);
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[0].method, Method::gd);
  EXPECT_EQ(c.methods[1].method, Method::scbgd);
  EXPECT_EQ(c.methods[1].q, 4);
  EXPECT_EQ(c.tol, 1e-6);
  EXPECT_EQ(c.max_iter, 200000);

  const ExperimentConfig d = parse(
      "[experiment]\nproblem=li-tridiagonal\ndimensions=5\ntol=1e-8\nmax_iter=99\nresidual_mode=full\n"
      "workers=3\ncsv=a.csv\ntable=t.txt\n[method]\nmethod=rowblock-gd\nq=2\ndelta=0.5\n");
  EXPECT_EQ(d.tol, 1e-8);
  EXPECT_EQ(d.max_iter, 99);
  EXPECT_EQ(d.residual_mode, ResidualMode::full);
  EXPECT_EQ(d.workers, 3u);
  EXPECT_EQ(d.csv_path, "a.csv");
  EXPECT_EQ(d.table_path, "t.txt");
  EXPECT_EQ(d.methods[0].delta, 0.5);
}

TEST(Config, EmptyInputIsRejected) {
  EXPECT_THROW(parse(""), ConfigParseError);
  EXPECT_THROW(parse("# only a comment\n\n"), ConfigParseError);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("[experiment]\nproblem = broyden\nbogus = 1\n"), 3u);
  EXPECT_EQ(parse_error_line("[experiment]\nproblem broyden\n"), 2u);
  EXPECT_EQ(parse_error_line("problem = broyden\n"), 1u);
  EXPECT_EQ(parse_error_line("[experiment]\n[results]\n"), 2u);
  EXPECT_EQ(parse_error_line("[experiment]\nproblem=broyden\ndimensions=10, x\n"), 3u);
  EXPECT_EQ(parse_error_line("[experiment]\nproblem=broyden\ndimensions=10\n[method]\nmethod=gd\ndelta=2\n"), 6u);
  EXPECT_EQ(parse_error_line("[experiment]\nproblem=broyden\ndimensions=10\n[method]\nmethod=newton\n"), 5u);
  EXPECT_EQ(parse_error_line("[experiment]\nproblem=broyden\ndimensions=10\n[method]\nq=3\n"), 4u);
  EXPECT_EQ(parse_error_line("[experiment]\n[experiment]\n"), 2u);
}

TEST(Labels, MatchTableConvention) {
  EXPECT_EQ((MethodSpec{Method::gd, 1, 1.0}).label(), "GD");
  EXPECT_EQ((MethodSpec{Method::scbgd, 10, 1.0}).label(), "SCBGD (q=10, δ=1)");
  EXPECT_EQ((MethodSpec{Method::scbgd, 5, 0.5}).label(), "SCBGD (q=5, δ=0.5)");
}

TEST(Experiment, UnknownProblemIsRegistryError) {
  ExperimentConfig c = parse(kSmallConfig);
  c.problem = "rosenbrock";
  EXPECT_THROW(run_experiment(c), RegistryError);
}

TEST(Experiment, EmptyReportGivesHeaderOnlyCsv) {
  std::ostringstream out;
  write_csv(BenchmarkReport{}, out);
  EXPECT_EQ(out.str(), std::string(kRunCsvHeader) + "\n");
  EXPECT_THROW(compare_table(BenchmarkReport{}), InvalidConfigError);
}

TEST(Experiment, OneRowPerRepetition) {
  ExperimentConfig c = parse(kSmallConfig);
  c.dimensions = {20};
  c.methods = {MethodSpec{Method::scbgd, 4, 1.0}};
  c.repetitions = 10;
  const BenchmarkReport r = run_experiment(c);
  std::ostringstream out;
  write_csv(r, out);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 11u);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    ASSERT_EQ(f.size(), 10u);
    EXPECT_EQ(f[0], "scbgd");
    EXPECT_EQ(f[1], "broyden");
    EXPECT_EQ(f[2], "20");
    EXPECT_EQ(f[3], "4");
    EXPECT_EQ(f[5], std::to_string(11 + i - 1));
    EXPECT_EQ(f[9], "true");
  }
}

TEST(Experiment, GdRowsReportFullBlock) {
  ExperimentConfig c = parse(kSmallConfig);
  c.methods = {MethodSpec{Method::gd, 1, 1.0}};
  c.repetitions = 1;
  std::ostringstream out;
  write_csv(run_experiment(c), out);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(split(lines[1], ',')[3], "20");
  EXPECT_EQ(split(lines[2], ',')[3], "30");
}

std::string csv_without_times(const BenchmarkReport& r) {
  std::ostringstream out;
  write_csv(r, out);
  std::string result;
  for (const auto& line : lines_of(out.str())) {
    auto f = split(line, ',');
    f.erase(f.begin() + 8);
    for (std::size_t i = 0; i < f.size(); ++i) result += (i ? "," : "") + f[i];
    result += '\n';
  }
  return result;
}

TEST(Experiment, IdenticalConfigGivesIdenticalCsv) {
  ExperimentConfig c = parse(kSmallConfig);
  const std::string a = csv_without_times(run_experiment(c));
  const std::string b = csv_without_times(run_experiment(c));
  EXPECT_EQ(a, b);
  c.workers = 4;
  EXPECT_EQ(csv_without_times(run_experiment(c)), a);
}

TEST(Experiment, CellMeanIsMeanOfRuns) {
  ExperimentConfig c = parse(kSmallConfig);
  const BenchmarkReport r = run_experiment(c);
  ASSERT_EQ(r.cells.size(), 4u);
  for (const auto& cell : r.cells) {
    double sum = 0.0;
    for (const auto& run : cell.runs) sum += static_cast<double>(run.iterations);
    ASSERT_TRUE(cell.converged);
    EXPECT_DOUBLE_EQ(cell.mean_iterations, sum / static_cast<double>(cell.runs.size()));
  }
  EXPECT_EQ(r.cell(1, 0).spec.method, Method::scbgd);
  EXPECT_EQ(r.cell(1, 0).n, 20);
  EXPECT_EQ(r.cell(0, 1).n, 30);
}

TEST(Summary, NonconvergenceExcludedFromMeanAndFlagsCell) {
  RunRecord ok;
  ok.converged = true;
  ok.iterations = 10;
  ok.wall_seconds = 1.0;
  RunRecord capped;
  capped.iterations = 1000;
  const CellSummary cell = summarize(MethodSpec{}, 5, {ok, capped, ok});
  EXPECT_FALSE(cell.converged);
  EXPECT_EQ(cell.mean_iterations, 10.0);
  EXPECT_EQ(cell.mean_seconds, 1.0);
}

TEST(Table, LayoutAndDashes) {
  ExperimentConfig c = parse(kSmallConfig);
  c.repetitions = 2;
  BenchmarkReport r = run_experiment(c);
  // Force one nonconverged cell.
  r.cells[3].converged = false;
  const auto lines = lines_of(compare_table(r));
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0].rfind("Method", 0), 0u);
  EXPECT_NE(lines[0].find("20"), std::string::npos);
  EXPECT_EQ(lines[1].rfind("GD", 0), 0u);
  EXPECT_NE(lines[1].find("IT"), std::string::npos);
  EXPECT_NE(lines[2].find("CPU"), std::string::npos);
  EXPECT_EQ(lines[3].rfind("SCBGD (q=4, δ=1)", 0), 0u);
  EXPECT_EQ(lines[3].substr(lines[3].size() - 2), "--");
  EXPECT_EQ(lines[4].substr(lines[4].size() - 2), "--");
  EXPECT_EQ(lines[1].find("--"), std::string::npos);
}

TEST(Trace, HeaderAndRows) {
  const SolveResult r = solve(make_identity(4), SolverConfig{Method::gd});
  std::ostringstream out;
  write_trace(r, out);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], kTraceCsvHeader);
  EXPECT_EQ(lines[1].rfind("0,2,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("1,0,", 0), 0u);
}

TEST(Trace, UnwritablePathIsIoError) {
  const SolveResult r = solve(make_identity(2), SolverConfig{Method::gd});
  EXPECT_THROW(export_trace(r, "/nonexistent-dir/trace.csv"), IoError);
}

}  // namespace
}  // namespace scbgd
