#include "cli.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dtflat/errors.hpp"
#include "dtflat/planner.hpp"
#include "dtflat/sysfile.hpp"

namespace dtflat::cli {
namespace {

std::string data_path(const std::string& name) {
  return std::string(DTFLAT_DATA_DIR) + "/" + name;
}

const VerificationReport* find_check(const RunReport& report, const std::string& name) {
  for (const VerificationReport& check : report.checks)
    if (check.check == name) return &check;
  return nullptr;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

std::string write_temp_model(const std::string& name, const std::string& text) {
  const std::string path = testing::TempDir() + name;
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// verify

TEST(VerifyCommand, ProductModelPassesAllChecks) {
  RunReport report = run_verify(data_path("product.sys"), {});
  EXPECT_EQ(report.exit_code, kExitOk);
  EXPECT_EQ(report.checks.size(), 7u);
  for (const VerificationReport& check : report.checks) EXPECT_TRUE(check.pass) << check.check;
  EXPECT_NE(report.text.find("verdict: all checks passed"), std::string::npos);
}

TEST(VerifyCommand, InjectedFaultFailsBothFlatChecks) {
  RunReport report = run_verify(data_path("product_broken.sys"), {});
  EXPECT_EQ(report.exit_code, kExitFailedCheck);

  const VerificationReport* pair = find_check(report, "flat-pair-identity");
  ASSERT_NE(pair, nullptr);
  EXPECT_FALSE(pair->pass);
  EXPECT_GT(pair->max_abs, 1e-4);

  const VerificationReport* ident = find_check(report, "parameterization-identity");
  ASSERT_NE(ident, nullptr);
  EXPECT_FALSE(ident->pass);
  EXPECT_GT(ident->max_abs, 1e-4);

  // The fault perturbs values, not ranks.
  const VerificationReport* rank = find_check(report, "parameterization-rank");
  ASSERT_NE(rank, nullptr);
  EXPECT_TRUE(rank->pass);
}

TEST(VerifyCommand, MissingFileIsAnInputError) {
  RunReport report = run_verify(data_path("no_such_model.sys"), {});
  EXPECT_EQ(report.exit_code, kExitInputError);
  EXPECT_NE(report.text.find("error:"), std::string::npos);
}

TEST(VerifyCommand, MalformedModelIsAnInputError) {
  const std::string path = write_temp_model("malformed.sys", "n = 1\nm = 1\nf.1 = )\ng.1 = u1\n");
  RunReport report = run_verify(path, {});
  EXPECT_EQ(report.exit_code, kExitInputError);
  EXPECT_NE(report.text.find("error:"), std::string::npos);
}

TEST(VerifyCommand, SeedIsEchoedAndDeterministicRunsMatch) {
  VerifyOptions opt;
  opt.seed = 42;
  opt.deterministic = true;
  RunReport first = run_verify(data_path("product.sys"), opt);
  RunReport second = run_verify(data_path("product.sys"), opt);
  EXPECT_EQ(first.text, second.text);
  EXPECT_EQ(first.seed, 42u);
  EXPECT_NE(first.text.find("seed: 42"), std::string::npos);
  EXPECT_EQ(first.text.find("run: "), std::string::npos);

  opt.deterministic = false;
  RunReport stamped = run_verify(data_path("product.sys"), opt);
  EXPECT_NE(stamped.text.find("run: "), std::string::npos);
}

// ---------------------------------------------------------------------------
// linearize

TEST(LinearizeCommand, RecoversTheClosedFormMatrices) {
  RunReport report = run_linearize(data_path("product.sys"), {});
  EXPECT_EQ(report.exit_code, kExitOk);
  ASSERT_TRUE(report.ltv.has_value());
  ASSERT_TRUE(report.ltv->is_closed_form());
  for (std::int64_t k = -10; k <= 10; ++k) {
    const Eigen::MatrixXd A = report.ltv->A_at(k);
    const Eigen::MatrixXd B = report.ltv->B_at(k);
    EXPECT_EQ(A, Eigen::MatrixXd::Identity(3, 3)) << "k=" << k;
    EXPECT_EQ(B(0, 0), 1.0);
    EXPECT_EQ(B(0, 1), 0.0);
    EXPECT_EQ(B(1, 0), 0.0);
    EXPECT_EQ(B(1, 1), 1.0);
    EXPECT_EQ(B(2, 0), static_cast<double>(-k));
    EXPECT_EQ(B(2, 1), static_cast<double>(k));
  }
}

TEST(LinearizeCommand, PrintsCollapsedCoefficients) {
  LinearizeOptions opt;
  opt.deterministic = true;
  RunReport report = run_linearize(data_path("product.sys"), opt);
  EXPECT_NE(report.text.find("B[3][1] = -k"), std::string::npos);
  EXPECT_NE(report.text.find("B[3][2] = k"), std::string::npos);
  EXPECT_NE(report.text.find("dx[1] = dy1_[1]"), std::string::npos);
  EXPECT_NE(report.text.find("dx[2] = (1/2*k^2 - 1/2*k)*dy1 + (-k^2 + k)*dy1_[1] + "
                             "(1/2*k^2 - 1/2*k)*dy1_[2] + dy2 - dy2_[1]"),
            std::string::npos);
  EXPECT_NE(report.text.find("du[1] = -dy1_[1] + dy1_[2]"), std::string::npos);
}

TEST(LinearizeCommand, ChecksAccompanyTheClosedFormPair) {
  RunReport report = run_linearize(data_path("product.sys"), {});
  EXPECT_EQ(report.exit_code, kExitOk);
  ASSERT_TRUE(report.linear_pair.has_value());
  int commutation_checks = 0;
  for (const VerificationReport& check : report.checks) {
    EXPECT_TRUE(check.pass) << check.check;
    if (check.check == "shift-linearize-commutation") ++commutation_checks;
  }
  EXPECT_EQ(commutation_checks, 2);
  EXPECT_NE(find_check(report, "ltv-regularity"), nullptr);
  EXPECT_NE(find_check(report, "linear-pair-flatness"), nullptr);
}

TEST(LinearizeCommand, WritesTheMatrixCsv) {
  LinearizeOptions opt;
  opt.csv = testing::TempDir() + "lin_matrices.csv";
  RunReport report = run_linearize(data_path("product.sys"), opt);
  EXPECT_EQ(report.exit_code, kExitOk);
  ASSERT_EQ(report.csv_paths.size(), 1u);

  const std::string content = slurp(opt.csv);
  EXPECT_EQ(content.find('\r'), std::string::npos);
  std::istringstream lines(content);
  std::string line;
  ASSERT_TRUE(std::getline(lines, line));
  EXPECT_EQ(line,
            "k,A[1][1],A[1][2],A[1][3],A[2][1],A[2][2],A[2][3],A[3][1],A[3][2],A[3][3],"
            "B[1][1],B[1][2],B[2][1],B[2][2],B[3][1],B[3][2]");
  ASSERT_TRUE(std::getline(lines, line));
  EXPECT_EQ(line, "-10,1,0,0,0,1,0,0,0,1,1,0,0,1,10,-10");
  int rows = 1;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 21);  // k from -10 to 10
}

TEST(LinearizeCommand, RolloutFallbackIsTabulated) {
  RunReport report = run_linearize(data_path("nonflat.sys"), {});
  EXPECT_EQ(report.exit_code, kExitOk);
  ASSERT_TRUE(report.ltv.has_value());
  EXPECT_FALSE(report.ltv->is_closed_form());
  EXPECT_NE(report.text.find("tabulated on [0, 11]"), std::string::npos);
  EXPECT_FALSE(report.linear_pair.has_value());
}

// ---------------------------------------------------------------------------
// necessary-condition

TEST(NecessaryConditionCommand, TrigSystemIsNotFlat) {
  RunReport report = run_necessary_condition(data_path("nonflat.sys"), {});
  EXPECT_EQ(report.exit_code, kExitOk);
  ASSERT_TRUE(report.verdict.has_value());
  EXPECT_EQ(report.verdict->verdict, FlatnessVerdict::NotFlat);
  EXPECT_EQ(report.verdict->required_rank, 3);
  EXPECT_EQ(report.verdict->max_rank, 2);
  EXPECT_NE(report.text.find("verdict: NotFlat"), std::string::npos);
}

TEST(NecessaryConditionCommand, ProductSystemStaysInconclusive) {
  RunReport report = run_necessary_condition(data_path("product.sys"), {});
  EXPECT_EQ(report.exit_code, kExitOk);
  ASSERT_TRUE(report.verdict.has_value());
  EXPECT_EQ(report.verdict->verdict, FlatnessVerdict::Inconclusive);
  EXPECT_EQ(report.verdict->max_rank, 3);
  EXPECT_NE(report.text.find("verdict: Inconclusive"), std::string::npos);
}

TEST(NecessaryConditionCommand, HorizonOverrideNarrowsTheScan) {
  RunReport full = run_necessary_condition(data_path("nonflat.sys"), {});
  NecessaryConditionOptions opt;
  opt.horizon = 2;
  RunReport narrow = run_necessary_condition(data_path("nonflat.sys"), opt);
  ASSERT_TRUE(narrow.verdict.has_value());
  EXPECT_EQ(narrow.verdict->horizon, 2);
  EXPECT_LT(narrow.verdict->windows_tested, full.verdict->windows_tested);
  EXPECT_EQ(narrow.verdict->verdict, FlatnessVerdict::NotFlat);
}

// ---------------------------------------------------------------------------
// plan

TEST(PlanCommand, ReachesTheWorkedTarget) {
  PlanOptions opt;
  opt.from = {0.0, 0.0, 0.0};
  opt.to = {3.0, -3.0, -5.0};
  opt.k_final = 5;
  opt.csv.clear();
  RunReport report = run_plan(data_path("product.sys"), opt);
  EXPECT_EQ(report.exit_code, kExitOk);
  ASSERT_TRUE(report.plan.has_value());
  EXPECT_LE(report.plan->boundary_residual, 1e-9);

  // Independent rollout of the planned inputs.
  SystemFile file = load_system_file(data_path("product.sys"));
  Trajectory rollout = simulate(file.system, vec({0, 0, 0}), 0, report.plan->realized.u());
  EXPECT_LE((rollout.x().at(5) - vec({3, -3, -5})).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(PlanCommand, CsvCoversTheFlatOutputWindow) {
  PlanOptions opt;
  opt.from = {0.0, 0.0, 0.0};
  opt.to = {3.0, -3.0, -5.0};
  opt.k_final = 5;
  opt.csv = testing::TempDir() + "plan_out.csv";
  RunReport report = run_plan(data_path("product.sys"), opt);
  EXPECT_EQ(report.exit_code, kExitOk);

  const std::string content = slurp(opt.csv);
  EXPECT_EQ(content.find('\r'), std::string::npos);
  std::istringstream lines(content);
  std::string line;
  ASSERT_TRUE(std::getline(lines, line));
  EXPECT_EQ(line, "k,y[1],y[2],x[1],x[2],x[3],u[1],u[2]");
  int rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7) << line;
    ++rows;
  }
  // y samples span [k_initial, k_final + max(R) - 1].
  EXPECT_EQ(rows, 8);
}

TEST(PlanCommand, ShortWindowIsAnInputError) {
  PlanOptions opt;
  opt.from = {0.0, 0.0, 0.0};
  opt.to = {1.0, 1.0, 1.0};
  opt.k_final = 1;
  opt.csv.clear();
  RunReport report = run_plan(data_path("product.sys"), opt);
  EXPECT_EQ(report.exit_code, kExitInputError);
}

TEST(PlanCommand, WrongStateDimensionIsAnInputError) {
  PlanOptions opt;
  opt.from = {0.0, 0.0};
  opt.to = {1.0, 1.0};
  opt.k_final = 5;
  opt.csv.clear();
  RunReport report = run_plan(data_path("product.sys"), opt);
  EXPECT_EQ(report.exit_code, kExitInputError);
}

TEST(PlanCommand, MissingFlatPairIsAnInputError) {
  PlanOptions opt;
  opt.from = {0.0, 0.0, 0.0};
  opt.to = {1.0, 1.0, 1.0};
  opt.k_final = 5;
  opt.csv.clear();
  RunReport report = run_plan(data_path("nonflat.sys"), opt);
  EXPECT_EQ(report.exit_code, kExitInputError);
}

// ---------------------------------------------------------------------------
// argv surface of the installed binary

struct BinaryResult {
  int exit_code = -1;
  std::string output;
};

BinaryResult run_binary(const std::string& args) {
  const std::string cmd = std::string(DTFLAT_CLI_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  BinaryResult result;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe) != nullptr) result.output += buf;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

TEST(CliBinary, NoArgumentsFailsWithInputError) {
  EXPECT_EQ(run_binary("").exit_code, kExitInputError);
}

TEST(CliBinary, UnknownOptionFailsWithInputError) {
  BinaryResult r = run_binary("verify --frobnicate " + data_path("product.sys"));
  EXPECT_EQ(r.exit_code, kExitInputError);
}

TEST(CliBinary, HelpSucceeds) {
  BinaryResult r = run_binary("--help");
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_NE(r.output.find("verify"), std::string::npos);
  EXPECT_NE(r.output.find("plan"), std::string::npos);
}

TEST(CliBinary, BrokenModelExitsOne) {
  BinaryResult r = run_binary("verify " + data_path("product_broken.sys") + " --deterministic");
  EXPECT_EQ(r.exit_code, kExitFailedCheck);
  EXPECT_NE(r.output.find("[FAIL] flat-pair-identity"), std::string::npos);
}

TEST(CliBinary, SeedFlagIsEchoed) {
  BinaryResult r = run_binary("verify " + data_path("product.sys") + " --seed 7 --deterministic");
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_NE(r.output.find("seed: 7"), std::string::npos);
}

}  // namespace
}  // namespace dtflat::cli
