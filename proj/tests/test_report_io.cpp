#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "ipoc/report_io.hpp"

using namespace ipoc;

namespace {

SolveReport sample_report() {
  SolveReport r;
  r.problem = "vdp";
  r.method = Method::PrimalDual;
  r.config = ContinuationConfig{1.0, 1e-7, 1e-7};
  r.config.predictor_retry = false;
  r.options.mesh_tol = 1e-8;
  r.success = true;
  r.run.method = Method::PrimalDual;
  r.run.eps_iterations = 2;
  r.run.eps_schedule = {1.0, 0.1 + 0.2};  // not representable exactly in decimal
  r.run.newton_iters_per_eps = {7, 3};
  r.run.mesh_len_per_eps = {120, 287};
  r.run.final_mesh_len = 287;
  r.run.wall_time = 2.044273878;
  KktReport k;
  k.stationarity_res = 1.0 / 3.0;
  k.adjoint_res = 5e-324;
  k.bc_res = std::numeric_limits<double>::quiet_NaN();
  k.comp_state = Vec::Constant(1, -4e-7 * (1.0 + 1e-15));
  k.comp_mixed = Vec::Constant(2, -std::nextafter(4e-7, 1.0));
  k.comp_state_max = 4e-7;
  k.comp_mixed_max = std::numbers::pi;
  k.comp_state_shifted = 1e-22;
  k.comp_mixed_shifted = 0.0;
  k.nonneg_viol = 2.5e-12;
  k.margins.g = Vec::Constant(1, -1.7e-9);
  k.margins.c = Vec::Constant(2, -0.0);
  k.multiplier_l1_g = Vec::Constant(1, 0.7368);
  k.multiplier_l1_c = Vec::Constant(2, 1.0 / 7.0);
  k.eps = 1e-7;
  k.horizon = 4.0;
  k.cost = 5.459814258180716;
  r.kkt = k;
  r.reference = ReferenceRow{Method::PrimalDual, 1e-7, 2, 797, 1.92};
  r.corrections = {"first", "sécond with UTF-8 α"};
  return r;
}

bool same(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) ||
         (a == b && std::signbit(a) == std::signbit(b));
}

void expect_same(const Vec& a, const Vec& b) {
  ASSERT_EQ(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_TRUE(same(a(i), b(i))) << a(i) << " " << b(i);
}

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
  for (double v : {0.1, 1.0 / 3.0, 1e-7, 5e-324, 1.7976931348623157e308, -2.5, 0.0}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v) << format_double(v);
  }
  EXPECT_EQ(format_double(0.35), "0.35");
}

TEST(ReportJson, RoundTripIsBitExact) {
  const SolveReport a = sample_report();
  const std::string text = report_to_json(a).dump(2);
  const SolveReport b = parse_report(text);
  EXPECT_EQ(b.problem, a.problem);
  EXPECT_EQ(b.method, a.method);
  EXPECT_EQ(b.config.eps0, a.config.eps0);
  EXPECT_EQ(b.config.alpha, a.config.alpha);
  EXPECT_EQ(b.config.tol, a.config.tol);
  EXPECT_EQ(b.config.predictor_retry, a.config.predictor_retry);
  EXPECT_EQ(b.options.newton_tol, a.options.newton_tol);
  EXPECT_EQ(b.options.mesh_tol, a.options.mesh_tol);
  EXPECT_EQ(b.options.max_newton, a.options.max_newton);
  EXPECT_EQ(b.options.max_mesh_points, a.options.max_mesh_points);
  EXPECT_EQ(b.options.max_mesh_passes, a.options.max_mesh_passes);
  EXPECT_EQ(b.options.min_damping, a.options.min_damping);
  EXPECT_EQ(b.success, a.success);
  EXPECT_EQ(b.error, a.error);
  EXPECT_EQ(b.run.method, a.run.method);
  EXPECT_EQ(b.run.eps_iterations, a.run.eps_iterations);
  EXPECT_EQ(b.run.eps_schedule, a.run.eps_schedule);
  EXPECT_EQ(b.run.newton_iters_per_eps, a.run.newton_iters_per_eps);
  EXPECT_EQ(b.run.mesh_len_per_eps, a.run.mesh_len_per_eps);
  EXPECT_EQ(b.run.final_mesh_len, a.run.final_mesh_len);
  EXPECT_EQ(b.run.wall_time, a.run.wall_time);
  ASSERT_TRUE(b.kkt.has_value());
  const KktReport &ka = *a.kkt, &kb = *b.kkt;
  EXPECT_TRUE(same(kb.stationarity_res, ka.stationarity_res));
  EXPECT_TRUE(same(kb.adjoint_res, ka.adjoint_res));
  EXPECT_TRUE(std::isnan(kb.bc_res));
  expect_same(kb.comp_state, ka.comp_state);
  expect_same(kb.comp_mixed, ka.comp_mixed);
  EXPECT_TRUE(same(kb.comp_state_max, ka.comp_state_max));
  EXPECT_TRUE(same(kb.comp_mixed_max, ka.comp_mixed_max));
  EXPECT_TRUE(same(kb.comp_state_shifted, ka.comp_state_shifted));
  EXPECT_TRUE(same(kb.comp_mixed_shifted, ka.comp_mixed_shifted));
  EXPECT_TRUE(same(kb.nonneg_viol, ka.nonneg_viol));
  expect_same(kb.margins.g, ka.margins.g);
  expect_same(kb.margins.c, ka.margins.c);
  expect_same(kb.multiplier_l1_g, ka.multiplier_l1_g);
  expect_same(kb.multiplier_l1_c, ka.multiplier_l1_c);
  EXPECT_EQ(kb.eps, ka.eps);
  EXPECT_EQ(kb.horizon, ka.horizon);
  EXPECT_EQ(kb.cost, ka.cost);
  ASSERT_TRUE(b.reference.has_value());
  EXPECT_EQ(b.reference->iterations, 2);
  EXPECT_EQ(b.reference->mesh_len, 797);
  EXPECT_EQ(b.reference->alpha, 1e-7);
  EXPECT_EQ(b.reference->exec_time_s, 1.92);
  EXPECT_EQ(b.corrections, a.corrections);
  // A second pass reproduces the same text.
  EXPECT_EQ(report_to_json(b).dump(2), text);
}

TEST(ReportJson, OptionalSectionsMayBeNull) {
  SolveReport a = sample_report();
  a.kkt.reset();
  a.reference.reset();
  a.success = false;
  a.error = "primal continuation failed";
  const SolveReport b = parse_report(report_to_json(a).dump());
  EXPECT_FALSE(b.kkt.has_value());
  EXPECT_FALSE(b.reference.has_value());
  EXPECT_FALSE(b.success);
  EXPECT_EQ(b.error, a.error);
}

TEST(ReportJson, MissingFieldIsNamed) {
  const nlohmann::json full = report_to_json(sample_report());
  for (const std::string path : {"/settings/alpha", "/run/final_mesh_len", "/kkt/cost",
                                  "/method", "/run/eps_schedule"}) {
    nlohmann::json j = full;
    const nlohmann::json::json_pointer ptr(path);
    j[ptr.parent_pointer()].erase(ptr.back());
    try {
      report_from_json(j);
      FAIL() << "accepted report without " << path;
    } catch (const ReportFormatError& e) {
      std::string dotted = path.substr(1);
      std::replace(dotted.begin(), dotted.end(), '/', '.');
      EXPECT_EQ(e.field(), dotted);
    }
  }
}

TEST(ReportJson, WrongTypeAndSyntaxRejected) {
  nlohmann::json j = report_to_json(sample_report());
  j["run"]["eps_iterations"] = "two";
  EXPECT_THROW(report_from_json(j), ReportFormatError);
  EXPECT_THROW(parse_report("{ not json"), ReportFormatError);
  EXPECT_THROW(parse_report("[]"), ReportFormatError);
  j = report_to_json(sample_report());
  j["method"] = "dual";
  EXPECT_THROW(report_from_json(j), ReportFormatError);
}

TEST(Table, LayoutAndOrder) {
  SolveReport p = sample_report();
  p.method = Method::Primal;
  p.config.alpha = 0.35;
  p.run.eps_iterations = 17;
  p.run.final_mesh_len = 354;
  p.run.wall_time = 1.5;
  const SolveReport d = sample_report();
  const std::string t = render_table({p, d});
  std::istringstream in(t);
  std::string head, rule, r1, r2, extra;
  std::getline(in, head);
  std::getline(in, rule);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(head.find("Method"), 0u);
  for (const char* col : {"decay ratio α", "number of iterations", "final length of time array",
                          "exec. time"}) {
    EXPECT_NE(head.find(col), std::string::npos) << col;
  }
  EXPECT_EQ(r1.rfind("Primal ", 0), 0u);
  EXPECT_EQ(r2.rfind("Primal-dual", 0), 0u);
  EXPECT_NE(r1.find("0.35"), std::string::npos);
  EXPECT_NE(r1.find("| 17 "), std::string::npos);
  EXPECT_NE(r1.find("354"), std::string::npos);
  EXPECT_NE(r1.find("1.5 s"), std::string::npos);
  EXPECT_NE(r2.find("1e-07"), std::string::npos);
  EXPECT_NE(r2.find("2.044273878 s"), std::string::npos);
}

TEST(TrajectoryCsv, HeaderAndPrecision) {
  const BenchmarkBundle b = vdp();
  DaeSolution sol = b.initial_guess(Method::Primal);
  sol.y(3, 0) = 0.1 + 0.2;
  const Multipliers m = recover_multipliers(b.spec, sol, 1.0 / 3.0);
  const std::string csv = trajectory_csv(b.spec, sol, m);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x1,x2,p1,p2,u1,lg1,lc1,lc2");
  int rows = 0;
  std::vector<std::string> row3;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    EXPECT_EQ(cells.size(), 9u);
    if (rows == 3) row3 = cells;
    ++rows;
  }
  EXPECT_EQ(rows, 41);
  ASSERT_EQ(row3.size(), 9u);
  EXPECT_EQ(std::stod(row3[1]), 0.1 + 0.2);
  EXPECT_EQ(std::stod(row3[6]), m.g(3, 0));
}

TEST(AtomicWrite, ReplacesContent) {
  const auto dir = std::filesystem::temp_directory_path() / "ipoc_report_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "out.json").string();
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "second");
  size_t files = 0;
  for (auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(write_file_atomic("/nonexistent-dir/x/y.json", "z"), Error);
}

TEST(ParseMethod, Names) {
  EXPECT_EQ(parse_method("primal"), Method::Primal);
  EXPECT_EQ(parse_method("primal-dual"), Method::PrimalDual);
  EXPECT_THROW(parse_method("dual"), InvalidArgument);
}
