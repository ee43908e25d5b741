#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ipoc/problems.hpp"
#include "ipoc/report_io.hpp"

namespace {

constexpr int kUnknownProblem = 2;
constexpr int kSolverFailure = 3;
constexpr int kUsage = 64;
constexpr int kBadReport = 65;

struct SolveArgs {
  std::string problem;
  std::string method = "primal-dual";
  std::optional<double> eps0, alpha, tol, newton_tol, mesh_tol;
  std::string out, report;
};

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

int cmd_solve(const SolveArgs& a) {
  const auto names = ipoc::benchmark_names();
  if (std::find(names.begin(), names.end(), a.problem) == names.end()) {
    std::cerr << "error: unknown problem '" << a.problem << "' (known: " << join_names(names)
              << ")\n";
    return kUnknownProblem;
  }
  ipoc::Method method;
  try {
    method = ipoc::parse_method(a.method);
  } catch (const ipoc::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  const ipoc::BenchmarkBundle bundle = ipoc::make_benchmark(a.problem);

  ipoc::SolveReport rep;
  rep.problem = a.problem;
  rep.method = method;
  rep.config = bundle.config(method);
  rep.options = bundle.options(method);
  if (a.eps0) rep.config.eps0 = *a.eps0;
  if (a.alpha) rep.config.alpha = *a.alpha;
  if (a.tol) rep.config.tol = *a.tol;
  if (a.newton_tol) rep.options.newton_tol = *a.newton_tol;
  if (a.mesh_tol) rep.options.mesh_tol = *a.mesh_tol;
  rep.reference = bundle.reference_row(method);
  rep.corrections = bundle.corrections;
  rep.run.method = method;
  try {
    rep.config.check();
    if (!(rep.options.newton_tol > 0.0 && rep.options.newton_tol < 1.0)) {
      throw ipoc::InvalidArgument("newton-tol must lie in (0, 1)");
    }
    if (!(rep.options.mesh_tol > 0.0)) throw ipoc::InvalidArgument("mesh-tol must be positive");
  } catch (const ipoc::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  auto write_report = [&]() {
    if (a.report.empty()) return;
    ipoc::write_file_atomic(a.report, ipoc::report_to_json(rep).dump(2) + "\n");
  };

  try {
    const ipoc::ContinuationResult res =
        ipoc::run(method, bundle.spec, bundle.initial_guess(method), rep.config, rep.options);
    rep.success = true;
    rep.run = res.report;
    const double eps = res.report.eps_schedule.back();
    rep.kkt = ipoc::kkt_report(bundle.spec, res.solution, res.multipliers, eps);
    if (!a.out.empty()) {
      ipoc::write_file_atomic(a.out,
                              ipoc::trajectory_csv(bundle.spec, res.solution, res.multipliers));
    }
    write_report();
    std::cout << a.problem << " " << ipoc::method_name(method) << ": "
              << res.report.eps_iterations << " barrier steps, final eps "
              << ipoc::format_double(eps) << ", " << res.report.final_mesh_len
              << " mesh points, cost " << ipoc::format_double(rep.kkt->cost) << ", "
              << ipoc::format_double(res.report.wall_time) << " s\n";
    return 0;
  } catch (const ipoc::ContinuationError& e) {
    rep.error = e.what();
    rep.run = e.partial_report();
    if (e.has_last_good()) {
      try {
        const ipoc::Multipliers mult =
            method == ipoc::Method::Primal
                ? ipoc::recover_multipliers(bundle.spec, e.last_good(), e.last_good_eps())
                : ipoc::native_multipliers(bundle.spec, e.last_good());
        rep.kkt = ipoc::kkt_report(bundle.spec, e.last_good(), mult, e.last_good_eps());
      } catch (const ipoc::Error&) {
      }
    }
  } catch (const ipoc::Error& e) {
    rep.error = e.what();
  }
  try {
    write_report();
  } catch (const ipoc::Error& w) {
    std::cerr << "error: " << w.what() << "\n";
  }
  std::cerr << "error: " << rep.error << "\n";
  return kSolverFailure;
}

int cmd_table(const std::vector<std::string>& files) {
  if (files.empty()) {
    std::cerr << "error: table needs at least one report file\n";
    return kUsage;
  }
  std::vector<ipoc::SolveReport> reports;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot read '" << f << "'\n";
      return kBadReport;
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
      reports.push_back(ipoc::parse_report(text.str()));
    } catch (const ipoc::ReportFormatError& e) {
      std::cerr << "error: " << f << ": " << e.what() << "\n";
      return kBadReport;
    }
  }
  std::cout << ipoc::render_table(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interior-point continuation for constrained optimal control"};
  app.require_subcommand(1);

  SolveArgs solve;
  CLI::App* sub_solve = app.add_subcommand("solve", "Run a benchmark problem");
  sub_solve->add_option("--problem", solve.problem, "Problem name (vdp, zermelo, goddard)")
      ->required();
  sub_solve->add_option("--method", solve.method, "primal or primal-dual")
      ->capture_default_str();
  sub_solve->add_option("--eps0", solve.eps0, "Initial barrier parameter");
  sub_solve->add_option("--alpha", solve.alpha, "Decay ratio in (0, 1)");
  sub_solve->add_option("--tol", solve.tol, "Terminal barrier threshold");
  sub_solve->add_option("--newton-tol", solve.newton_tol, "Newton tolerance");
  sub_solve->add_option("--mesh-tol", solve.mesh_tol, "Mesh residual tolerance");
  sub_solve->add_option("--out", solve.out, "Trajectory CSV path");
  sub_solve->add_option("--report", solve.report, "JSON report path");

  std::vector<std::string> files;
  CLI::App* sub_table = app.add_subcommand("table", "Render reports as a comparison table");
  sub_table->add_option("reports", files, "Report JSON files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*sub_solve) return cmd_solve(solve);
    return cmd_table(files);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
}
