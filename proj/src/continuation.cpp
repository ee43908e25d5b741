#include "ipoc/continuation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "ipoc/errors.hpp"

namespace ipoc {

void ContinuationConfig::check() const {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw InvalidArgument("eps0 must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
}

std::vector<double> ContinuationConfig::schedule() const {
  check();
  std::vector<double> out{eps0};
  // pow rather than repeated products keeps every entry within one rounding
  // of eps0 * alpha^k. An entry that equals tol up to that rounding ends the
  // schedule.
  const double stop = tol * (1.0 + 8.0 * std::numeric_limits<double>::epsilon());
  for (int k = 1; out.back() > stop; ++k) out.push_back(eps0 * std::pow(alpha, k));
  return out;
}

namespace {

void require_interior(const OcpSpec& spec, const DaeSolution& guess) {
  const int n = spec.dims.n, m = spec.dims.m;
  auto check_point = [&](const Vec& x, const Vec& u, const std::string& where) {
    const Vec g = spec.eval_g(x), c = spec.eval_c(x, u);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (!(g(i) < 0.0)) {
        std::ostringstream msg;
        msg << "primal start is not strictly interior: g" << i + 1 << " = " << g(i) << " at "
            << where;
        throw InfeasibleStart(msg.str());
      }
    }
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (!(c(i) < 0.0)) {
        std::ostringstream msg;
        msg << "primal start is not strictly interior: c" << i + 1 << " = " << c(i) << " at "
            << where;
        throw InfeasibleStart(msg.str());
      }
    }
  };
  for (Eigen::Index k = 0; k < guess.y.rows(); ++k) {
    check_point(guess.y.row(k).head(n).transpose(), guess.z.row(k).head(m).transpose(),
                "node " + std::to_string(k));
  }
}

ContinuationResult drive(Method method, const OcpSpec& spec, const DaeSolution& guess,
                         const ContinuationConfig& config, const SolverOptions& options,
                         const StepObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> schedule = config.schedule();
  DaeSystem system = make_system(spec, method);

  RunReport report;
  report.method = method;
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  DaeSolution current = guess;
  bool have_good = false;
  double good_eps = 0.0;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const double eps = schedule[k];
    try {
      const double eps_prev = system.eps;
      system.eps = eps;
      try {
        current = solve(system, current, options);
      } catch (const Error&) {
        if (!have_good || !config.predictor_retry) throw;
        // Retry once from the first-order prediction along the path.
        system.eps = eps_prev;
        const DaeSolution pred = predict(system, current, eps);
        system.eps = eps;
        current = solve(system, pred, options);
      }
    } catch (const Error& e) {
      report.wall_time = elapsed();
      std::ostringstream msg;
      msg << method_name(method) << " continuation failed at eps = " << eps << " (step " << k
          << "): " << e.what();
      throw ContinuationError(msg.str(), eps, have_good, good_eps,
                              have_good ? current : DaeSolution{}, report);
    }
    have_good = true;
    good_eps = eps;
    report.eps_schedule.push_back(eps);
    report.newton_iters_per_eps.push_back(current.newton_iters);
    report.mesh_len_per_eps.push_back(static_cast<int>(current.mesh.nodes.size()));
    report.eps_iterations = static_cast<int>(report.eps_schedule.size());
    report.final_mesh_len = static_cast<int>(current.mesh.nodes.size());
    if (observer) observer(static_cast<int>(k), eps, current);
  }

  ContinuationResult result;
  result.multipliers = method == Method::Primal
                           ? recover_multipliers(spec, current, schedule.back())
                           : native_multipliers(spec, current);
  result.solution = std::move(current);
  report.wall_time = elapsed();
  result.report = std::move(report);
  return result;
}

}  // namespace

ContinuationResult run_primal(const OcpSpec& spec, const DaeSolution& guess,
                              const ContinuationConfig& config, const SolverOptions& options,
                              const StepObserver& observer) {
  config.check();
  require_interior(spec, guess);
  return drive(Method::Primal, spec, guess, config, options, observer);
}

ContinuationResult run_primal_dual(const OcpSpec& spec, const DaeSolution& guess,
                                   const ContinuationConfig& config,
                                   const SolverOptions& options, const StepObserver& observer) {
  config.check();
  for (Eigen::Index k = 0; k < guess.y.rows(); ++k) {
    if (!guess.y.row(k).allFinite() || !guess.z.row(k).allFinite()) {
      throw InvalidArgument("primal-dual guess has non-finite values at node " +
                            std::to_string(k));
    }
  }
  return drive(Method::PrimalDual, spec, guess, config, options, observer);
}

ContinuationResult run(Method method, const OcpSpec& spec, const DaeSolution& guess,
                       const ContinuationConfig& config, const SolverOptions& options,
                       const StepObserver& observer) {
  return method == Method::Primal ? run_primal(spec, guess, config, options, observer)
                                  : run_primal_dual(spec, guess, config, options, observer);
}

}  // namespace ipoc
