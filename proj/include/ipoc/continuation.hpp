#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ipoc/bvpdae.hpp"
#include "ipoc/transcription.hpp"

namespace ipoc {

struct ContinuationConfig {
  double eps0 = 1.0;
  double alpha = 0.5;
  double tol = 1e-7;
  /// When an inner solve from the previous solution fails, retry it once
  /// from the tangent predictor (see ipoc::predict).
  bool predictor_retry = true;

  /// Throws InvalidArgument unless eps0 > 0, 0 < alpha < 1 and tol > 0.
  /// tol >= eps0 is accepted and yields a single solve.
  void check() const;

  /// The barrier values eps0 * alpha^k, stopping at the first one <= tol.
  std::vector<double> schedule() const;
};

struct RunReport {
  Method method = Method::Primal;
  int eps_iterations = 0;
  std::vector<double> eps_schedule;
  std::vector<int> newton_iters_per_eps;
  std::vector<int> mesh_len_per_eps;
  int final_mesh_len = 0;
  double wall_time = 0.0;
};

/// Called after every converged outer solve with its barrier value.
using StepObserver = std::function<void(int step, double eps, const DaeSolution& solution)>;

struct ContinuationResult {
  DaeSolution solution;
  Multipliers multipliers;
  RunReport report;
};

/// Inner solve failure during a run. Carries the last converged pair so the
/// caller can restart with a larger decay ratio.
class ContinuationError : public Error {
 public:
  ContinuationError(const std::string& what, double failed_eps, bool has_last_good,
                    double last_good_eps, DaeSolution last_good, RunReport partial)
      : Error(what),
        failed_eps_(failed_eps),
        has_last_good_(has_last_good),
        last_good_eps_(last_good_eps),
        last_good_(std::move(last_good)),
        partial_(std::move(partial)) {}

  double failed_eps() const noexcept { return failed_eps_; }
  bool has_last_good() const noexcept { return has_last_good_; }
  double last_good_eps() const noexcept { return last_good_eps_; }
  const DaeSolution& last_good() const noexcept { return last_good_; }
  const RunReport& partial_report() const noexcept { return partial_; }

 private:
  double failed_eps_;
  bool has_last_good_;
  double last_good_eps_;
  DaeSolution last_good_;
  RunReport partial_;
};

/// Barrier continuation on the primal system. The guess must be strictly
/// interior at every node (InfeasibleStart otherwise). Multipliers in the
/// result are recovered from the final barrier value.
ContinuationResult run_primal(const OcpSpec& spec, const DaeSolution& guess,
                              const ContinuationConfig& config, const SolverOptions& options = {},
                              const StepObserver& observer = {});

/// Continuation on the primal-dual system. No interiority requirement.
ContinuationResult run_primal_dual(const OcpSpec& spec, const DaeSolution& guess,
                                   const ContinuationConfig& config,
                                   const SolverOptions& options = {},
                                   const StepObserver& observer = {});

ContinuationResult run(Method method, const OcpSpec& spec, const DaeSolution& guess,
                       const ContinuationConfig& config, const SolverOptions& options = {},
                       const StepObserver& observer = {});

}  // namespace ipoc
