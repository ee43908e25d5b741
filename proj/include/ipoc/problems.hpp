#pragma once

#include <string>
#include <vector>

#include "ipoc/continuation.hpp"

namespace ipoc {

/// One row of a published performance table. exec_time_s is informational.
struct ReferenceRow {
  Method method = Method::Primal;
  double alpha = 0.0;
  int iterations = 0;
  int mesh_len = 0;
  double exec_time_s = 0.0;
};

struct BenchmarkBundle {
  std::string name;
  OcpSpec original;  ///< problem as stated (possibly free horizon)
  OcpSpec spec;      ///< fixed-horizon form used by the solvers
  OcpTrajectory guess_primal;
  OcpTrajectory guess_primal_dual;
  ContinuationConfig config_primal;
  ContinuationConfig config_primal_dual;
  SolverOptions options_primal;
  SolverOptions options_primal_dual;
  std::vector<ReferenceRow> reference;
  /// Corrections applied to the published problem data, for reports.
  std::vector<std::string> corrections;

  const OcpTrajectory& guess(Method method) const;
  const ContinuationConfig& config(Method method) const;
  const SolverOptions& options(Method method) const;
  const ReferenceRow& reference_row(Method method) const;
  DaeSolution initial_guess(Method method) const;
};

/// Van der Pol oscillator with a state constraint and control bounds.
BenchmarkBundle vdp();

/// Zermelo navigation around an elliptic obstacle, minimum time.
BenchmarkBundle zermelo();

/// Goddard rocket with a dynamic-pressure limit, maximum altitude gain.
BenchmarkBundle goddard();

/// Registry keys, in table order: vdp, zermelo, goddard.
std::vector<std::string> benchmark_names();

/// Throws InvalidArgument naming the registry keys for an unknown name.
BenchmarkBundle make_benchmark(const std::string& name);

}  // namespace ipoc
