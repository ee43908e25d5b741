#pragma once

#include <vector>

#include "ipoc/bvpdae.hpp"
#include "ipoc/transcription.hpp"

namespace ipoc {

/// Trapezoidal rule for node values on a (possibly nonuniform) grid.
double trapezoid(const Vec& time, const Vec& values);

/// Largest constraint values over the mesh nodes, one entry per constraint.
struct InteriorityMargins {
  Vec g;  ///< max_t g_i(x(t))
  Vec c;  ///< max_t c_i(x(t), u(t))
  /// True when every margin is strictly negative.
  bool strictly_interior() const;
};

/// First-order optimality diagnostics of a discrete solution against the
/// unpenalized stationarity system, with the multipliers treated as
/// densities.
struct KktReport {
  double stationarity_res = 0.0;  ///< max over nodes of |H_u + c_u^T lambda_c|_inf
  double adjoint_res = 0.0;  ///< max over intervals of |dp + int (H_x + g_x^T lg + c_x^T lc) dt|
  double bc_res = 0.0;            ///< |R(y(0), y(T), lambda)|_inf
  Vec comp_state;                 ///< int g_i lambda_g_i dt, per constraint
  Vec comp_mixed;                 ///< int c_i lambda_c_i dt, per constraint
  double comp_state_max = 0.0;    ///< max_i |comp_state_i|
  double comp_mixed_max = 0.0;
  double comp_state_shifted = 0.0;  ///< max_i |comp_state_i + eps T|
  double comp_mixed_shifted = 0.0;
  double nonneg_viol = 0.0;  ///< magnitude of the most negative multiplier, 0 if none
  InteriorityMargins margins;
  Vec multiplier_l1_g;  ///< L1 norm of each lambda_g_i
  Vec multiplier_l1_c;
  double eps = 0.0;
  double horizon = 0.0;
  double cost = 0.0;  ///< phi(x(T)) + int ell dt on the fixed-horizon spec
};

/// Never throws on a converged input.
KktReport kkt_report(const OcpSpec& spec, const DaeSolution& solution,
                     const Multipliers& multipliers, double eps);

InteriorityMargins interiority_check(const OcpSpec& spec, const DaeSolution& solution);

/// Cumulative measure mu_i(t_k) = -int_{t_k}^T lambda_g_i ds at every node,
/// (N+1) x n_g, with mu(T) = 0.
Mat state_measure(const Vec& time, const Mat& lambda_g);

/// phi(x(T)) + int_0^T ell(x, u) dt, Simpson per interval with the collocated
/// midpoint control (node trapezoid when slopes are absent).
double cost_integral(const OcpSpec& spec, const DaeSolution& solution);

}  // namespace ipoc
