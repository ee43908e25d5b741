#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "ipoc/dae_system.hpp"
#include "ipoc/errors.hpp"

namespace ipoc {

/// Strictly increasing time grid 0 = t_0 < ... < t_N = horizon.
struct Mesh {
  Vec nodes;

  static Mesh uniform(double horizon, int intervals);

  int intervals() const { return static_cast<int>(nodes.size()) - 1; }
  double horizon() const { return nodes(nodes.size() - 1); }

  /// Throws InvalidArgument unless there are at least two intervals, the
  /// grid starts at 0, is strictly increasing, and no interval is shorter
  /// than 1e-12 of the horizon.
  void check() const;
};

/// Discrete trajectories of a DaeSystem on a mesh. Matrices store one row per
/// node (or per interval for `z_mid`).
struct DaeSolution {
  Mesh mesh;
  Mat y;          ///< (N+1) x n_y differential values at nodes
  Mat z;          ///< (N+1) x n_z algebraic values at nodes
  Mat z_mid;      ///< N x n_z algebraic values at interval midpoints
  Vec params;     ///< n_p unknown parameters
  Mat yp;         ///< (N+1) x n_y slopes F at nodes; drives the C1 interpolant
  Vec interval_residuals;  ///< N residual estimates (empty until solved)
  int newton_iters = 0;    ///< Newton iterations summed over all mesh passes
  int mesh_passes = 0;
  bool converged = false;
  /// Residual infinity-norms of the Newton sequence on the final mesh.
  std::vector<double> newton_history;

  int intervals() const { return mesh.intervals(); }
};

struct SolverOptions {
  double newton_tol = 1e-8;  ///< on the scaled residual infinity-norm
  double mesh_tol = 1e-6;    ///< on the per-interval residual estimate
  int max_newton = 50;       ///< per mesh pass
  int max_mesh_points = 10000;
  int max_mesh_passes = 40;
  double min_damping = 1e-4;
  bool verbose = false;
};

/// Solver failure that still carries the best iterate reached.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, DaeSolution best)
      : Error(what), best_(std::move(best)) {}
  const DaeSolution& best() const noexcept { return best_; }

 private:
  DaeSolution best_;
};

/// Newton stagnated at minimal damping or ran out of iterations.
class NoConvergence : public SolveError {
 public:
  using SolveError::SolveError;
};

/// Mesh refinement would exceed SolverOptions::max_mesh_points.
class MeshLimit : public SolveError {
 public:
  using SolveError::SolveError;
};

/// The system cannot be evaluated at the starting point (barrier domain).
class InfeasibleStart : public Error {
 public:
  using Error::Error;
};

/// Builds a guess from node values; midpoint algebraic values are the
/// averages of adjacent node values.
DaeSolution make_guess(const Mesh& mesh, const Mat& y, const Mat& z, const Vec& params);

/// Solves the boundary value DAE by 3-stage Lobatto IIIA collocation (nodes
/// and interval midpoints) with damped Newton and adaptive mesh refinement.
DaeSolution solve(const DaeSystem& system, const DaeSolution& guess,
                  const SolverOptions& options = {});

/// Per-interval estimate h_i * max_k |S'(t_k) - F(t_k, S(t_k), Z(t_k))|_inf /
/// (1 + |F|_inf) over the two Gauss points t_k of each interval, where S is
/// the C1 cubic interpolant and Z the quadratic through node/mid/node values.
/// Intervals where F cannot be evaluated report +infinity.
Vec estimate_residual(const DaeSystem& system, const DaeSolution& solution);

/// Splits intervals above `mesh_tol` (in thirds above 100 x mesh_tol, in
/// halves otherwise or when the residual is not finite) and merges adjacent
/// pairs that are both below mesh_tol / 100. The returned guess samples the
/// C1 interpolant for y and the piecewise-linear node/mid/node interpolant for
/// z. Throws MeshLimit when the new mesh would exceed `max_mesh_points`.
DaeSolution refine_mesh(const DaeSolution& solution, const Vec& residuals, double mesh_tol,
                        int max_mesh_points = SolverOptions{}.max_mesh_points);

/// Evaluates the solution at time t: y from the C1 cubic interpolant, z from
/// the quadratic through node/mid/node values. Exact stored values at nodes.
/// Throws RangeError outside [0, horizon].
std::pair<Vec, Vec> interpolate(const DaeSolution& solution, double t);

/// First-order predictor along the solution path in the barrier parameter:
/// solves J dx/deps = -dr/deps at `solution` (a converged solve of `system`
/// at system.eps) and steps to `eps_next`, halving the step while the system
/// cannot be evaluated. Returns `solution` unchanged when no step works.
DaeSolution predict(const DaeSystem& system, const DaeSolution& solution, double eps_next);

/// Fills `solution.yp` with F at every node. Returns false when F cannot be
/// evaluated somewhere.
bool compute_slopes(const DaeSystem& system, DaeSolution& solution);

// Access to the discrete equations, for verification.

/// Row weights 1 / (1 + max_i |F_k(t_i)|) from the stored slopes; solve()
/// computes them once from the initial guess.
Vec collocation_weights(const DaeSolution& solution);

/// Unknown vector in solver order: per interval [y_i, z_i, z_mid_i], then
/// [y_N, z_N], then the parameters.
Vec pack_unknowns(const DaeSystem& system, const DaeSolution& solution);

/// Residual of the collocation equations. False outside the system domain.
bool collocation_residual(const DaeSystem& system, const Mesh& mesh, const Vec& weights,
                          const Vec& unknowns, Vec& residual);

/// Assembled Newton matrix, expanded to dense form.
bool collocation_jacobian(const DaeSystem& system, const Mesh& mesh, const Vec& weights,
                          const Vec& unknowns, Mat& dense);

}  // namespace ipoc
