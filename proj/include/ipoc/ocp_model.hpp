#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace ipoc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Problem sizes: n states, m controls, n_g pure state constraints, n_c mixed
/// constraints, n_h boundary conditions.
struct OcpDims {
  int n = 1;
  int m = 1;
  int n_g = 0;
  int n_c = 0;
  int n_h = 1;

  /// Throws DimensionError unless n, m, n_h >= 1 and n_g, n_c >= 0.
  void check() const;
};

/// A constrained optimal control problem
///
///   min  phi(x(T)) + int_0^T ell(x, u) dt
///   s.t. x' = f(x, u),  h(x(0), x(T)) = 0,  g(x) <= 0,  c(x, u) <= 0
///
/// described pointwise through callbacks and their first derivatives.
/// Jacobians are row-major in the mathematical sense: f_x is n x n with
/// entry (i, j) = d f_i / d x_j. Gradients of scalars are column vectors.
///
/// Callbacks must be deterministic and reentrant. `phi`/`phi_x` may be left
/// empty (zero terminal cost); constraint callbacks may be empty when the
/// matching count is zero.
struct OcpSpec {
  using VecFn = std::function<Vec(const Vec& x, const Vec& u)>;
  using MatFn = std::function<Mat(const Vec& x, const Vec& u)>;
  using ScalarFn = std::function<double(const Vec& x, const Vec& u)>;
  using StateVecFn = std::function<Vec(const Vec& x)>;
  using StateMatFn = std::function<Mat(const Vec& x)>;
  using BoundaryVecFn = std::function<Vec(const Vec& x0, const Vec& xT)>;
  using BoundaryMatFn = std::function<Mat(const Vec& x0, const Vec& xT)>;

  std::string name;
  OcpDims dims;
  /// Fixed horizon T > 0. For a free-horizon spec this value is ignored.
  double horizon = 1.0;
  bool free_horizon = false;

  VecFn f;
  MatFn f_x;
  MatFn f_u;

  ScalarFn ell;
  VecFn ell_x;
  VecFn ell_u;

  std::function<double(const Vec& x)> phi;
  StateVecFn phi_x;

  StateVecFn g;
  StateMatFn g_x;

  VecFn c;
  MatFn c_x;
  MatFn c_u;

  BoundaryVecFn h;
  BoundaryMatFn h_x0;
  BoundaryMatFn h_xT;

  // Evaluation helpers that supply the empty defaults described above.
  double eval_phi(const Vec& x) const;
  Vec eval_phi_x(const Vec& x) const;
  Vec eval_g(const Vec& x) const;
  Mat eval_g_x(const Vec& x) const;
  Vec eval_c(const Vec& x, const Vec& u) const;
  Mat eval_c_x(const Vec& x, const Vec& u) const;
  Mat eval_c_u(const Vec& x, const Vec& u) const;
};

struct GradientCheck {
  std::string callback;
  double max_deviation = 0.0;
};

struct ValidationReport {
  std::vector<GradientCheck> checks;
  double max_deviation = 0.0;
};

/// Relative agreement required between analytic and finite-difference
/// derivatives in `validate`.
inline constexpr double kGradientCheckTolerance = 1e-4;

/// Checks every callback's output shape and compares every analytic
/// derivative against central finite differences at (x, u). The boundary map
/// is probed at (x0, xT) = (x, x).
///
/// Throws DimensionError naming the first callback with a wrong shape, and
/// GradientCheckError naming the callback with the worst disagreement.
ValidationReport validate(const OcpSpec& spec, const Vec& x, const Vec& u);

/// Rewrites a free-horizon problem on [0, 1] with the horizon appended as an
/// extra constant state: (x, T)' = (T f(x, u), 0), running cost T ell(x, u).
/// Constraints, terminal cost and boundary map ignore the extra state.
/// Fixed-horizon specs are returned unchanged.
OcpSpec to_fixed_time(const OcpSpec& spec);

}  // namespace ipoc
