#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

namespace ipoc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Semi-explicit index-1 boundary value DAE with unknown parameters p:
///
///   y' = F(t, y, z, p; eps),   0 = G(t, y, z, p; eps),   0 = R(y(0), y(T), p).
///
/// F and G return false when (y, z) lies outside their domain (for barrier
/// systems: a constraint is not strictly negative). The optional Jacobian
/// callbacks replace the default central finite differences; they follow the
/// same domain convention.
struct DaeSystem {
  using PointFn = std::function<bool(double t, const Vec& y, const Vec& z, const Vec& p,
                                     double eps, Vec& out)>;
  using PointJacFn = std::function<bool(double t, const Vec& y, const Vec& z, const Vec& p,
                                        double eps, Mat& d_y, Mat& d_z, Mat& d_p)>;
  using BcFn = std::function<void(const Vec& ya, const Vec& yb, const Vec& p, Vec& out)>;
  using BcJacFn = std::function<void(const Vec& ya, const Vec& yb, const Vec& p, Mat& d_ya,
                                     Mat& d_yb, Mat& d_p)>;

  std::string name;
  int n_y = 0;
  int n_z = 0;
  int n_p = 0;
  double horizon = 1.0;
  /// Barrier parameter handed to F and G. Mutated between solves by the
  /// continuation driver, never during one.
  double eps = 0.0;

  PointFn rhs;
  PointFn alg;
  BcFn bc;

  PointJacFn rhs_jac;
  PointJacFn alg_jac;
  BcJacFn bc_jac;
};

}  // namespace ipoc
