#include "ipoc/bvpdae.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "ipoc/abd_linalg.hpp"

namespace ipoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// sqrt(machine epsilon)
constexpr double kFdStep = 1.4901161193847656e-08;

bool all_finite(const Vec& v) { return v.allFinite(); }

std::string fmt_sci(double v) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// Pointwise Jacobians

struct PointArgs {
  Vec y, z, p;
};

// One column of a central-difference Jacobian in variable `var(j)`; falls back
// to a one-sided difference when one probe leaves the domain.
bool fd_column(const DaeSystem::PointFn& fn, double t, PointArgs& a, Vec& var, Eigen::Index j,
               double eps, const Vec& base, Eigen::Ref<Vec> col) {
  const double orig = var(j);
  const double step = kFdStep * (1.0 + std::abs(orig));
  Vec plus, minus;
  var(j) = orig + step;
  const bool ok_plus = fn(t, a.y, a.z, a.p, eps, plus) && all_finite(plus);
  var(j) = orig - step;
  const bool ok_minus = fn(t, a.y, a.z, a.p, eps, minus) && all_finite(minus);
  var(j) = orig;
  if (ok_plus && ok_minus) {
    col = (plus - minus) / (2.0 * step);
  } else if (ok_plus) {
    col = (plus - base) / step;
  } else if (ok_minus) {
    col = (base - minus) / step;
  } else {
    return false;
  }
  return true;
}

bool point_jacobian(const DaeSystem::PointFn& fn, const DaeSystem::PointJacFn& analytic,
                    int rows, double t, const Vec& y, const Vec& z, const Vec& p, double eps,
                    Mat& dy, Mat& dz, Mat& dp) {
  if (analytic) return analytic(t, y, z, p, eps, dy, dz, dp);
  Vec base;
  if (!fn(t, y, z, p, eps, base) || !all_finite(base)) return false;
  PointArgs a{y, z, p};
  dy.resize(rows, y.size());
  dz.resize(rows, z.size());
  dp.resize(rows, p.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (!fd_column(fn, t, a, a.y, j, eps, base, dy.col(j))) return false;
  }
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (!fd_column(fn, t, a, a.z, j, eps, base, dz.col(j))) return false;
  }
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (!fd_column(fn, t, a, a.p, j, eps, base, dp.col(j))) return false;
  }
  return true;
}

void bc_jacobian(const DaeSystem& sys, const Vec& ya, const Vec& yb, const Vec& p, Mat& d_ya,
                 Mat& d_yb, Mat& d_p) {
  if (sys.bc_jac) {
    sys.bc_jac(ya, yb, p, d_ya, d_yb, d_p);
    return;
  }
  const int rows = sys.n_y + sys.n_p;
  Vec a = ya, b = yb, q = p, plus, minus;
  auto column = [&](Vec& var, Eigen::Index j, Eigen::Ref<Vec> col) {
    const double orig = var(j);
    const double step = kFdStep * (1.0 + std::abs(orig));
    var(j) = orig + step;
    sys.bc(a, b, q, plus);
    var(j) = orig - step;
    sys.bc(a, b, q, minus);
    var(j) = orig;
    col = (plus - minus) / (2.0 * step);
  };
  d_ya.resize(rows, ya.size());
  d_yb.resize(rows, yb.size());
  d_p.resize(rows, p.size());
  for (Eigen::Index j = 0; j < ya.size(); ++j) column(a, j, d_ya.col(j));
  for (Eigen::Index j = 0; j < yb.size(); ++j) column(b, j, d_yb.col(j));
  for (Eigen::Index j = 0; j < p.size(); ++j) column(q, j, d_p.col(j));
}

// ---------------------------------------------------------------------------
// Interpolation kernels on the unit interval

struct Hermite {
  double h00, h10, h01, h11;      // values
  double d00, d10, d01, d11;      // derivatives with respect to s
  explicit Hermite(double s) {
    const double s2 = s * s, s3 = s2 * s;
    h00 = 2 * s3 - 3 * s2 + 1;
    h10 = s3 - 2 * s2 + s;
    h01 = -2 * s3 + 3 * s2;
    h11 = s3 - s2;
    d00 = 6 * s2 - 6 * s;
    d10 = 3 * s2 - 4 * s + 1;
    d01 = -6 * s2 + 6 * s;
    d11 = 3 * s2 - 2 * s;
  }
};

Vec quadratic_z(const DaeSolution& sol, int i, double s) {
  const double l0 = 2.0 * (s - 0.5) * (s - 1.0);
  const double l1 = -4.0 * s * (s - 1.0);
  const double l2 = 2.0 * s * (s - 0.5);
  return (l0 * sol.z.row(i) + l1 * sol.z_mid.row(i) + l2 * sol.z.row(i + 1)).transpose();
}

Vec linear_z(const DaeSolution& sol, int i, double s) {
  if (s <= 0.5) {
    const double w = 2.0 * s;
    return ((1.0 - w) * sol.z.row(i) + w * sol.z_mid.row(i)).transpose();
  }
  const double w = 2.0 * s - 1.0;
  return ((1.0 - w) * sol.z_mid.row(i) + w * sol.z.row(i + 1)).transpose();
}

Vec hermite_y(const DaeSolution& sol, int i, double s) {
  const double h = sol.mesh.nodes(i + 1) - sol.mesh.nodes(i);
  const Hermite b(s);
  return (b.h00 * sol.y.row(i) + h * b.h10 * sol.yp.row(i) + b.h01 * sol.y.row(i + 1) +
          h * b.h11 * sol.yp.row(i + 1))
      .transpose();
}

Vec hermite_dy(const DaeSolution& sol, int i, double s) {
  const double h = sol.mesh.nodes(i + 1) - sol.mesh.nodes(i);
  const Hermite b(s);
  return ((b.d00 * sol.y.row(i) + b.d01 * sol.y.row(i + 1)) / h + b.d10 * sol.yp.row(i) +
          b.d11 * sol.yp.row(i + 1))
      .transpose();
}

// Interval index k with nodes(k) <= t <= nodes(k+1).
int locate(const Vec& nodes, double t) {
  const double* begin = nodes.data();
  const double* end = begin + nodes.size();
  const double* it = std::upper_bound(begin, end, t);
  int k = static_cast<int>(it - begin) - 1;
  return std::clamp(k, 0, static_cast<int>(nodes.size()) - 2);
}

// ---------------------------------------------------------------------------
// Collocation equations on a fixed mesh

class Collocation {
 public:
  Collocation(const DaeSystem& sys, const Mesh& mesh, const Vec& weights)
      : sys_(sys), mesh_(mesh), weights_(weights) {
    layout_.n_y = sys.n_y;
    layout_.n_z = sys.n_z;
    layout_.n_p = sys.n_p;
    layout_.intervals = mesh.intervals();
  }

  const AbdLayout& layout() const { return layout_; }

  Vec pack(const DaeSolution& sol) const {
    Vec x(layout_.size());
    const int ny = sys_.n_y, nz = sys_.n_z;
    for (int i = 0; i <= layout_.intervals; ++i) {
      x.segment(layout_.node_offset(i), ny) = sol.y.row(i).transpose();
      x.segment(layout_.node_offset(i) + ny, nz) = sol.z.row(i).transpose();
      if (i < layout_.intervals) x.segment(layout_.mid_offset(i), nz) = sol.z_mid.row(i).transpose();
    }
    x.segment(layout_.param_offset(), sys_.n_p) = sol.params;
    return x;
  }

  void unpack(const Vec& x, DaeSolution& sol) const {
    const int N = layout_.intervals, ny = sys_.n_y, nz = sys_.n_z;
    sol.mesh = mesh_;
    sol.y.resize(N + 1, ny);
    sol.z.resize(N + 1, nz);
    sol.z_mid.resize(N, nz);
    for (int i = 0; i <= N; ++i) {
      sol.y.row(i) = x.segment(layout_.node_offset(i), ny).transpose();
      sol.z.row(i) = x.segment(layout_.node_offset(i) + ny, nz).transpose();
      if (i < N) sol.z_mid.row(i) = x.segment(layout_.mid_offset(i), nz).transpose();
    }
    sol.params = x.segment(layout_.param_offset(), sys_.n_p);
  }

  bool residual(const Vec& x, Vec& r) const {
    const int N = layout_.intervals, ny = sys_.n_y, nz = sys_.n_z;
    const Vec p = params(x);
    r.resize(layout_.size());
    std::vector<Vec> f(N + 1);
    Vec g;
    for (int i = 0; i <= N; ++i) {
      const Vec y = node_y(x, i), z = node_z(x, i);
      if (!sys_.rhs(t(i), y, z, p, sys_.eps, f[i]) || !all_finite(f[i])) return false;
      if (!sys_.alg(t(i), y, z, p, sys_.eps, g) || !all_finite(g)) return false;
      r.segment(layout_.node_offset(i), nz) = g;
    }
    Vec fm;
    for (int i = 0; i < N; ++i) {
      const double h = t(i + 1) - t(i);
      const double tm = t(i) + 0.5 * h;
      const Vec yi = node_y(x, i), yj = node_y(x, i + 1), zm = mid_z(x, i);
      const Vec ym = 0.5 * (yi + yj) - (h / 8.0) * (f[i + 1] - f[i]);
      if (!sys_.rhs(tm, ym, zm, p, sys_.eps, fm) || !all_finite(fm)) return false;
      if (!sys_.alg(tm, ym, zm, p, sys_.eps, g) || !all_finite(g)) return false;
      const Eigen::Index row = layout_.node_offset(i) + nz;
      r.segment(row, ny) =
          weights_.cwiseProduct(yj - yi - (h / 6.0) * (f[i] + 4.0 * fm + f[i + 1])) / h;
      r.segment(row + ny, nz) = g;
    }
    Vec bc;
    sys_.bc(node_y(x, 0), node_y(x, N), p, bc);
    if (!all_finite(bc)) return false;
    r.segment(layout_.bc_offset(), layout_.bc_rows()) = bc;
    return true;
  }

  bool jacobian(const Vec& x, AbdMatrix& J) const {
    const int N = layout_.intervals, ny = sys_.n_y, nz = sys_.n_z, np = sys_.n_p;
    const Vec p = params(x);

    struct NodeData {
      Vec f;
      Mat A, B, P;     // dF/dy, dF/dz, dF/dp
      Mat GY, GZ, GP;  // dG/dy, dG/dz, dG/dp
    };
    std::vector<NodeData> nodes(N + 1);
    for (int i = 0; i <= N; ++i) {
      NodeData& nd = nodes[i];
      const Vec y = node_y(x, i), z = node_z(x, i);
      if (!sys_.rhs(t(i), y, z, p, sys_.eps, nd.f)) return false;
      if (!point_jacobian(sys_.rhs, sys_.rhs_jac, ny, t(i), y, z, p, sys_.eps, nd.A, nd.B, nd.P))
        return false;
      if (!point_jacobian(sys_.alg, sys_.alg_jac, nz, t(i), y, z, p, sys_.eps, nd.GY, nd.GZ,
                          nd.GP))
        return false;
    }

    const Mat I = Mat::Identity(ny, ny);
    Mat Am, Bm, Pm, GYm, GZm, GPm;
    for (int i = 0; i < N; ++i) {
      const NodeData& a = nodes[i];
      const NodeData& b = nodes[i + 1];
      const double h = t(i + 1) - t(i);
      const double tm = t(i) + 0.5 * h;
      const Vec zm = mid_z(x, i);
      const Vec ym = 0.5 * (node_y(x, i) + node_y(x, i + 1)) - (h / 8.0) * (b.f - a.f);
      if (!point_jacobian(sys_.rhs, sys_.rhs_jac, ny, tm, ym, zm, p, sys_.eps, Am, Bm, Pm))
        return false;
      if (!point_jacobian(sys_.alg, sys_.alg_jac, nz, tm, ym, zm, p, sys_.eps, GYm, GZm, GPm))
        return false;

      const Mat dym_dyi = 0.5 * I + (h / 8.0) * a.A;
      const Mat dym_dyj = 0.5 * I - (h / 8.0) * b.A;
      const Mat dym_dzi = (h / 8.0) * a.B;
      const Mat dym_dzj = -(h / 8.0) * b.B;
      const Mat dym_dp = (h / 8.0) * (a.P - b.P);

      Mat& L = J.local(i);
      Mat& R = J.next(i);
      Mat& Q = J.param(i);
      L.setZero();
      R.setZero();
      Q.setZero();

      // Algebraic rows at node i.
      L.block(0, 0, nz, ny) = a.GY;
      L.block(0, ny, nz, nz) = a.GZ;
      Q.topRows(nz) = a.GP;

      // Collocation rows, scaled like the residual.
      const double c = h / 6.0;
      Mat coll_L(ny, ny + 2 * nz), coll_R(ny, ny + nz), coll_Q(ny, np);
      coll_L.leftCols(ny) = -I - c * (a.A + 4.0 * Am * dym_dyi);
      coll_L.middleCols(ny, nz) = -c * (a.B + 4.0 * Am * dym_dzi);
      coll_L.rightCols(nz) = -c * 4.0 * Bm;
      coll_R.leftCols(ny) = I - c * (b.A + 4.0 * Am * dym_dyj);
      coll_R.rightCols(nz) = -c * (b.B + 4.0 * Am * dym_dzj);
      coll_Q = -c * (a.P + b.P + 4.0 * (Pm + Am * dym_dp));
      const Eigen::VectorXd row_scale = weights_ / h;
      L.middleRows(nz, ny) = row_scale.asDiagonal() * coll_L;
      R.middleRows(nz, ny) = row_scale.asDiagonal() * coll_R;
      Q.middleRows(nz, ny) = row_scale.asDiagonal() * coll_Q;

      // Algebraic rows at the midpoint.
      const Eigen::Index gm = nz + ny;
      L.block(gm, 0, nz, ny) = GYm * dym_dyi;
      L.block(gm, ny, nz, nz) = GYm * dym_dzi;
      L.block(gm, ny + nz, nz, nz) = GZm;
      R.block(gm, 0, nz, ny) = GYm * dym_dyj;
      R.block(gm, ny, nz, nz) = GYm * dym_dzj;
      Q.bottomRows(nz) = GPm + GYm * dym_dp;
    }

    J.final_node().leftCols(ny) = nodes[N].GY;
    J.final_node().rightCols(nz) = nodes[N].GZ;
    J.final_param() = nodes[N].GP;

    Mat d_ya, d_yb, d_p;
    bc_jacobian(sys_, node_y(x, 0), node_y(x, N), p, d_ya, d_yb, d_p);
    J.bc_first().setZero();
    J.bc_last().setZero();
    J.bc_first().leftCols(ny) = d_ya;
    J.bc_last().leftCols(ny) = d_yb;
    J.bc_param() = d_p;

    for (int i = 0; i < N; ++i) {
      if (!J.local(i).allFinite() || !J.next(i).allFinite() || !J.param(i).allFinite())
        return false;
    }
    return J.final_node().allFinite() && J.bc_first().allFinite() && J.bc_last().allFinite();
  }

 private:
  double t(int i) const { return mesh_.nodes(i); }
  Vec node_y(const Vec& x, int i) const { return x.segment(layout_.node_offset(i), sys_.n_y); }
  Vec node_z(const Vec& x, int i) const {
    return x.segment(layout_.node_offset(i) + sys_.n_y, sys_.n_z);
  }
  Vec mid_z(const Vec& x, int i) const { return x.segment(layout_.mid_offset(i), sys_.n_z); }
  Vec params(const Vec& x) const { return x.segment(layout_.param_offset(), sys_.n_p); }

  const DaeSystem& sys_;
  Mesh mesh_;
  Vec weights_;
  AbdLayout layout_;
};

// ---------------------------------------------------------------------------
// Damped Newton

struct NewtonOutcome {
  Vec x;
  bool converged = false;
  int iters = 0;
  std::vector<double> history;
  std::string failure;
  bool at_roundoff = false;
};

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;
constexpr double kRoundoffFactor = 16.0;

// Damped Newton. A trial step is accepted when it passes an Armijo test on
// |r|^2; a full step is also accepted when the simplified correction
// J^-1 r(x + dx) is at most half of dx (natural monotonicity). Otherwise the
// damping halves. Trial points outside the domain of the system are rejected
// outright. Monotonicity at small damping is too weak a test: it lets the
// iterate drift with |r| growing.
//
// Besides |r|_inf <= newton_tol, the iteration stops when every residual
// component is within newton_tol of its rounding level
// kRoundoffFactor * u * (|J| |x|)_i. Barrier systems close to their boundary
// evaluate g as a difference of O(1) numbers and weight it by eps / g, so
// their residual has a floor far above newton_tol that no iterate in double
// precision can get under.
NewtonOutcome newton(const Collocation& col, Vec x, const SolverOptions& opt) {
  NewtonOutcome out;
  Vec r;
  if (!col.residual(x, r)) {
    throw InfeasibleStart("collocation residual cannot be evaluated at the starting point");
  }
  double norm = r.lpNorm<Eigen::Infinity>();
  out.history.push_back(norm);
  AbdMatrix J(col.layout());
  Vec xt, rt;
  while (true) {
    if (norm <= opt.newton_tol) {
      out.converged = true;
      break;
    }
    if (out.iters >= opt.max_newton) {
      out.failure = "Newton iteration limit reached (residual " + fmt_sci(norm) + ")";
      break;
    }
    if (!col.jacobian(x, J)) {
      out.failure = "Jacobian cannot be evaluated";
      break;
    }
    std::optional<AbdFactorization> fact;
    try {
      fact.emplace(J);
    } catch (const SingularMatrix& e) {
      out.failure = e.what();
      break;
    }
    const Vec dx = fact->solve(-r);
    if (!dx.allFinite()) {
      out.failure = "Newton correction is not finite";
      break;
    }
    const Vec noise = J.multiply_abs(x) * (kRoundoffFactor * kUnitRoundoff);
    if ((r.array().abs() <= opt.newton_tol + noise.array()).all()) {
      out.converged = true;
      out.at_roundoff = true;
      break;
    }
    const double dx_norm = dx.norm();
    const double merit = r.squaredNorm();
    bool accepted = false;
    double lambda = 1.0;
    for (; lambda >= opt.min_damping; lambda *= 0.5) {
      xt = x + lambda * dx;
      if (!col.residual(xt, rt)) continue;
      if (rt.squaredNorm() <= (1.0 - 2e-4 * lambda) * merit) {
        accepted = true;
        break;
      }
      if (lambda < 1.0) continue;
      const Vec dxbar = fact->solve(-rt);
      if (dxbar.allFinite() && dxbar.norm() <= 0.5 * dx_norm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.failure = "Newton stagnated at minimal damping (residual " + fmt_sci(norm) + ")";
      break;
    }
    x.swap(xt);
    r.swap(rt);
    norm = r.lpNorm<Eigen::Infinity>();
    ++out.iters;
    out.history.push_back(norm);
    if (opt.verbose) {
      std::clog << "  newton " << out.iters << ": |r|=" << norm << " damping " << lambda
                << " |dx|=" << dx_norm << "\n";
    }
  }
  out.x = std::move(x);
  return out;
}

void check_shape(const DaeSystem& sys, const DaeSolution& sol) {
  sol.mesh.check();
  const Eigen::Index n1 = sol.mesh.nodes.size();
  if (sol.y.rows() != n1 || sol.y.cols() != sys.n_y || sol.z.rows() != n1 ||
      sol.z.cols() != sys.n_z || sol.z_mid.rows() != n1 - 1 || sol.z_mid.cols() != sys.n_z ||
      sol.params.size() != sys.n_p) {
    throw DimensionError("guess shape does not match the system dimensions");
  }
  if (!sol.y.allFinite() || !sol.z.allFinite() || !sol.z_mid.allFinite() ||
      !sol.params.allFinite()) {
    throw InvalidArgument("guess contains non-finite values");
  }
  if (std::abs(sol.mesh.horizon() - sys.horizon) > 1e-12 * sys.horizon) {
    throw InvalidArgument("guess mesh does not end at the system horizon");
  }
}

DaeSolution refine_impl(const DaeSolution& sol, const Vec& res, double tol, int max_points,
                        bool allow_coarsen, bool allow_thirds) {
  const int N = sol.intervals();
  const Vec& t = sol.mesh.nodes;
  std::vector<double> nodes;
  nodes.reserve(2 * N + 2);
  int i = 0;
  while (i < N) {
    const double r = res(i);
    const double h = t(i + 1) - t(i);
    nodes.push_back(t(i));
    if (!std::isfinite(r)) {
      nodes.push_back(t(i) + 0.5 * h);
    } else if (r > 100.0 * tol && allow_thirds) {
      nodes.push_back(t(i) + h / 3.0);
      nodes.push_back(t(i) + 2.0 * h / 3.0);
    } else if (r > tol) {
      nodes.push_back(t(i) + 0.5 * h);
    } else if (allow_coarsen && i + 1 < N && r < tol / 100.0 && res(i + 1) < tol / 100.0) {
      ++i;  // drop the shared node t(i+1)
    }
    ++i;
  }
  nodes.push_back(t(N));
  if (allow_coarsen && nodes.size() < 3) {
    return refine_impl(sol, res, tol, max_points, false, allow_thirds);
  }
  if (static_cast<int>(nodes.size()) > max_points) {
    throw MeshLimit("mesh refinement needs " + std::to_string(nodes.size()) +
                        " points, limit is " + std::to_string(max_points),
                    sol);
  }

  DaeSolution out;
  out.mesh.nodes = Eigen::Map<const Vec>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
  const int M = out.intervals();
  out.y.resize(M + 1, sol.y.cols());
  out.z.resize(M + 1, sol.z.cols());
  out.z_mid.resize(M, sol.z.cols());
  out.params = sol.params;
  auto sample = [&](double tt, bool want_y, Vec* y, Vec* z) {
    const int k = locate(t, tt);
    const double s = (tt - t(k)) / (t(k + 1) - t(k));
    if (want_y) *y = (s == 0.0) ? Vec(sol.y.row(k).transpose())
                     : (s == 1.0) ? Vec(sol.y.row(k + 1).transpose())
                                  : hermite_y(sol, k, s);
    *z = linear_z(sol, k, s);
  };
  Vec y, z;
  for (int j = 0; j <= M; ++j) {
    sample(out.mesh.nodes(j), true, &y, &z);
    out.y.row(j) = y.transpose();
    out.z.row(j) = z.transpose();
    if (j < M) {
      sample(0.5 * (out.mesh.nodes(j) + out.mesh.nodes(j + 1)), false, nullptr, &z);
      out.z_mid.row(j) = z.transpose();
    }
  }
  return out;
}

// Flags intervals whose nodes or collocation midpoint fall outside the
// domain of the system.
std::vector<char> infeasible_intervals(const DaeSystem& sys, const DaeSolution& sol) {
  const int N = sol.intervals();
  std::vector<char> bad(N, 0);
  std::vector<Vec> f(N + 1);
  std::vector<char> node_ok(N + 1, 1);
  Vec g;
  for (int i = 0; i <= N; ++i) {
    const Vec y = sol.y.row(i).transpose(), z = sol.z.row(i).transpose();
    node_ok[i] = sys.rhs(sol.mesh.nodes(i), y, z, sol.params, sys.eps, f[i]) &&
                 all_finite(f[i]) && sys.alg(sol.mesh.nodes(i), y, z, sol.params, sys.eps, g) &&
                 all_finite(g);
  }
  Vec fm;
  for (int i = 0; i < N; ++i) {
    if (!node_ok[i] || !node_ok[i + 1]) {
      bad[i] = 1;
      continue;
    }
    const double h = sol.mesh.nodes(i + 1) - sol.mesh.nodes(i);
    const double tm = sol.mesh.nodes(i) + 0.5 * h;
    const Vec ym = 0.5 * (sol.y.row(i) + sol.y.row(i + 1)).transpose() - (h / 8.0) * (f[i + 1] - f[i]);
    const Vec zm = sol.z_mid.row(i).transpose();
    bad[i] = !(sys.rhs(tm, ym, zm, sol.params, sys.eps, fm) && all_finite(fm) &&
               sys.alg(tm, ym, zm, sol.params, sys.eps, g) && all_finite(g));
  }
  return bad;
}

// Refines by the interval residuals, leaving whole any interval whose
// pieces would fall outside the domain of the system.
DaeSolution refine_inside(const DaeSystem& sys, const DaeSolution& current,
                          const SolverOptions& opt, bool converged) {
  DaeSolution next = refine_impl(current, current.interval_residuals, opt.mesh_tol,
                                 opt.max_mesh_points, converged, converged);
  std::vector<char> bad = infeasible_intervals(sys, next);
  if (std::find(bad.begin(), bad.end(), 1) == bad.end()) return next;
  Vec masked = current.interval_residuals;
  do {
    for (int j = 0; j < next.intervals(); ++j) {
      if (!bad[j]) continue;
      const double tm = 0.5 * (next.mesh.nodes(j) + next.mesh.nodes(j + 1));
      masked(locate(current.mesh.nodes, tm)) = 0.0;
    }
    next = refine_impl(current, masked, opt.mesh_tol, opt.max_mesh_points, false, false);
    bad = infeasible_intervals(sys, next);
  } while (std::find(bad.begin(), bad.end(), 1) != bad.end());
  if (next.intervals() == current.intervals()) {
    throw NoConvergence("mesh cannot be refined inside the domain of the system", current);
  }
  return next;
}

}  // namespace

// ---------------------------------------------------------------------------

Mesh Mesh::uniform(double horizon, int intervals) {
  Mesh m;
  m.nodes = Vec::LinSpaced(intervals + 1, 0.0, horizon);
  m.nodes(intervals) = horizon;
  m.check();
  return m;
}

void Mesh::check() const {
  if (nodes.size() < 3) throw InvalidArgument("mesh needs at least two intervals");
  if (nodes(0) != 0.0) throw InvalidArgument("mesh must start at 0");
  const double horizon = nodes(nodes.size() - 1);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("mesh horizon must be positive and finite");
  }
  for (Eigen::Index i = 0; i + 1 < nodes.size(); ++i) {
    if (!(nodes(i + 1) - nodes(i) > 1e-12 * horizon)) {
      throw InvalidArgument("mesh must be strictly increasing with intervals above 1e-12*horizon");
    }
  }
}

DaeSolution make_guess(const Mesh& mesh, const Mat& y, const Mat& z, const Vec& params) {
  mesh.check();
  const Eigen::Index n1 = mesh.nodes.size();
  if (y.rows() != n1 || z.rows() != n1) {
    throw DimensionError("make_guess: node arrays must have one row per mesh node");
  }
  DaeSolution sol;
  sol.mesh = mesh;
  sol.y = y;
  sol.z = z;
  sol.z_mid = 0.5 * (z.topRows(n1 - 1) + z.bottomRows(n1 - 1));
  sol.params = params;
  return sol;
}

bool compute_slopes(const DaeSystem& system, DaeSolution& sol) {
  const int N = sol.intervals();
  sol.yp.resize(N + 1, system.n_y);
  Vec f;
  bool ok = true;
  for (int i = 0; i <= N; ++i) {
    if (system.rhs(sol.mesh.nodes(i), sol.y.row(i).transpose(), sol.z.row(i).transpose(),
                   sol.params, system.eps, f) &&
        all_finite(f)) {
      sol.yp.row(i) = f.transpose();
    } else {
      sol.yp.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
      ok = false;
    }
  }
  return ok;
}

Vec estimate_residual(const DaeSystem& system, const DaeSolution& solution) {
  DaeSolution local;
  const DaeSolution* sol = &solution;
  if (solution.yp.rows() != solution.y.rows()) {
    local = solution;
    compute_slopes(system, local);
    sol = &local;
  }
  const int N = sol->intervals();
  const double offset = 0.5 / std::sqrt(3.0);
  Vec res(N);
  Vec f, g;
  for (int i = 0; i < N; ++i) {
    const double t0 = sol->mesh.nodes(i);
    const double h = sol->mesh.nodes(i + 1) - t0;
    double worst = 0.0;
    for (double s : {0.5 - offset, 0.5 + offset}) {
      const Vec y = hermite_y(*sol, i, s);
      const Vec dy = hermite_dy(*sol, i, s);
      const Vec z = quadratic_z(*sol, i, s);
      if (!y.allFinite() || !system.rhs(t0 + s * h, y, z, sol->params, system.eps, f) ||
          !all_finite(f)) {
        worst = kInf;
        break;
      }
      const double scale = 1.0 + f.lpNorm<Eigen::Infinity>();
      worst = std::max(worst, (dy - f).lpNorm<Eigen::Infinity>() / scale);
      // The algebraic rows are not collocated at the Gauss points either.
      if (system.n_z > 0) {
        if (!system.alg(t0 + s * h, y, z, sol->params, system.eps, g) || !all_finite(g)) {
          worst = kInf;
          break;
        }
        worst = std::max(worst, g.lpNorm<Eigen::Infinity>() / (1.0 + z.lpNorm<Eigen::Infinity>()));
      }
    }
    res(i) = h * worst;
  }
  return res;
}

DaeSolution refine_mesh(const DaeSolution& solution, const Vec& residuals, double mesh_tol,
                        int max_mesh_points) {
  if (residuals.size() != solution.intervals()) {
    throw DimensionError("refine_mesh: one residual per interval expected");
  }
  if (solution.yp.rows() != solution.y.rows()) {
    throw InvalidArgument("refine_mesh: solution slopes are not populated");
  }
  return refine_impl(solution, residuals, mesh_tol, max_mesh_points, true, true);
}

std::pair<Vec, Vec> interpolate(const DaeSolution& solution, double t) {
  const Vec& nodes = solution.mesh.nodes;
  if (!(t >= 0.0 && t <= nodes(nodes.size() - 1))) {
    throw RangeError("interpolate: time outside the mesh range");
  }
  const int k = locate(nodes, t);
  if (t == nodes(k)) return {solution.y.row(k).transpose(), solution.z.row(k).transpose()};
  if (t == nodes(k + 1)) {
    return {solution.y.row(k + 1).transpose(), solution.z.row(k + 1).transpose()};
  }
  if (solution.yp.rows() != solution.y.rows()) {
    throw InvalidArgument("interpolate: solution slopes are not populated");
  }
  const double s = (t - nodes(k)) / (nodes(k + 1) - nodes(k));
  return {hermite_y(solution, k, s), quadratic_z(solution, k, s)};
}

DaeSolution solve(const DaeSystem& system, const DaeSolution& guess, const SolverOptions& opt) {
  if (!(opt.newton_tol > 0.0 && opt.newton_tol < 1.0) || !(opt.mesh_tol > 0.0) ||
      opt.max_newton < 1 || opt.max_mesh_points < 3 || !(opt.min_damping > 0.0)) {
    throw InvalidArgument("SolverOptions out of range");
  }
  check_shape(system, guess);

  DaeSolution current = guess;
  current.converged = false;

  // Row scaling of the collocation equations, fixed for the whole solve.
  if (!compute_slopes(system, current)) {
    throw InfeasibleStart("system cannot be evaluated on the initial guess");
  }
  const Vec weights = collocation_weights(current);

  constexpr int kMaxFailedPasses = 6;
  int failed_passes = 0;
  int total_iters = 0;
  for (int pass = 1; pass <= opt.max_mesh_passes; ++pass) {
    Collocation col(system, current.mesh, weights);
    NewtonOutcome outcome;
    try {
      outcome = newton(col, col.pack(current), opt);
    } catch (const InfeasibleStart&) {
      if (pass == 1) throw;
      throw NoConvergence("refined guess left the domain of the system", current);
    }
    total_iters += outcome.iters;
    col.unpack(outcome.x, current);
    current.newton_iters = total_iters;
    current.mesh_passes = pass;
    current.newton_history = outcome.history;
    const bool slopes_ok = compute_slopes(system, current);
    if (!outcome.converged) {
      // An unconverged iterate on a coarse mesh is refined where its
      // defect is large and used as the next guess, a bounded number of times.
      if (!slopes_ok || ++failed_passes > kMaxFailedPasses) {
        current.interval_residuals.resize(0);
        throw NoConvergence(outcome.failure, current);
      }
      if (opt.verbose) {
        std::clog << "mesh pass " << pass << ": " << current.mesh.nodes.size()
                  << " nodes, newton failed (" << outcome.failure << "), refining\n";
      }
      current.interval_residuals = estimate_residual(system, current);
      DaeSolution next = refine_inside(system, current, opt, false);
      next.newton_iters = total_iters;
      current = std::move(next);
      continue;
    }
    current.interval_residuals = estimate_residual(system, current);
    const double worst = current.interval_residuals.maxCoeff();
    if (opt.verbose) {
      std::clog << "mesh pass " << pass << ": " << current.mesh.nodes.size()
                << " nodes, newton " << outcome.iters << ", max residual " << worst << "\n";
    }
    if (worst <= opt.mesh_tol) {
      current.converged = true;
      return current;
    }
    DaeSolution next = refine_inside(system, current, opt, true);
    next.newton_iters = total_iters;
    current = std::move(next);
  }
  throw MeshLimit("mesh refinement did not settle within " + std::to_string(opt.max_mesh_passes) +
                      " passes",
                  current);
}

Vec collocation_weights(const DaeSolution& solution) {
  return (1.0 + solution.yp.cwiseAbs().colwise().maxCoeff().array())
      .inverse()
      .matrix()
      .transpose();
}

Vec pack_unknowns(const DaeSystem& system, const DaeSolution& solution) {
  check_shape(system, solution);
  return Collocation(system, solution.mesh, Vec::Ones(system.n_y)).pack(solution);
}

bool collocation_residual(const DaeSystem& system, const Mesh& mesh, const Vec& weights,
                          const Vec& unknowns, Vec& residual) {
  return Collocation(system, mesh, weights).residual(unknowns, residual);
}

bool collocation_jacobian(const DaeSystem& system, const Mesh& mesh, const Vec& weights,
                          const Vec& unknowns, Mat& dense) {
  const Collocation col(system, mesh, weights);
  AbdMatrix J(col.layout());
  if (!col.jacobian(unknowns, J)) return false;
  dense = J.to_dense();
  return true;
}

DaeSolution predict(const DaeSystem& system, const DaeSolution& solution, double eps_next) {
  check_shape(system, solution);
  const double eps = system.eps;
  const Collocation col(system, solution.mesh, Vec::Ones(system.n_y));
  const Vec x = col.pack(solution);
  // The residual is affine in eps for barrier terms and smooth for FB rows,
  // so a central difference is accurate to O(delta^2).
  const double delta = 1e-3 * eps;
  DaeSystem up = system, down = system;
  up.eps = eps + delta;
  down.eps = eps - delta;
  Vec r_up, r_down;
  if (!Collocation(up, solution.mesh, Vec::Ones(system.n_y)).residual(x, r_up) ||
      !Collocation(down, solution.mesh, Vec::Ones(system.n_y)).residual(x, r_down)) {
    return solution;
  }
  AbdMatrix J(col.layout());
  if (!col.jacobian(x, J)) return solution;
  Vec tangent;
  try {
    tangent = AbdFactorization(J).solve(-(r_up - r_down) / (2.0 * delta));
  } catch (const SingularMatrix&) {
    return solution;
  }
  if (!tangent.allFinite()) return solution;
  DaeSystem next_sys = system;
  next_sys.eps = eps_next;
  const Collocation next_col(next_sys, solution.mesh, Vec::Ones(system.n_y));
  Vec r;
  double step = eps_next - eps;
  for (int i = 0; i < 6; ++i, step *= 0.5) {
    const Vec xt = x + step * tangent;
    if (!next_col.residual(xt, r)) continue;
    DaeSolution out = solution;
    next_col.unpack(xt, out);
    if (!compute_slopes(next_sys, out)) continue;
    out.converged = false;
    return out;
  }
  return solution;
}

}  // namespace ipoc
