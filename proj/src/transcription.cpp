#include "ipoc/transcription.hpp"

#include <cmath>
#include <memory>

#include "ipoc/barrier.hpp"
#include "ipoc/errors.hpp"

namespace ipoc {

namespace {

using SpecPtr = std::shared_ptr<const OcpSpec>;

// Gradient with respect to (x, u) of ell + p.f + wg.g + wc.c.
Vec lagrangian_gradient(const OcpSpec& s, const Vec& x, const Vec& u, const Vec& p,
                        const Vec& wg, const Vec& wc) {
  const int n = s.dims.n, m = s.dims.m;
  Vec grad(n + m);
  grad.head(n) = s.ell_x(x, u) + s.f_x(x, u).transpose() * p;
  grad.tail(m) = s.ell_u(x, u) + s.f_u(x, u).transpose() * p;
  if (s.dims.n_g > 0) grad.head(n) += s.g_x(x).transpose() * wg;
  if (s.dims.n_c > 0) {
    grad.head(n) += s.c_x(x, u).transpose() * wc;
    grad.tail(m) += s.c_u(x, u).transpose() * wc;
  }
  return grad;
}

// Derivative of lagrangian_gradient with respect to (x, u) at frozen (p, wg,
// wc), by central differences of the first-derivative callbacks. The last
// result is cached per thread: F and G Jacobians are requested back to back
// at the same point.
Mat lagrangian_hessian(const OcpSpec& s, const Vec& x, const Vec& u, const Vec& p, const Vec& wg,
                       const Vec& wc) {
  struct Cache {
    const OcpSpec* spec = nullptr;
    Vec x, u, p, wg, wc;
    Mat hess;
  };
  thread_local Cache cache;
  auto same = [](const Vec& a, const Vec& b) { return a.size() == b.size() && a == b; };
  if (cache.spec == &s && same(cache.x, x) && same(cache.u, u) && same(cache.p, p) &&
      same(cache.wg, wg) && same(cache.wc, wc)) {
    return cache.hess;
  }

  const int n = s.dims.n, m = s.dims.m;
  const double rel = std::cbrt(std::numeric_limits<double>::epsilon());
  Mat hess(n + m, n + m);
  Vec xx = x, uu = u;
  for (int j = 0; j < n + m; ++j) {
    double& v = j < n ? xx(j) : uu(j - n);
    const double orig = v;
    const double step = rel * (1.0 + std::abs(orig));
    v = orig + step;
    const Vec plus = lagrangian_gradient(s, xx, uu, p, wg, wc);
    v = orig - step;
    const Vec minus = lagrangian_gradient(s, xx, uu, p, wg, wc);
    v = orig;
    hess.col(j) = (plus - minus) / (2.0 * step);
  }
  cache = Cache{&s, x, u, p, wg, wc, hess};
  return hess;
}

// Barrier weights eps * psi'(v) = -eps / v; false if some v_i >= 0.
bool barrier_weights(const Vec& values, double eps, Vec& weights, Vec& curvature) {
  weights.resize(values.size());
  curvature.resize(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    if (!(v < 0.0)) return false;
    weights(i) = eps * psi_prime(v);
    curvature(i) = eps / (v * v);
  }
  return true;
}

void boundary_rows(const OcpSpec& s, const Vec& ya, const Vec& yb, const Vec& lambda, Vec& out) {
  const int n = s.dims.n, nh = s.dims.n_h;
  const Vec x0 = ya.head(n), xT = yb.head(n);
  out.resize(nh + 2 * n);
  out.head(nh) = s.h(x0, xT);
  out.segment(nh, n) = ya.tail(n) + s.h_x0(x0, xT).transpose() * lambda;
  out.tail(n) = yb.tail(n) - s.eval_phi_x(xT) - s.h_xT(x0, xT).transpose() * lambda;
}

DaeSystem common_shell(const OcpSpec& spec) {
  spec.dims.check();
  if (spec.free_horizon) {
    throw InvalidArgument("transcription needs a fixed-horizon spec; apply to_fixed_time first");
  }
  DaeSystem sys;
  sys.name = spec.name;
  sys.n_y = 2 * spec.dims.n;
  sys.n_p = spec.dims.n_h;
  sys.horizon = spec.horizon;
  auto s = std::make_shared<const OcpSpec>(spec);
  sys.bc = [s](const Vec& ya, const Vec& yb, const Vec& lambda, Vec& out) {
    boundary_rows(*s, ya, yb, lambda, out);
  };
  return sys;
}

}  // namespace

const char* method_name(Method method) {
  return method == Method::Primal ? "primal" : "primal-dual";
}

DaeSystem primal_system(const OcpSpec& spec) {
  DaeSystem sys = common_shell(spec);
  sys.n_z = spec.dims.m;
  auto s = std::make_shared<const OcpSpec>(spec);
  const int n = spec.dims.n, m = spec.dims.m;

  sys.rhs = [s, n](double, const Vec& y, const Vec& z, const Vec&, double eps, Vec& out) {
    const Vec x = y.head(n), p = y.tail(n);
    Vec wg, wc, kg, kc;
    if (!barrier_weights(s->eval_g(x), eps, wg, kg)) return false;
    if (!barrier_weights(s->eval_c(x, z), eps, wc, kc)) return false;
    out.resize(2 * n);
    out.head(n) = s->f(x, z);
    out.tail(n) = -lagrangian_gradient(*s, x, z, p, wg, wc).head(n);
    return true;
  };
  sys.alg = [s, n, m](double, const Vec& y, const Vec& z, const Vec&, double eps, Vec& out) {
    const Vec x = y.head(n), p = y.tail(n);
    Vec wg, wc, kg, kc;
    if (!barrier_weights(s->eval_g(x), eps, wg, kg)) return false;
    if (!barrier_weights(s->eval_c(x, z), eps, wc, kc)) return false;
    out = lagrangian_gradient(*s, x, z, p, wg, wc).tail(m);
    return true;
  };
  sys.rhs_jac = [s, n, m](double, const Vec& y, const Vec& z, const Vec& params, double eps,
                          Mat& dy, Mat& dz, Mat& dp) {
    const Vec x = y.head(n), p = y.tail(n);
    Vec wg, wc, kg, kc;
    if (!barrier_weights(s->eval_g(x), eps, wg, kg)) return false;
    if (!barrier_weights(s->eval_c(x, z), eps, wc, kc)) return false;
    const Mat hess = lagrangian_hessian(*s, x, z, p, wg, wc);
    const Mat fx = s->f_x(x, z);
    const Mat gx = s->eval_g_x(x), cx = s->eval_c_x(x, z), cu = s->eval_c_u(x, z);
    dy.setZero(2 * n, 2 * n);
    dz.setZero(2 * n, m);
    dp.setZero(2 * n, params.size());
    dy.topLeftCorner(n, n) = fx;
    dy.bottomLeftCorner(n, n) = -(hess.topLeftCorner(n, n) + gx.transpose() * kg.asDiagonal() * gx +
                                  cx.transpose() * kc.asDiagonal() * cx);
    dy.bottomRightCorner(n, n) = -fx.transpose();
    dz.topRows(n) = s->f_u(x, z);
    dz.bottomRows(n) = -(hess.topRightCorner(n, m) + cx.transpose() * kc.asDiagonal() * cu);
    return true;
  };
  sys.alg_jac = [s, n, m](double, const Vec& y, const Vec& z, const Vec& params, double eps,
                          Mat& dy, Mat& dz, Mat& dp) {
    const Vec x = y.head(n), p = y.tail(n);
    Vec wg, wc, kg, kc;
    if (!barrier_weights(s->eval_g(x), eps, wg, kg)) return false;
    if (!barrier_weights(s->eval_c(x, z), eps, wc, kc)) return false;
    const Mat hess = lagrangian_hessian(*s, x, z, p, wg, wc);
    const Mat cx = s->eval_c_x(x, z), cu = s->eval_c_u(x, z);
    dy.setZero(m, 2 * n);
    dp.setZero(m, params.size());
    dy.leftCols(n) = hess.bottomLeftCorner(m, n) + cu.transpose() * kc.asDiagonal() * cx;
    dy.rightCols(n) = s->f_u(x, z).transpose();
    dz = hess.bottomRightCorner(m, m) + cu.transpose() * kc.asDiagonal() * cu;
    return true;
  };
  return sys;
}

DaeSystem primal_dual_system(const OcpSpec& spec) {
  DaeSystem sys = common_shell(spec);
  const int n = spec.dims.n, m = spec.dims.m, ng = spec.dims.n_g, nc = spec.dims.n_c;
  sys.n_z = m + ng + nc;
  auto s = std::make_shared<const OcpSpec>(spec);

  sys.rhs = [s, n, m, ng, nc](double, const Vec& y, const Vec& z, const Vec&, double,
                              Vec& out) {
    const Vec x = y.head(n), p = y.tail(n), u = z.head(m);
    out.resize(2 * n);
    out.head(n) = s->f(x, u);
    out.tail(n) = -lagrangian_gradient(*s, x, u, p, z.segment(m, ng), z.tail(nc)).head(n);
    return true;
  };
  sys.alg = [s, n, m, ng, nc](double, const Vec& y, const Vec& z, const Vec&, double eps,
                              Vec& out) {
    const Vec x = y.head(n), p = y.tail(n), u = z.head(m);
    const Vec lg = z.segment(m, ng), lc = z.tail(nc);
    out.resize(m + ng + nc);
    out.head(m) = lagrangian_gradient(*s, x, u, p, lg, lc).tail(m);
    const Vec gv = s->eval_g(x), cv = s->eval_c(x, u);
    for (int i = 0; i < ng; ++i) out(m + i) = fb_value(lg(i), gv(i), eps);
    for (int i = 0; i < nc; ++i) out(m + ng + i) = fb_value(lc(i), cv(i), eps);
    return true;
  };
  sys.rhs_jac = [s, n, m, ng, nc](double, const Vec& y, const Vec& z, const Vec& params, double,
                                  Mat& dy, Mat& dz, Mat& dp) {
    const Vec x = y.head(n), p = y.tail(n), u = z.head(m);
    const Vec lg = z.segment(m, ng), lc = z.tail(nc);
    const Mat hess = lagrangian_hessian(*s, x, u, p, lg, lc);
    const Mat fx = s->f_x(x, u);
    dy.setZero(2 * n, 2 * n);
    dz.setZero(2 * n, m + ng + nc);
    dp.setZero(2 * n, params.size());
    dy.topLeftCorner(n, n) = fx;
    dy.bottomLeftCorner(n, n) = -hess.topLeftCorner(n, n);
    dy.bottomRightCorner(n, n) = -fx.transpose();
    dz.topLeftCorner(n, m) = s->f_u(x, u);
    dz.bottomLeftCorner(n, m) = -hess.topRightCorner(n, m);
    dz.block(n, m, n, ng) = -s->eval_g_x(x).transpose();
    dz.block(n, m + ng, n, nc) = -s->eval_c_x(x, u).transpose();
    return true;
  };
  sys.alg_jac = [s, n, m, ng, nc](double, const Vec& y, const Vec& z, const Vec& params,
                                  double eps, Mat& dy, Mat& dz, Mat& dp) {
    const Vec x = y.head(n), p = y.tail(n), u = z.head(m);
    const Vec lg = z.segment(m, ng), lc = z.tail(nc);
    const Mat hess = lagrangian_hessian(*s, x, u, p, lg, lc);
    const Mat gx = s->eval_g_x(x), cx = s->eval_c_x(x, u), cu = s->eval_c_u(x, u);
    const Vec gv = s->eval_g(x), cv = s->eval_c(x, u);
    const int nz = m + ng + nc;
    dy.setZero(nz, 2 * n);
    dz.setZero(nz, nz);
    dp.setZero(nz, params.size());
    dy.topLeftCorner(m, n) = hess.bottomLeftCorner(m, n);
    dy.topRightCorner(m, n) = s->f_u(x, u).transpose();
    dz.topLeftCorner(m, m) = hess.bottomRightCorner(m, m);
    dz.block(0, m + ng, m, nc) = cu.transpose();
    try {
      for (int i = 0; i < ng; ++i) {
        const FbEval fb = fb_eval(lg(i), gv(i), eps);
        dy.block(m + i, 0, 1, n) = fb.dy * gx.row(i);
        dz(m + i, m + i) = fb.dx;
      }
      for (int i = 0; i < nc; ++i) {
        const FbEval fb = fb_eval(lc(i), cv(i), eps);
        const int row = m + ng + i;
        dy.block(row, 0, 1, n) = fb.dy * cx.row(i);
        dz.block(row, 0, 1, m) = fb.dy * cu.row(i);
        dz(row, row) = fb.dx;
      }
    } catch (const SingularityError&) {
      return false;
    }
    return true;
  };
  return sys;
}

DaeSystem make_system(const OcpSpec& spec, Method method) {
  return method == Method::Primal ? primal_system(spec) : primal_dual_system(spec);
}

Multipliers recover_multipliers(const OcpSpec& spec, const DaeSolution& primal, double eps) {
  const int n = spec.dims.n, m = spec.dims.m, ng = spec.dims.n_g, nc = spec.dims.n_c;
  const Eigen::Index nodes = primal.y.rows();
  Multipliers out;
  out.g.resize(nodes, ng);
  out.c.resize(nodes, nc);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    const Vec x = primal.y.row(k).head(n).transpose();
    const Vec u = primal.z.row(k).head(m).transpose();
    const Vec gv = spec.eval_g(x), cv = spec.eval_c(x, u);
    for (int i = 0; i < ng; ++i) {
      if (!(gv(i) < 0.0)) throw InteriorViolation("g" + std::to_string(i + 1), int(k), gv(i));
      out.g(k, i) = -eps / gv(i);
    }
    for (int i = 0; i < nc; ++i) {
      if (!(cv(i) < 0.0)) throw InteriorViolation("c" + std::to_string(i + 1), int(k), cv(i));
      out.c(k, i) = -eps / cv(i);
    }
  }
  return out;
}

Multipliers native_multipliers(const OcpSpec& spec, const DaeSolution& pd) {
  const int m = spec.dims.m, ng = spec.dims.n_g, nc = spec.dims.n_c;
  if (pd.z.cols() != m + ng + nc) {
    throw DimensionError("native_multipliers: not a primal-dual solution");
  }
  return Multipliers{pd.z.middleCols(m, ng), pd.z.rightCols(nc)};
}

OcpTrajectory split_solution(const OcpSpec& spec, const DaeSolution& sol,
                             const Multipliers& mult) {
  const int n = spec.dims.n, m = spec.dims.m;
  OcpTrajectory out;
  out.time = sol.mesh.nodes;
  out.x = sol.y.leftCols(n);
  out.p = sol.y.rightCols(n);
  out.u = sol.z.leftCols(m);
  out.lambda_g = mult.g;
  out.lambda_c = mult.c;
  out.lambda = sol.params;
  return out;
}

DaeSolution make_ocp_guess(const OcpSpec& spec, Method method, const OcpTrajectory& g) {
  const int n = spec.dims.n, m = spec.dims.m, ng = spec.dims.n_g, nc = spec.dims.n_c;
  const Eigen::Index nodes = g.time.size();
  if (g.x.rows() != nodes || g.x.cols() != n || g.p.rows() != nodes || g.p.cols() != n ||
      g.u.rows() != nodes || g.u.cols() != m) {
    throw DimensionError("make_ocp_guess: x, p, u must have one row per time point");
  }
  Mesh mesh{g.time};
  Mat y(nodes, 2 * n);
  y << g.x, g.p;
  Mat z;
  if (method == Method::Primal) {
    z = g.u;
  } else {
    z.setZero(nodes, m + ng + nc);
    z.leftCols(m) = g.u;
    if (g.lambda_g.rows() == nodes && g.lambda_g.cols() == ng) z.middleCols(m, ng) = g.lambda_g;
    if (g.lambda_c.rows() == nodes && g.lambda_c.cols() == nc) z.rightCols(nc) = g.lambda_c;
  }
  Vec params = g.lambda.size() == spec.dims.n_h ? g.lambda : Vec::Zero(spec.dims.n_h);
  return make_guess(mesh, y, z, params);
}

}  // namespace ipoc
