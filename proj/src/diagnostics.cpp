#include "ipoc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace ipoc {

double trapezoid(const Vec& time, const Vec& values) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k + 1 < time.size(); ++k) {
    sum += 0.5 * (time(k + 1) - time(k)) * (values(k) + values(k + 1));
  }
  return sum;
}

bool InteriorityMargins::strictly_interior() const {
  return (g.size() == 0 || g.maxCoeff() < 0.0) && (c.size() == 0 || c.maxCoeff() < 0.0);
}

InteriorityMargins interiority_check(const OcpSpec& spec, const DaeSolution& sol) {
  const int n = spec.dims.n, m = spec.dims.m;
  InteriorityMargins out;
  out.g = Vec::Constant(spec.dims.n_g, -std::numeric_limits<double>::infinity());
  out.c = Vec::Constant(spec.dims.n_c, -std::numeric_limits<double>::infinity());
  for (Eigen::Index k = 0; k < sol.y.rows(); ++k) {
    const Vec x = sol.y.row(k).head(n).transpose();
    const Vec u = sol.z.row(k).head(m).transpose();
    if (spec.dims.n_g > 0) out.g = out.g.cwiseMax(spec.eval_g(x));
    if (spec.dims.n_c > 0) out.c = out.c.cwiseMax(spec.eval_c(x, u));
  }
  return out;
}

Mat state_measure(const Vec& time, const Mat& lambda_g) {
  const Eigen::Index nodes = time.size();
  Mat mu = Mat::Zero(nodes, lambda_g.cols());
  for (Eigen::Index k = nodes - 2; k >= 0; --k) {
    const double h = time(k + 1) - time(k);
    mu.row(k) = mu.row(k + 1) - 0.5 * h * (lambda_g.row(k) + lambda_g.row(k + 1));
  }
  return mu;
}

double cost_integral(const OcpSpec& spec, const DaeSolution& sol) {
  const int n = spec.dims.n, m = spec.dims.m;
  const Eigen::Index nodes = sol.y.rows();
  const Vec& t = sol.mesh.nodes;
  Vec running(nodes);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    running(k) = spec.ell(sol.y.row(k).head(n).transpose(), sol.z.row(k).head(m).transpose());
  }
  const double terminal = spec.eval_phi(sol.y.row(nodes - 1).head(n).transpose());
  if (sol.yp.rows() != nodes) return terminal + trapezoid(t, running);
  // Simpson on each interval, with the cubic state and the collocated
  // midpoint control.
  double sum = 0.0;
  for (Eigen::Index k = 0; k + 1 < nodes; ++k) {
    const double h = t(k + 1) - t(k);
    const Vec ym = interpolate(sol, t(k) + 0.5 * h).first;
    const double mid = spec.ell(ym.head(n), sol.z_mid.row(k).head(m).transpose());
    sum += h / 6.0 * (running(k) + 4.0 * mid + running(k + 1));
  }
  return terminal + sum;
}

KktReport kkt_report(const OcpSpec& spec, const DaeSolution& sol, const Multipliers& mult,
                     double eps) {
  const int n = spec.dims.n, m = spec.dims.m, ng = spec.dims.n_g, nc = spec.dims.n_c;
  const Vec& t = sol.mesh.nodes;
  const Eigen::Index nodes = t.size();
  KktReport r;
  r.eps = eps;
  r.horizon = sol.mesh.horizon();

  // Pointwise quantities at nodes.
  Mat pdot_target(nodes, n);
  Mat gv(nodes, ng), cv(nodes, nc);
  for (Eigen::Index k = 0; k < nodes; ++k) {
    const Vec x = sol.y.row(k).head(n).transpose();
    const Vec p = sol.y.row(k).tail(n).transpose();
    const Vec u = sol.z.row(k).head(m).transpose();
    const Vec lg = mult.g.row(k).transpose(), lc = mult.c.row(k).transpose();
    Vec hx = spec.ell_x(x, u) + spec.f_x(x, u).transpose() * p;
    Vec hu = spec.ell_u(x, u) + spec.f_u(x, u).transpose() * p;
    if (ng > 0) {
      hx += spec.g_x(x).transpose() * lg;
      gv.row(k) = spec.g(x).transpose();
    }
    if (nc > 0) {
      hx += spec.c_x(x, u).transpose() * lc;
      hu += spec.c_u(x, u).transpose() * lc;
      cv.row(k) = spec.c(x, u).transpose();
    }
    pdot_target.row(k) = -hx.transpose();
    r.stationarity_res = std::max(r.stationarity_res, hu.lpNorm<Eigen::Infinity>());
  }

  // Integrated adjoint defect per interval: p(t_{k+1}) - p(t_k) against the
  // trapezoidal integral of -H_x. Not divided by h: near an active state
  // constraint lambda_g approaches a measure and only its integral is stable.
  for (Eigen::Index k = 0; k + 1 < nodes; ++k) {
    const double h = t(k + 1) - t(k);
    const Vec dp = (sol.y.row(k + 1).tail(n) - sol.y.row(k).tail(n)).transpose();
    const Vec quad = 0.5 * h * (pdot_target.row(k) + pdot_target.row(k + 1)).transpose();
    r.adjoint_res = std::max(r.adjoint_res, (dp - quad).lpNorm<Eigen::Infinity>());
  }

  {
    const Vec x0 = sol.y.row(0).head(n).transpose(), xT = sol.y.row(nodes - 1).head(n).transpose();
    const Vec p0 = sol.y.row(0).tail(n).transpose(), pT = sol.y.row(nodes - 1).tail(n).transpose();
    Vec res(spec.dims.n_h + 2 * n);
    res << spec.h(x0, xT), p0 + spec.h_x0(x0, xT).transpose() * sol.params,
        pT - spec.eval_phi_x(xT) - spec.h_xT(x0, xT).transpose() * sol.params;
    r.bc_res = res.lpNorm<Eigen::Infinity>();
  }

  const double eps_t = eps * r.horizon;
  r.comp_state.resize(ng);
  r.multiplier_l1_g.resize(ng);
  for (int i = 0; i < ng; ++i) {
    r.comp_state(i) = trapezoid(t, gv.col(i).cwiseProduct(mult.g.col(i)));
    r.multiplier_l1_g(i) = trapezoid(t, mult.g.col(i).cwiseAbs());
    r.comp_state_max = std::max(r.comp_state_max, std::abs(r.comp_state(i)));
    r.comp_state_shifted = std::max(r.comp_state_shifted, std::abs(r.comp_state(i) + eps_t));
  }
  r.comp_mixed.resize(nc);
  r.multiplier_l1_c.resize(nc);
  for (int i = 0; i < nc; ++i) {
    r.comp_mixed(i) = trapezoid(t, cv.col(i).cwiseProduct(mult.c.col(i)));
    r.multiplier_l1_c(i) = trapezoid(t, mult.c.col(i).cwiseAbs());
    r.comp_mixed_max = std::max(r.comp_mixed_max, std::abs(r.comp_mixed(i)));
    r.comp_mixed_shifted = std::max(r.comp_mixed_shifted, std::abs(r.comp_mixed(i) + eps_t));
  }

  double most_negative = 0.0;
  if (mult.g.size() > 0) most_negative = std::min(most_negative, mult.g.minCoeff());
  if (mult.c.size() > 0) most_negative = std::min(most_negative, mult.c.minCoeff());
  r.nonneg_viol = -most_negative;

  r.margins = interiority_check(spec, sol);
  r.cost = cost_integral(spec, sol);
  return r;
}

}  // namespace ipoc
