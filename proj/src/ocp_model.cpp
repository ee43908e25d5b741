#include "ipoc/ocp_model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ipoc/errors.hpp"

namespace ipoc {

void OcpDims::check() const {
  if (n < 1 || m < 1 || n_h < 1 || n_g < 0 || n_c < 0) {
    throw DimensionError("OcpDims: need n, m, n_h >= 1 and n_g, n_c >= 0");
  }
}

double OcpSpec::eval_phi(const Vec& x) const { return phi ? phi(x) : 0.0; }

Vec OcpSpec::eval_phi_x(const Vec& x) const {
  return phi_x ? phi_x(x) : Vec::Zero(x.size());
}

Vec OcpSpec::eval_g(const Vec& x) const { return dims.n_g > 0 ? g(x) : Vec(0); }

Mat OcpSpec::eval_g_x(const Vec& x) const {
  return dims.n_g > 0 ? g_x(x) : Mat(0, x.size());
}

Vec OcpSpec::eval_c(const Vec& x, const Vec& u) const {
  return dims.n_c > 0 ? c(x, u) : Vec(0);
}

Mat OcpSpec::eval_c_x(const Vec& x, const Vec& u) const {
  return dims.n_c > 0 ? c_x(x, u) : Mat(0, x.size());
}

Mat OcpSpec::eval_c_u(const Vec& x, const Vec& u) const {
  return dims.n_c > 0 ? c_u(x, u) : Mat(0, u.size());
}

namespace {

void expect_shape(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                  Eigen::Index want_rows, Eigen::Index want_cols) {
  if (rows != want_rows || cols != want_cols) {
    throw DimensionError("callback '" + name + "' returned " + std::to_string(rows) +
                         "x" + std::to_string(cols) + ", expected " +
                         std::to_string(want_rows) + "x" + std::to_string(want_cols));
  }
}

// Central differences of a vector-valued map around `at`.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& at, Eigen::Index rows) {
  Mat jac(rows, at.size());
  Vec probe = at;
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    const double step = 1e-6 * (1.0 + std::abs(at(j)));
    probe(j) = at(j) + step;
    const Vec plus = fn(probe);
    probe(j) = at(j) - step;
    const Vec minus = fn(probe);
    probe(j) = at(j);
    jac.col(j) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

double deviation(const Mat& analytic, const Mat& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double scale = std::max(1.0, std::abs(numeric(i, j)));
      worst = std::max(worst, std::abs(analytic(i, j) - numeric(i, j)) / scale);
    }
  }
  return worst;
}

}  // namespace

ValidationReport validate(const OcpSpec& spec, const Vec& x, const Vec& u) {
  const OcpDims& d = spec.dims;
  d.check();
  if (!spec.free_horizon && !(spec.horizon > 0.0)) {
    throw InvalidArgument("OcpSpec: horizon must be positive");
  }
  expect_shape("probe x", x.size(), 1, d.n, 1);
  expect_shape("probe u", u.size(), 1, d.m, 1);
  if (!spec.f || !spec.f_x || !spec.f_u || !spec.ell || !spec.ell_x || !spec.ell_u ||
      !spec.h || !spec.h_x0 || !spec.h_xT) {
    throw InvalidArgument("OcpSpec: dynamics, running cost and boundary callbacks are mandatory");
  }
  if ((d.n_g > 0 && (!spec.g || !spec.g_x)) ||
      (d.n_c > 0 && (!spec.c || !spec.c_x || !spec.c_u)) ||
      (static_cast<bool>(spec.phi) != static_cast<bool>(spec.phi_x))) {
    throw InvalidArgument("OcpSpec: missing constraint or terminal-cost callback");
  }

  const Vec fv = spec.f(x, u);
  expect_shape("f", fv.size(), 1, d.n, 1);
  const Mat fx = spec.f_x(x, u);
  expect_shape("f_x", fx.rows(), fx.cols(), d.n, d.n);
  const Mat fu = spec.f_u(x, u);
  expect_shape("f_u", fu.rows(), fu.cols(), d.n, d.m);
  const Vec lx = spec.ell_x(x, u);
  expect_shape("ell_x", lx.size(), 1, d.n, 1);
  const Vec lu = spec.ell_u(x, u);
  expect_shape("ell_u", lu.size(), 1, d.m, 1);
  const Vec px = spec.eval_phi_x(x);
  expect_shape("phi_x", px.size(), 1, d.n, 1);
  const Vec gv = spec.eval_g(x);
  expect_shape("g", gv.size(), 1, d.n_g, 1);
  const Mat gx = spec.eval_g_x(x);
  expect_shape("g_x", gx.rows(), gx.cols(), d.n_g, d.n);
  const Vec cv = spec.eval_c(x, u);
  expect_shape("c", cv.size(), 1, d.n_c, 1);
  const Mat cx = spec.eval_c_x(x, u);
  expect_shape("c_x", cx.rows(), cx.cols(), d.n_c, d.n);
  const Mat cu = spec.eval_c_u(x, u);
  expect_shape("c_u", cu.rows(), cu.cols(), d.n_c, d.m);
  const Vec hv = spec.h(x, x);
  expect_shape("h", hv.size(), 1, d.n_h, 1);
  const Mat h0 = spec.h_x0(x, x);
  expect_shape("h_x0", h0.rows(), h0.cols(), d.n_h, d.n);
  const Mat hT = spec.h_xT(x, x);
  expect_shape("h_xT", hT.rows(), hT.cols(), d.n_h, d.n);

  auto scalar = [](double v) { return Vec::Constant(1, v); };

  ValidationReport report;
  auto record = [&report](const std::string& name, const Mat& analytic, const Mat& numeric) {
    report.checks.push_back({name, deviation(analytic, numeric)});
  };

  record("f_x", fx, fd_jacobian([&](const Vec& xx) { return spec.f(xx, u); }, x, d.n));
  record("f_u", fu, fd_jacobian([&](const Vec& uu) { return spec.f(x, uu); }, u, d.n));
  record("ell_x", lx.transpose(),
         fd_jacobian([&](const Vec& xx) { return scalar(spec.ell(xx, u)); }, x, 1));
  record("ell_u", lu.transpose(),
         fd_jacobian([&](const Vec& uu) { return scalar(spec.ell(x, uu)); }, u, 1));
  if (spec.phi) {
    record("phi_x", px.transpose(),
           fd_jacobian([&](const Vec& xx) { return scalar(spec.phi(xx)); }, x, 1));
  }
  if (d.n_g > 0) {
    record("g_x", gx, fd_jacobian([&](const Vec& xx) { return spec.g(xx); }, x, d.n_g));
  }
  if (d.n_c > 0) {
    record("c_x", cx, fd_jacobian([&](const Vec& xx) { return spec.c(xx, u); }, x, d.n_c));
    record("c_u", cu, fd_jacobian([&](const Vec& uu) { return spec.c(x, uu); }, u, d.n_c));
  }
  record("h_x0", h0, fd_jacobian([&](const Vec& x0) { return spec.h(x0, x); }, x, d.n_h));
  record("h_xT", hT, fd_jacobian([&](const Vec& xT) { return spec.h(x, xT); }, x, d.n_h));

  const GradientCheck* worst = nullptr;
  for (const auto& check : report.checks) {
    if (!worst || check.max_deviation > worst->max_deviation) worst = &check;
  }
  report.max_deviation = worst ? worst->max_deviation : 0.0;
  if (worst && !(worst->max_deviation <= kGradientCheckTolerance)) {
    throw GradientCheckError(worst->callback, worst->max_deviation);
  }
  return report;
}

OcpSpec to_fixed_time(const OcpSpec& spec) {
  if (!spec.free_horizon) return spec;
  spec.dims.check();

  auto base = std::make_shared<const OcpSpec>(spec);
  const int n = spec.dims.n;

  OcpSpec out;
  out.name = spec.name;
  out.dims = spec.dims;
  out.dims.n = n + 1;
  out.horizon = 1.0;
  out.free_horizon = false;

  // Split an augmented state into (x, T).
  auto head = [n](const Vec& xa) -> Vec { return xa.head(n); };

  out.f = [base, head, n](const Vec& xa, const Vec& u) {
    Vec out(n + 1);
    out.head(n) = xa(n) * base->f(head(xa), u);
    out(n) = 0.0;
    return out;
  };
  out.f_x = [base, head, n](const Vec& xa, const Vec& u) {
    const Vec x = head(xa);
    Mat jac = Mat::Zero(n + 1, n + 1);
    jac.topLeftCorner(n, n) = xa(n) * base->f_x(x, u);
    jac.block(0, n, n, 1) = base->f(x, u);
    return jac;
  };
  out.f_u = [base, head, n](const Vec& xa, const Vec& u) {
    Mat jac = Mat::Zero(n + 1, u.size());
    jac.topRows(n) = xa(n) * base->f_u(head(xa), u);
    return jac;
  };

  out.ell = [base, head, n](const Vec& xa, const Vec& u) {
    return xa(n) * base->ell(head(xa), u);
  };
  out.ell_x = [base, head, n](const Vec& xa, const Vec& u) {
    const Vec x = head(xa);
    Vec grad(n + 1);
    grad.head(n) = xa(n) * base->ell_x(x, u);
    grad(n) = base->ell(x, u);
    return grad;
  };
  out.ell_u = [base, head, n](const Vec& xa, const Vec& u) {
    return Vec(xa(n) * base->ell_u(head(xa), u));
  };

  if (spec.phi) {
    out.phi = [base, head](const Vec& xa) { return base->phi(head(xa)); };
    out.phi_x = [base, head, n](const Vec& xa) {
      Vec grad = Vec::Zero(n + 1);
      grad.head(n) = base->phi_x(head(xa));
      return grad;
    };
  }

  auto pad_cols = [n](const Mat& jac) {
    Mat out = Mat::Zero(jac.rows(), n + 1);
    out.leftCols(n) = jac;
    return out;
  };

  if (spec.dims.n_g > 0) {
    out.g = [base, head](const Vec& xa) { return base->g(head(xa)); };
    out.g_x = [base, head, pad_cols](const Vec& xa) { return pad_cols(base->g_x(head(xa))); };
  }
  if (spec.dims.n_c > 0) {
    out.c = [base, head](const Vec& xa, const Vec& u) { return base->c(head(xa), u); };
    out.c_x = [base, head, pad_cols](const Vec& xa, const Vec& u) {
      return pad_cols(base->c_x(head(xa), u));
    };
    out.c_u = [base, head](const Vec& xa, const Vec& u) { return base->c_u(head(xa), u); };
  }

  out.h = [base, head](const Vec& x0, const Vec& xT) { return base->h(head(x0), head(xT)); };
  out.h_x0 = [base, head, pad_cols](const Vec& x0, const Vec& xT) {
    return pad_cols(base->h_x0(head(x0), head(xT)));
  };
  out.h_xT = [base, head, pad_cols](const Vec& x0, const Vec& xT) {
    return pad_cols(base->h_xT(head(x0), head(xT)));
  };
  return out;
}

}  // namespace ipoc
