#include "ipoc/problems.hpp"

#include <cmath>
#include <numbers>

#include "ipoc/errors.hpp"

namespace ipoc {

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> values) {
  Vec out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out(i++) = v;
  return out;
}

Vec linspace(double a, double b, int points) { return Vec::LinSpaced(points, a, b); }

OcpTrajectory constant_guess(const Vec& time, const Vec& x, const Vec& p, const Vec& u, int n_g,
                             int n_c, int n_h) {
  const Eigen::Index nodes = time.size();
  OcpTrajectory g;
  g.time = time;
  g.x = x.transpose().replicate(nodes, 1);
  g.p = p.transpose().replicate(nodes, 1);
  g.u = u.transpose().replicate(nodes, 1);
  g.lambda_g = Mat::Zero(nodes, n_g);
  g.lambda_c = Mat::Zero(nodes, n_c);
  g.lambda = Vec::Zero(n_h);
  return g;
}

// Box constraints lo <= u_j <= hi written as (u_j - hi, lo - u_j) per control.
void box_controls(OcpSpec& s, std::vector<std::pair<double, double>> bounds) {
  const int m = static_cast<int>(bounds.size());
  s.c = [bounds, m](const Vec&, const Vec& u) {
    Vec out(2 * m);
    for (int j = 0; j < m; ++j) {
      out(2 * j) = u(j) - bounds[j].second;
      out(2 * j + 1) = bounds[j].first - u(j);
    }
    return out;
  };
  s.c_x = [m](const Vec& x, const Vec&) { return Mat::Zero(2 * m, x.size()).eval(); };
  s.c_u = [m](const Vec&, const Vec&) {
    Mat out = Mat::Zero(2 * m, m);
    for (int j = 0; j < m; ++j) {
      out(2 * j, j) = 1.0;
      out(2 * j + 1, j) = -1.0;
    }
    return out;
  };
}

}  // namespace

const OcpTrajectory& BenchmarkBundle::guess(Method method) const {
  return method == Method::Primal ? guess_primal : guess_primal_dual;
}

const ContinuationConfig& BenchmarkBundle::config(Method method) const {
  return method == Method::Primal ? config_primal : config_primal_dual;
}

const SolverOptions& BenchmarkBundle::options(Method method) const {
  return method == Method::Primal ? options_primal : options_primal_dual;
}

const ReferenceRow& BenchmarkBundle::reference_row(Method method) const {
  for (const auto& row : reference) {
    if (row.method == method) return row;
  }
  throw InvalidArgument("no reference row for " + std::string(method_name(method)));
}

DaeSolution BenchmarkBundle::initial_guess(Method method) const {
  return make_ocp_guess(spec, method, guess(method));
}

BenchmarkBundle vdp() {
  OcpSpec s;
  s.name = "vdp";
  s.dims = OcpDims{2, 1, 1, 2, 3};
  s.horizon = 4.0;
  s.f = [](const Vec& x, const Vec& u) {
    return vec({x(1), -x(0) + x(1) * (1.0 - x(0) * x(0)) + u(0)});
  };
  s.f_x = [](const Vec& x, const Vec&) {
    Mat j(2, 2);
    j << 0.0, 1.0, -1.0 - 2.0 * x(0) * x(1), 1.0 - x(0) * x(0);
    return j;
  };
  s.f_u = [](const Vec&, const Vec&) { return Mat(vec({0.0, 1.0})); };
  s.ell = [](const Vec& x, const Vec& u) { return x.squaredNorm() + u(0) * u(0); };
  s.ell_x = [](const Vec& x, const Vec&) { return Vec(2.0 * x); };
  s.ell_u = [](const Vec&, const Vec& u) { return Vec(2.0 * u); };
  s.g = [](const Vec& x) { return vec({-0.4 - x(1)}); };
  s.g_x = [](const Vec&) {
    Mat j(1, 2);
    j << 0.0, -1.0;
    return j;
  };
  box_controls(s, {{-1.0, 1.0}});
  s.h = [](const Vec& x0, const Vec& xT) {
    return vec({x0(0) - 1.0, x0(1) - 1.0, xT.squaredNorm() - 0.04});
  };
  s.h_x0 = [](const Vec&, const Vec&) {
    Mat j = Mat::Zero(3, 2);
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    return j;
  };
  s.h_xT = [](const Vec&, const Vec& xT) {
    Mat j = Mat::Zero(3, 2);
    j.row(2) = 2.0 * xT.transpose();
    return j;
  };

  BenchmarkBundle b;
  b.name = "vdp";
  b.original = s;
  b.spec = s;
  b.guess_primal =
      constant_guess(linspace(0.0, 4.0, 41), vec({1.0, 1.0}), vec({0.0, 0.0}), vec({0.0}), 1, 2, 3);
  b.guess_primal_dual = b.guess_primal;
  b.config_primal = ContinuationConfig{1.0, 0.35, 1e-7};
  b.config_primal_dual = ContinuationConfig{1.0, 1e-7, 1e-7};
  b.options_primal.mesh_tol = 1e-7;
  b.options_primal_dual.mesh_tol = 1e-8;
  b.reference = {{Method::Primal, 0.35, 17, 812, 2.55}, {Method::PrimalDual, 1e-7, 2, 797, 1.92}};
  b.corrections = {
      "state constraint applied to x2 (g = -0.4 - x2); the printed statement names x1 but both "
      "printed adjoint systems put the constraint term in the p2 equation",
      "barrier term in the p2 equation is +eps/(0.4 + x2) as derived from the penalized "
      "Hamiltonian; the printed primal system has the opposite sign",
      "control bounds are u in [-1, 1]; the printed statement says -u <= 0 but both printed "
      "systems use the constraint -1 - u <= 0",
      "terminal multiplier kept as an unknown parameter instead of the hand-eliminated "
      "condition p1(4) x2(4) - p2(4) x1(4) = 0"};
  return b;
}

BenchmarkBundle zermelo() {
  OcpSpec s;
  s.name = "zermelo";
  s.dims = OcpDims{2, 2, 1, 4, 4};
  s.free_horizon = true;
  s.f = [](const Vec& x, const Vec& u) {
    return vec({u(1) * std::cos(u(0)) + 3.0 + x(1) * (1.0 - x(1)) / 5.0,
                u(1) * std::sin(u(0))});
  };
  s.f_x = [](const Vec& x, const Vec&) {
    Mat j = Mat::Zero(2, 2);
    j(0, 1) = (1.0 - 2.0 * x(1)) / 5.0;
    return j;
  };
  s.f_u = [](const Vec&, const Vec& u) {
    Mat j(2, 2);
    j << -u(1) * std::sin(u(0)), std::cos(u(0)), u(1) * std::cos(u(0)), std::sin(u(0));
    return j;
  };
  s.ell = [](const Vec&, const Vec&) { return 1.0; };
  s.ell_x = [](const Vec& x, const Vec&) { return Vec::Zero(x.size()).eval(); };
  s.ell_u = [](const Vec&, const Vec& u) { return Vec::Zero(u.size()).eval(); };
  s.g = [](const Vec& x) {
    const double a = x(0) - 10.0, b = x(1) - 0.4;
    return vec({-a * a / 4.0 - b * b / 1e-2 + 4.0});
  };
  s.g_x = [](const Vec& x) {
    Mat j(1, 2);
    j << -(x(0) - 10.0) / 2.0, -2.0 * (x(1) - 0.4) / 1e-2;
    return j;
  };
  box_controls(s, {{0.0, 2.0 * kPi}, {0.0, 1.0}});
  s.h = [](const Vec& x0, const Vec& xT) {
    return vec({x0(0), x0(1), xT(0) - 20.0, xT(1) - 1.0});
  };
  s.h_x0 = [](const Vec&, const Vec&) {
    Mat j = Mat::Zero(4, 2);
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    return j;
  };
  s.h_xT = [](const Vec&, const Vec&) {
    Mat j = Mat::Zero(4, 2);
    j(2, 0) = 1.0;
    j(3, 1) = 1.0;
    return j;
  };

  BenchmarkBundle b;
  b.name = "zermelo";
  b.original = s;
  b.spec = to_fixed_time(s);

  const int nodes = 101;
  const Vec time = linspace(0.0, 1.0, nodes);
  OcpTrajectory base = constant_guess(time, vec({0.0, 0.0, 20.0}), vec({0.0, 0.0, 1.0}),
                                      vec({kPi / 2.0, 0.5}), 1, 4, 4);
  // Straight line from the start to the target: crosses the obstacle.
  b.guess_primal_dual = base;
  b.guess_primal_dual.x.col(0) = 20.0 * time;
  b.guess_primal_dual.x.col(1) = time;
  // Interior detour above the obstacle through (5, 0.7) and (15, 0.7).
  b.guess_primal = base;
  for (int k = 0; k < nodes; ++k) {
    const double x1 = 20.0 * time(k);
    double x2;
    if (x1 <= 5.0) {
      x2 = 0.7 * x1 / 5.0;
    } else if (x1 <= 15.0) {
      x2 = 0.7;
    } else {
      x2 = 0.7 + 0.3 * (x1 - 15.0) / 5.0;
    }
    b.guess_primal.x(k, 0) = x1;
    b.guess_primal.x(k, 1) = x2;
  }
  b.config_primal = ContinuationConfig{0.1, 0.9, 1e-7};
  b.config_primal_dual = ContinuationConfig{0.1, 0.5, 1e-7};
  b.options_primal.mesh_tol = 1e-8;
  b.options_primal_dual.mesh_tol = 1e-7;
  b.reference = {{Method::Primal, 0.9, 82, 496, 34.83}, {Method::PrimalDual, 0.5, 21, 132, 4.99}};
  b.corrections = {
      "stationarity in u2 uses the horizon state x3 in place of the printed x2",
      "minimum time is a running cost of 1 on the original horizon, so the fixed-time adjoint "
      "of x3 carries the extra term -1 missing from the printed system",
      "primal initial trajectory is an interior detour (0,0)-(5,0.7)-(15,0.7)-(20,1); only "
      "a figure is published for it"};
  return b;
}

BenchmarkBundle goddard() {
  OcpSpec s;
  s.name = "goddard";
  s.dims = OcpDims{3, 1, 1, 2, 4};
  s.free_horizon = true;
  auto drag = [](const Vec& x) {
    return 310.0 * x(1) * x(1) * std::exp(500.0 * (1.0 - x(0)));
  };
  auto drag_x = [](const Vec& x) {
    const double e = std::exp(500.0 * (1.0 - x(0)));
    return vec({-500.0 * 310.0 * x(1) * x(1) * e, 620.0 * x(1) * e, 0.0});
  };
  s.f = [drag](const Vec& x, const Vec& u) {
    return vec({x(1), (u(0) - drag(x)) / x(2) - 1.0 / (x(0) * x(0)), -2.0 * u(0)});
  };
  s.f_x = [drag, drag_x](const Vec& x, const Vec& u) {
    const Vec dd = drag_x(x);
    Mat j = Mat::Zero(3, 3);
    j(0, 1) = 1.0;
    j(1, 0) = -dd(0) / x(2) + 2.0 / (x(0) * x(0) * x(0));
    j(1, 1) = -dd(1) / x(2);
    j(1, 2) = -(u(0) - drag(x)) / (x(2) * x(2));
    return j;
  };
  s.f_u = [](const Vec& x, const Vec&) { return Mat(vec({0.0, 1.0 / x(2), -2.0})); };
  s.ell = [](const Vec& x, const Vec&) { return -x(1); };
  s.ell_x = [](const Vec&, const Vec&) { return vec({0.0, -1.0, 0.0}); };
  s.ell_u = [](const Vec&, const Vec&) { return vec({0.0}); };
  s.g = [drag](const Vec& x) { return vec({20.0 * drag(x) - 10.0}); };
  s.g_x = [drag_x](const Vec& x) { return Mat(20.0 * drag_x(x).transpose()); };
  box_controls(s, {{0.0, 3.5}});
  s.h = [](const Vec& x0, const Vec& xT) {
    return vec({x0(0) - 1.0, x0(1), x0(2) - 1.0, xT(2) - 0.6});
  };
  s.h_x0 = [](const Vec&, const Vec&) {
    Mat j = Mat::Zero(4, 3);
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    j(2, 2) = 1.0;
    return j;
  };
  s.h_xT = [](const Vec&, const Vec&) {
    Mat j = Mat::Zero(4, 3);
    j(3, 2) = 1.0;
    return j;
  };

  BenchmarkBundle b;
  b.name = "goddard";
  b.original = s;
  b.spec = to_fixed_time(s);
  b.guess_primal = constant_guess(linspace(0.0, 1.0, 101), vec({1.2, 0.05, 1.0, 0.3}),
                                  vec({0.0, 1.0, 0.0, 0.0}), vec({1.75}), 1, 2, 4);
  b.guess_primal_dual = b.guess_primal;
  b.config_primal = ContinuationConfig{0.1, 0.6, 1e-7};
  b.config_primal_dual = ContinuationConfig{0.1, 0.25, 1e-7};
  b.options_primal.mesh_tol = 1e-6;
  b.options_primal_dual.mesh_tol = 1e-7;
  b.reference = {{Method::Primal, 0.6, 29, 722, 16.14},
                 {Method::PrimalDual, 0.25, 11, 501, 4.11}};
  b.corrections = {
      "dynamic pressure limit q = 20 d(h, v) - 10 with the drag arguments in their defined "
      "order",
      "initial thrust u = 1.75 (mid-range, strictly interior); no control guess is published"};
  return b;
}

std::vector<std::string> benchmark_names() { return {"vdp", "zermelo", "goddard"}; }

BenchmarkBundle make_benchmark(const std::string& name) {
  if (name == "vdp") return vdp();
  if (name == "zermelo") return zermelo();
  if (name == "goddard") return goddard();
  std::string keys;
  for (const auto& k : benchmark_names()) keys += (keys.empty() ? "" : ", ") + k;
  throw InvalidArgument("unknown problem '" + name + "'; known problems: " + keys);
}

}  // namespace ipoc
