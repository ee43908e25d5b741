#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ipoc/bvpdae.hpp"
#include "ipoc/errors.hpp"
#include "ipoc/problems.hpp"
#include "ipoc/transcription.hpp"

using namespace ipoc;

namespace {

// y' = z, 0 = z - y, y(0) = 1 on [0, 1]: y = e^t.
DaeSystem exp_dae() {
  DaeSystem s;
  s.name = "exp";
  s.n_y = 1;
  s.n_z = 1;
  s.n_p = 0;
  s.horizon = 1.0;
  s.rhs = [](double, const Vec&, const Vec& z, const Vec&, double, Vec& out) {
    out = z;
    return true;
  };
  s.alg = [](double, const Vec& y, const Vec& z, const Vec&, double, Vec& out) {
    out = z - y;
    return true;
  };
  s.bc = [](const Vec& ya, const Vec&, const Vec&, Vec& out) {
    out.resize(1);
    out(0) = ya(0) - 1.0;
  };
  return s;
}

// y1' = y2, y2' = 0, y1(0) = 0, y1(1) = 1: y1 = t.
DaeSystem linear_ode() {
  DaeSystem s;
  s.name = "linear";
  s.n_y = 2;
  s.horizon = 1.0;
  s.rhs = [](double, const Vec& y, const Vec&, const Vec&, double, Vec& out) {
    out.resize(2);
    out << y(1), 0.0;
    return true;
  };
  s.alg = [](double, const Vec&, const Vec&, const Vec&, double, Vec& out) {
    out.resize(0);
    return true;
  };
  s.bc = [](const Vec& ya, const Vec& yb, const Vec&, Vec& out) {
    out.resize(2);
    out << ya(0), yb(0) - 1.0;
  };
  return s;
}

// y' = p, y(0) = 0, y(1) = 3.
DaeSystem param_ode() {
  DaeSystem s;
  s.name = "param";
  s.n_y = 1;
  s.n_p = 1;
  s.horizon = 1.0;
  s.rhs = [](double, const Vec&, const Vec&, const Vec& p, double, Vec& out) {
    out = p;
    return true;
  };
  s.alg = [](double, const Vec&, const Vec&, const Vec&, double, Vec& out) {
    out.resize(0);
    return true;
  };
  s.bc = [](const Vec& ya, const Vec& yb, const Vec&, Vec& out) {
    out.resize(2);
    out << ya(0), yb(0) - 3.0;
  };
  return s;
}

DaeSolution constant_guess(const DaeSystem& s, const Mesh& mesh, double value) {
  const Eigen::Index n = mesh.nodes.size();
  return make_guess(mesh, Mat::Constant(n, s.n_y, value), Mat::Constant(n, s.n_z, value),
                    Vec::Zero(s.n_p));
}

SolverOptions single_pass() {
  SolverOptions o;
  o.mesh_tol = 1e10;
  o.newton_tol = 1e-12;
  return o;
}

Mesh skewed_mesh(int intervals) {
  Mesh m;
  m.nodes = Vec::LinSpaced(intervals + 1, 0.0, 1.0).array().square();
  return m;
}

}  // namespace

TEST(Mesh, Checks) {
  EXPECT_NO_THROW(Mesh::uniform(4.0, 40).check());
  Mesh m;
  m.nodes.resize(2);
  m.nodes << 0.0, 1.0;
  EXPECT_THROW(m.check(), InvalidArgument);
  m.nodes.resize(3);
  m.nodes << 0.0, 0.7, 0.5;
  EXPECT_THROW(m.check(), InvalidArgument);
  m.nodes << 0.1, 0.5, 1.0;
  EXPECT_THROW(m.check(), InvalidArgument);
  m.nodes << 0.0, 1e-14, 1.0;
  EXPECT_THROW(m.check(), InvalidArgument);
}

TEST(Solve, ExponentialDae) {
  const DaeSystem s = exp_dae();
  const DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, 4), 1.0));
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.y(sol.y.rows() - 1, 0), std::exp(1.0), 1e-6);
  EXPECT_NEAR(sol.y(sol.y.rows() - 1, 0), 2.7182818, 1e-6);
}

TEST(Solve, LinearProblemExactOnAnyMesh) {
  const DaeSystem s = linear_ode();
  for (const Mesh& mesh : {Mesh::uniform(1.0, 2), skewed_mesh(7)}) {
    const DaeSolution sol = solve(s, constant_guess(s, mesh, 0.3), single_pass());
    ASSERT_TRUE(sol.converged);
    for (Eigen::Index k = 0; k < sol.y.rows(); ++k) {
      EXPECT_NEAR(sol.y(k, 0), sol.mesh.nodes(k), 1e-12);
      EXPECT_NEAR(sol.y(k, 1), 1.0, 1e-12);
    }
    EXPECT_NEAR(interpolate(sol, 0.5).first(0), 0.5, 1e-12);
    EXPECT_LE(estimate_residual(s, sol).maxCoeff(), 1e-12);
  }
}

TEST(Solve, UnknownParameter) {
  const DaeSystem s = param_ode();
  const DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, 3), 0.0));
  ASSERT_TRUE(sol.converged);
  ASSERT_EQ(sol.params.size(), 1);
  EXPECT_NEAR(sol.params(0), 3.0, 1e-10);
}

TEST(Solve, OrderOfAccuracyIsFour) {
  const DaeSystem s = exp_dae();
  std::vector<double> hs, errs;
  for (int N : {8, 16, 32, 64}) {
    const DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, N), 1.0), single_pass());
    ASSERT_TRUE(sol.converged);
    ASSERT_EQ(sol.intervals(), N);
    double err = 0.0;
    for (int k = 0; k <= 10 * N; ++k) {
      const double t = double(k) / (10 * N);
      err = std::max(err, std::abs(interpolate(sol, t).first(0) - std::exp(t)));
    }
    hs.push_back(1.0 / N);
    errs.push_back(err);
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < hs.size(); ++i) {
    mx += std::log(hs[i]) / hs.size();
    my += std::log(errs[i]) / hs.size();
  }
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < hs.size(); ++i) {
    sxy += (std::log(hs[i]) - mx) * (std::log(errs[i]) - my);
    sxx += (std::log(hs[i]) - mx) * (std::log(hs[i]) - mx);
  }
  const double order = sxy / sxx;
  RecordProperty("fitted_order", std::to_string(order));
  EXPECT_GE(order, 3.7);
}

TEST(Solve, AlgebraicAndBoundaryRowsHoldAtConvergence) {
  const BenchmarkBundle b = vdp();
  DaeSystem s = primal_dual_system(b.spec);
  s.eps = b.config_primal_dual.eps0;
  SolverOptions opt;
  const DaeSolution sol = solve(s, b.initial_guess(Method::PrimalDual), opt);
  ASSERT_TRUE(sol.converged);
  double worst = 0.0;
  Vec out;
  for (Eigen::Index k = 0; k < sol.y.rows(); ++k) {
    ASSERT_TRUE(s.alg(sol.mesh.nodes(k), sol.y.row(k).transpose(), sol.z.row(k).transpose(),
                      sol.params, s.eps, out));
    worst = std::max(worst, out.cwiseAbs().maxCoeff());
  }
  for (int i = 0; i < sol.intervals(); ++i) {
    const double tm = 0.5 * (sol.mesh.nodes(i) + sol.mesh.nodes(i + 1));
    const Vec ym = interpolate(sol, tm).first;
    ASSERT_TRUE(s.alg(tm, ym, sol.z_mid.row(i).transpose(), sol.params, s.eps, out));
    worst = std::max(worst, out.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, opt.newton_tol);
  s.bc(sol.y.row(0).transpose(), sol.y.row(sol.y.rows() - 1).transpose(), sol.params, out);
  EXPECT_LE(out.cwiseAbs().maxCoeff(), opt.newton_tol);
  EXPECT_LE(sol.interval_residuals.maxCoeff(), opt.mesh_tol);
}

TEST(Solve, NewtonTailIsQuadratic) {
  const BenchmarkBundle b = vdp();
  for (Method m : {Method::Primal, Method::PrimalDual}) {
    DaeSystem s = make_system(b.spec, m);
    s.eps = 1.0;
    const DaeSolution sol = solve(s, b.initial_guess(m), single_pass());
    ASSERT_TRUE(sol.converged);
    const auto& h = sol.newton_history;
    ASSERT_GE(h.size(), 2u);
    for (size_t k = 0; k + 1 < h.size(); ++k) {
      if (h[k] < 1e-3 && h[k + 1] > 0.0) {
        EXPECT_LT(h[k + 1], std::pow(h[k], 1.5)) << method_name(m) << " step " << k;
      }
    }
  }
}

TEST(Solve, PrimalRejectsNonInteriorGuess) {
  const BenchmarkBundle b = zermelo();
  DaeSystem s = primal_system(b.spec);
  s.eps = 0.1;
  const DaeSolution straight = make_ocp_guess(b.spec, Method::Primal, b.guess_primal_dual);
  EXPECT_THROW(solve(s, straight), InfeasibleStart);
}

TEST(Solve, OptionsValidated) {
  const DaeSystem s = exp_dae();
  const DaeSolution g = constant_guess(s, Mesh::uniform(1.0, 4), 1.0);
  SolverOptions o;
  o.newton_tol = 1.5;
  EXPECT_THROW(solve(s, g, o), InvalidArgument);
  o = SolverOptions{};
  o.mesh_tol = 0.0;
  EXPECT_THROW(solve(s, g, o), InvalidArgument);
}

TEST(Residual, OrderUnderRefinement) {
  const DaeSystem s = exp_dae();
  const DaeSolution coarse =
      solve(s, constant_guess(s, Mesh::uniform(1.0, 2), 1.0), single_pass());
  const DaeSolution fine =
      solve(s, constant_guess(s, Mesh::uniform(1.0, 64), 1.0), single_pass());
  const double ratio = estimate_residual(s, coarse).maxCoeff() /
                       estimate_residual(s, fine).maxCoeff();
  const double expected = std::pow(32.0, 4);
  RecordProperty("ratio", std::to_string(ratio));
  EXPECT_GE(ratio, expected / 4.0);
  EXPECT_LE(ratio, expected * 4.0);
}

TEST(Residual, ConcentratedNearBarrierLayer) {
  // Van der Pol primal at small eps: the largest residuals sit where the
  // state constraint x2 >= -0.4 is nearly active.
  const BenchmarkBundle b = vdp();
  DaeSystem s = primal_system(b.spec);
  ContinuationConfig cfg{1.0, 0.1, 1e-4};
  const ContinuationResult res =
      run_primal(b.spec, b.initial_guess(Method::Primal), cfg, b.options_primal);
  s.eps = res.report.eps_schedule.back();
  const DaeSolution& sol = res.solution;
  const Vec r = estimate_residual(s, sol);
  Eigen::Index worst;
  r.maxCoeff(&worst);
  const double g_left = -0.4 - sol.y(worst, 1), g_right = -0.4 - sol.y(worst + 1, 1);
  double g_min = 0.0;
  for (Eigen::Index k = 0; k < sol.y.rows(); ++k) g_min = std::min(g_min, -0.4 - sol.y(k, 1));
  // The constraint is within a tenth of its range of activity at that interval.
  EXPECT_GE(std::max(g_left, g_right), 0.1 * g_min);
}

TEST(Refine, SingleHotInterval) {
  const DaeSystem s = exp_dae();
  DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, 8), 1.0), single_pass());
  const double tol = 1e-6;
  Vec res = Vec::Constant(8, tol / 1000.0);
  res(3) = 10.0 * tol;
  const DaeSolution next = refine_mesh(sol, res, tol);
  // Interval 3 is halved; the cold ones merge pairwise where both of a pair
  // are cold: (0,1), (4,5), (6,7); interval 2 stays.
  const Vec& t = next.mesh.nodes;
  EXPECT_TRUE((t.array() - 3.5 / 8).abs().minCoeff() < 1e-15);
  EXPECT_TRUE((t.array() - 3.0 / 8).abs().minCoeff() < 1e-15);
  EXPECT_TRUE((t.array() - 4.0 / 8).abs().minCoeff() < 1e-15);
  EXPECT_EQ(next.intervals(), 8 + 1 - 3);
  EXPECT_EQ(next.y.rows(), next.mesh.nodes.size());
  EXPECT_EQ(next.z_mid.rows(), next.intervals());
}

TEST(Refine, UniformHotSplitsInThirds) {
  const DaeSystem s = exp_dae();
  DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, 5), 1.0), single_pass());
  const DaeSolution next = refine_mesh(sol, Vec::Constant(5, 200e-6), 1e-6);
  ASSERT_EQ(next.intervals(), 15);
  for (int i = 0; i < 15; ++i) {
    EXPECT_NEAR(next.mesh.nodes(i + 1) - next.mesh.nodes(i), 1.0 / 15, 1e-15);
  }
  // New nodes sample the C1 interpolant.
  for (Eigen::Index k = 0; k < next.y.rows(); ++k) {
    EXPECT_NEAR(next.y(k, 0), interpolate(sol, next.mesh.nodes(k)).first(0), 1e-15);
  }
}

TEST(Refine, MeshLimit) {
  const DaeSystem s = exp_dae();
  DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, 8), 1.0), single_pass());
  EXPECT_THROW(refine_mesh(sol, Vec::Constant(8, 1.0), 1e-6, 20), MeshLimit);
}

TEST(Interpolate, NodesAndRange) {
  const DaeSystem s = exp_dae();
  const DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, 4), 1.0));
  for (Eigen::Index k = 0; k < sol.y.rows(); ++k) {
    const auto [y, z] = interpolate(sol, sol.mesh.nodes(k));
    EXPECT_EQ(y(0), sol.y(k, 0));
    EXPECT_EQ(z(0), sol.z(k, 0));
  }
  EXPECT_NEAR(interpolate(sol, 0.5).first(0), std::exp(0.5), 1e-6);
  EXPECT_THROW(interpolate(sol, -1e-3), RangeError);
  EXPECT_THROW(interpolate(sol, 1.001), RangeError);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  const BenchmarkBundle b = vdp();
  for (Method m : {Method::Primal, Method::PrimalDual}) {
    DaeSystem s = make_system(b.spec, m);
    s.eps = 0.05;
    Mesh mesh;
    mesh.nodes.resize(5);
    mesh.nodes << 0.0, 0.7, 1.9, 3.1, 4.0;
    const int n = 5;
    Mat y(n, s.n_y), z(n, s.n_z);
    for (int k = 0; k < n; ++k) {
      y.row(k) << 0.5 + d(rng), 0.3 + d(rng), d(rng), d(rng);
      z(k, 0) = d(rng);
      for (int j = 1; j < s.n_z; ++j) z(k, j) = 0.5 + d(rng);
    }
    Vec params(3);
    params << d(rng), d(rng), d(rng);
    DaeSolution sol = make_guess(mesh, y, z, params);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < s.n_z; ++j) sol.z_mid(i, j) += d(rng) * 0.1;
    ASSERT_TRUE(compute_slopes(s, sol));
    const Vec w = collocation_weights(sol);
    const Vec x = pack_unknowns(s, sol);
    Mat J;
    ASSERT_TRUE(collocation_jacobian(s, mesh, w, x, J));
    Mat Jfd(J.rows(), J.cols());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Vec xp = x, xm = x, rp, rm;
      const double h = 1e-6 * (1.0 + std::abs(x(j)));
      xp(j) += h;
      xm(j) -= h;
      ASSERT_TRUE(collocation_residual(s, mesh, w, xp, rp));
      ASSERT_TRUE(collocation_residual(s, mesh, w, xm, rm));
      Jfd.col(j) = (rp - rm) / (2.0 * h);
    }
    const double rel = (J - Jfd).cwiseAbs().maxCoeff() / J.cwiseAbs().maxCoeff();
    EXPECT_LE(rel, 1e-5) << method_name(m);
  }
}

TEST(Predict, FirstOrderAccurateInEps) {
  // y' = eps y, y(0) = 1: y(1) = e^eps.
  DaeSystem s;
  s.n_y = 1;
  s.horizon = 1.0;
  s.rhs = [](double, const Vec& y, const Vec&, const Vec&, double eps, Vec& out) {
    out = eps * y;
    return true;
  };
  s.alg = [](double, const Vec&, const Vec&, const Vec&, double, Vec& out) {
    out.resize(0);
    return true;
  };
  s.bc = [](const Vec& ya, const Vec&, const Vec&, Vec& out) {
    out.resize(1);
    out(0) = ya(0) - 1.0;
  };
  s.eps = 1.0;
  const DaeSolution sol = solve(s, constant_guess(s, Mesh::uniform(1.0, 16), 1.0), single_pass());
  const DaeSolution pred = predict(s, sol, 1.01);
  const Eigen::Index N = sol.y.rows() - 1;
  const double warm_err = std::abs(sol.y(N, 0) - std::exp(1.01));
  const double pred_err = std::abs(pred.y(N, 0) - std::exp(1.01));
  EXPECT_LT(pred_err, 0.01 * warm_err);
}
