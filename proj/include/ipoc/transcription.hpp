#pragma once

#include "ipoc/bvpdae.hpp"
#include "ipoc/dae_system.hpp"
#include "ipoc/ocp_model.hpp"

namespace ipoc {

enum class Method { Primal, PrimalDual };

const char* method_name(Method method);

/// Constraint multiplier densities at mesh nodes: (N+1) x n_g and (N+1) x n_c.
struct Multipliers {
  Mat g;
  Mat c;
};

/// Node-wise view of an OCP trajectory, also used to describe initial guesses.
/// `lambda` holds the boundary multipliers (n_h).
struct OcpTrajectory {
  Vec time;
  Mat x;
  Mat p;
  Mat u;
  Mat lambda_g;
  Mat lambda_c;
  Vec lambda;
};

/// Barrier-penalized stationarity system. Unknowns: y = (x, p), z = u,
/// parameters = boundary multipliers. F and G report "outside the domain"
/// whenever a constraint is not strictly negative.
DaeSystem primal_system(const OcpSpec& spec);

/// Primal-dual system with the constraint multipliers as algebraic unknowns
/// tied to the constraints through Fischer-Burmeister equations:
/// z = (u, lambda_g, lambda_c). Defined everywhere.
DaeSystem primal_dual_system(const OcpSpec& spec);

DaeSystem make_system(const OcpSpec& spec, Method method);

/// lambda_g = -eps / g(x), lambda_c = -eps / c(x, u) at every node of a
/// primal solution. Throws InteriorViolation naming node and constraint when
/// some constraint is not strictly negative.
Multipliers recover_multipliers(const OcpSpec& spec, const DaeSolution& primal, double eps);

/// Multiplier columns of a primal-dual solution.
Multipliers native_multipliers(const OcpSpec& spec, const DaeSolution& primal_dual);

/// Splits a solution of either system into OCP quantities.
OcpTrajectory split_solution(const OcpSpec& spec, const DaeSolution& solution,
                             const Multipliers& multipliers);

/// Packs node data into a collocation guess for the chosen system. Missing
/// multiplier arrays (zero rows) are filled with zeros.
DaeSolution make_ocp_guess(const OcpSpec& spec, Method method, const OcpTrajectory& guess);

}  // namespace ipoc
