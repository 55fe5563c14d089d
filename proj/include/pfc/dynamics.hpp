#pragma once

#include "pfc/grid.hpp"
#include "pfc/potential.hpp"
#include "pfc/problem.hpp"

namespace pfc {

enum class Nonlinearity {
  full,   // beta(phi) + lambda pi(phi)
  linear  // beta off, lambda * phi
};

/// Forward problem with coefficient lambda and source v:
///   theta_t + l phi_t - Δtheta = v
///   phi_t - Δmu = 0
///   mu = tau phi_t - Δphi + beta(phi) + lambda pi(phi) - gamma theta
struct GeneralizedProblem {
  // cells x Nt; column k is v at level k+1.
  SpaceTimeField source;
  // cells x (Nt+1), lambda at levels 0..Nt. Empty means lambda = 1.
  SpaceTimeField coefficient;
  Nonlinearity mode = Nonlinearity::full;
  PhysicsParams physics;
  Potential potential = Potential::regular();
  InitialData init;
};

/// Discrete solution. theta and phi hold levels 0..Nt; mu holds levels
/// 1..Nt (column k is level k+1).
struct Trajectory {
  SpaceTimeField theta;
  SpaceTimeField phi;
  SpaceTimeField mu;
  SpaceTimeField source;
  int newton_iterations = 0;

  int steps() const { return static_cast<int>(mu.cols()); }
};

/// Output of the linearized solver; same level layout as Trajectory.
struct TangentTrajectory {
  SpaceTimeField theta;
  SpaceTimeField phi;
  SpaceTimeField mu;
};

/// Backward Euler with the monotone part implicit and lambda pi(phi) taken
/// at the previous level. Each step is solved by damped Newton on the
/// coupled (theta, phi, mu) unknowns.
Trajectory solve_generalized(const Grid& grid, const TimeGrid& time,
                             const GeneralizedProblem& problem, const SolverOptions& options = {});

/// State system: lambda = 1, v = u, full nonlinearity.
Trajectory solve_state(const SpaceTimeField& control, const ProblemSpec& spec);

/// Exact derivative of the discrete control-to-state map at `base` in
/// direction `direction` (cells x Nt, zero initial data).
TangentTrajectory solve_tangent(const SpaceTimeField& direction, const Trajectory& base,
                                const ProblemSpec& spec);

/// 1/2 |∇phi|^2 + beta_hat(phi) + pi_hat(phi), integrated. The regularized
/// primitive is used when the potential carries a Yosida level.
double energy(const Grid& grid, const Potential& potential, const Field& phi);

}  // namespace pfc
