#pragma once

#include <array>
#include <string>
#include <vector>

#include "pfc/grid.hpp"
#include "pfc/potential.hpp"

namespace pfc {

struct PhysicsParams {
  double tau = 0.0;      // viscosity
  double latent = 1.0;   // latent heat coefficient
  double coupling = 1.0; // gamma
};

struct InitialData {
  Field theta0;
  Field phi0;
};

/// Tracking-type cost. Running targets have one column per running level
/// 1..Nt; terminal targets are single fields.
struct CostSpec {
  std::array<double, 4> kappa{0.0, 0.0, 0.0, 0.0};
  SpaceTimeField theta_target;
  SpaceTimeField phi_target;
  Field theta_final;
  Field phi_final;

  static CostSpec zeros(const Grid& grid, const TimeGrid& time);
};

struct ControlBox {
  SpaceTimeField lower;
  SpaceTimeField upper;

  static ControlBox constant(const Grid& grid, const TimeGrid& time, double lo, double hi);
};

struct NewtonOptions {
  // Max-norm of the dt-scaled step residual.
  double tolerance = 1e-11;
  int max_iterations = 50;
  // Fraction of the distance to the boundary of D(beta) a Newton update may
  // consume in exact singular mode.
  double boundary_fraction = 0.995;
};

struct SolverOptions {
  NewtonOptions newton;
  // Relative residual accepted for every linear solve.
  double linear_tolerance = 1e-10;
};

struct ProblemSpec {
  Grid grid = Grid::line(64);
  TimeGrid time;
  PhysicsParams physics;
  Potential potential = Potential::regular();
  InitialData init;
  CostSpec cost;
  ControlBox box;
  SolverOptions solver;

  /// Every violated rule, empty when the spec is usable.
  std::vector<std::string> violations() const;
  /// Throws ValidationError listing all violations.
  void validate() const;

  Eigen::Index cells() const { return grid.size(); }
  int steps() const { return time.steps; }
};

/// Zero space-time field shaped for controls (cells x Nt).
SpaceTimeField zero_control(const ProblemSpec& spec);

}  // namespace pfc
