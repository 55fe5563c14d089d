#pragma once

#include <string>
#include <vector>

#include "pfc/adjoint.hpp"
#include "pfc/dynamics.hpp"

namespace pfc {

/// Weighted inner product over Q: sum over running levels of <a, b> dt.
double space_time_inner(const ProblemSpec& spec, const SpaceTimeField& a,
                        const SpaceTimeField& b);
double space_time_norm(const ProblemSpec& spec, const SpaceTimeField& a);

/// Discrete tracking cost. Running terms use levels 1..Nt with weight
/// cell_measure * dt, terminal terms use level Nt with weight cell_measure.
double cost(const Trajectory& traj, const CostSpec& cost, const Grid& grid, const TimeGrid& time);

/// Derivative of the discrete cost at `traj` along a tangent solution.
double cost_derivative(const Trajectory& traj, const TangentTrajectory& tangent,
                       const CostSpec& cost, const Grid& grid, const TimeGrid& time);

/// J(u) = cost(solve_state(u)).
double reduced_cost(const SpaceTimeField& control, const ProblemSpec& spec);

/// Forward solve followed by the adjoint sweep; returns q at the running
/// levels (cells x Nt).
SpaceTimeField reduced_gradient(const SpaceTimeField& control, const ProblemSpec& spec);

/// Nodewise clamp onto [lower, upper].
SpaceTimeField project_box(const SpaceTimeField& control, const ControlBox& box);

/// |u - P(u - g)| in the discrete L2(Q) norm.
double stationarity_residual(const ProblemSpec& spec, const SpaceTimeField& control,
                             const SpaceTimeField& gradient);

struct BangBangReport {
  double tolerance = 0.0;
  // Fractions of all nodes in {q > tol}, {q < -tol}, {|q| <= tol}.
  double positive_fraction = 0.0;
  double negative_fraction = 0.0;
  double indeterminate_fraction = 0.0;
  // Share of {q > tol} with u at the lower face, of {q < -tol} at the upper
  // face. Vacuously 1 when the set is empty.
  double lower_consistency = 1.0;
  double upper_consistency = 1.0;
};

BangBangReport bang_bang_classify(const SpaceTimeField& control, const SpaceTimeField& adjoint,
                                  const ControlBox& box, double tolerance);

/// Default classification tolerance 1e-8 * max|q|.
BangBangReport bang_bang_classify(const SpaceTimeField& control, const SpaceTimeField& adjoint,
                                  const ControlBox& box);

struct OptimizeOptions {
  double tolerance = 1e-6;
  int max_iterations = 500;
  double armijo_sigma = 1e-4;
  // First trial step; later iterations start from a Barzilai-Borwein estimate.
  double initial_step = 1.0;
  int max_backtracks = 60;
};

enum class Termination { stationary, max_iterations, line_search_failed };

std::string to_string(Termination t);

struct OptimizeReport {
  SpaceTimeField control;
  SpaceTimeField gradient;
  std::vector<double> cost_history;
  std::vector<double> residual_history;
  std::vector<double> step_history;
  BangBangReport bang_bang;
  int iterations = 0;
  Termination termination = Termination::max_iterations;
};

/// Projected gradient with Armijo backtracking:
///   u+ = P(u - s g),  J(u+) <= J(u) - sigma / s |u+ - u|^2.
OptimizeReport optimize(const ProblemSpec& spec, const SpaceTimeField& initial,
                        const OptimizeOptions& options = {});

}  // namespace pfc
