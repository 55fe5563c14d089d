#pragma once

#include "pfc/dynamics.hpp"

namespace pfc {

/// Backward-sweep solution. Levels 1..Nt hold the discrete adjoint states;
/// q at those levels is the reduced gradient density of J. Level 0 holds
/// the sensitivities of J with respect to theta0 (q) and phi0 (p).
struct AdjointSolution {
  SpaceTimeField q;  // cells x (Nt+1)
  SpaceTimeField p;  // cells x (Nt+1)

  /// q at the running levels, shaped like a control.
  SpaceTimeField gradient() const { return q.rightCols(q.cols() - 1); }
};

/// Continuous terminal data: q_T = g3 and (I - tau Δ) p_T = g4 - l g3.
struct TerminalData {
  Field q;
  Field p;
};

TerminalData terminal_conditions(const Trajectory& state, const CostSpec& cost,
                                 const PhysicsParams& physics, const Grid& grid,
                                 double linear_tolerance = 1e-10);

/// Transpose of the discrete tangent scheme driven by the tracking residuals
/// g1..g4, swept from level Nt down to 0. For every direction h,
/// sum_n <q^n, h^n> dt equals the tangent derivative of the discrete cost.
AdjointSolution solve_adjoint(const Trajectory& state, const CostSpec& cost,
                              const ProblemSpec& spec);

}  // namespace pfc
