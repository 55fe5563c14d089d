#include "pfc/adjoint.hpp"

#include <Eigen/SparseCholesky>

#include "step_operator.hpp"

namespace pfc {

namespace {

void check_cost_shapes(const CostSpec& cost, Eigen::Index n, int nt) {
  if (cost.theta_target.rows() != n || cost.theta_target.cols() != nt ||
      cost.phi_target.rows() != n || cost.phi_target.cols() != nt ||
      cost.theta_final.size() != n || cost.phi_final.size() != n) {
    throw ShapeMismatch("cost targets do not match the state grids");
  }
}

}  // namespace

TerminalData terminal_conditions(const Trajectory& state, const CostSpec& cost,
                                 const PhysicsParams& physics, const Grid& grid,
                                 double linear_tolerance) {
  const Eigen::Index n = grid.size();
  const int nt = state.steps();
  if (state.theta.rows() != n) throw ShapeMismatch("state does not match grid");
  check_cost_shapes(cost, n, nt);

  TerminalData out;
  out.q = cost.kappa[2] * (state.theta.col(nt) - cost.theta_final);
  const Field g4 = cost.kappa[3] * (state.phi.col(nt) - cost.phi_final);
  const Field rhs = g4 - physics.latent * out.q;
  if (physics.tau == 0.0) {
    out.p = rhs;
    return out;
  }
  Eigen::SparseMatrix<double> helmholtz = physics.tau * grid.stiffness();
  for (Eigen::Index i = 0; i < n; ++i) helmholtz.coeffRef(i, i) += 1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(helmholtz);
  if (ldlt.info() != Eigen::Success) {
    throw SolverDivergence("terminal Helmholtz factorization failed");
  }
  out.p = ldlt.solve(rhs);
  const double rn = rhs.norm();
  if (rn > 0.0 && (helmholtz * out.p - rhs).norm() > linear_tolerance * rn) {
    throw SolverDivergence("terminal Helmholtz solve did not reach tolerance");
  }
  return out;
}

AdjointSolution solve_adjoint(const Trajectory& state, const CostSpec& cost,
                              const ProblemSpec& spec) {
  const Eigen::Index n = spec.grid.size();
  const int nt = spec.time.steps;
  if (state.theta.rows() != n || state.theta.cols() != nt + 1) {
    throw ShapeMismatch("state does not match the problem grids");
  }
  check_cost_shapes(cost, n, nt);

  detail::LinearizedSteps steps(spec, state);
  detail::SparseSolver solver(spec.solver.linear_tolerance);
  const double cm = spec.grid.cell_measure();
  const double dt = spec.time.dt();
  const auto& k = cost.kappa;

  AdjointSolution out;
  out.q = SpaceTimeField::Zero(n, nt + 1);
  out.p = SpaceTimeField::Zero(n, nt + 1);

  // carry = B_n^T y_{n+1}, restricted to its (theta, phi) blocks.
  Field carry_theta = Field::Zero(n);
  Field carry_phi = Field::Zero(n);
  Eigen::VectorXd rhs(3 * n);
  for (int level = nt; level >= 1; --level) {
    rhs.setZero();
    rhs.segment(0, n) = cm * dt * k[0] * (state.theta.col(level) - cost.theta_target.col(level - 1));
    rhs.segment(n, n) = cm * dt * k[1] * (state.phi.col(level) - cost.phi_target.col(level - 1));
    if (level == nt) {
      rhs.segment(0, n) += cm * k[2] * (state.theta.col(nt) - cost.theta_final);
      rhs.segment(n, n) += cm * k[3] * (state.phi.col(nt) - cost.phi_final);
    }
    rhs.segment(0, n) += carry_theta;
    rhs.segment(n, n) += carry_phi;

    const Eigen::SparseMatrix<double> mt = steps.matrix(level).transpose();
    solver.factorize(mt);
    const Eigen::VectorXd y = solver.solve(rhs);
    out.q.col(level) = y.segment(0, n) / cm;
    out.p.col(level) = y.segment(n, n) / cm;
    steps.apply_history_transpose(level - 1, y, carry_theta, carry_phi);
  }
  out.q.col(0) = carry_theta / cm;
  out.p.col(0) = carry_phi / cm;
  return out;
}

}  // namespace pfc
