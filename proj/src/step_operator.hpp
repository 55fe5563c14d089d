#pragma once

#include <Eigen/SparseLU>

#include "pfc/dynamics.hpp"

namespace pfc::detail {

// Every time step is written in dt-multiplied form on x = (theta, phi, mu):
//   F1 = (theta - theta_n) + l (phi - phi_n) + dt A theta - dt v
//   F2 = (phi - phi_n) + dt A mu
//   F3 = dt mu - tau (phi - phi_n) - dt A phi - dt beta(phi)
//        - dt lambda_n pi(phi_n) + dt gamma theta
// Blocks are stacked [theta; phi; mu].

/// dF/dx at the new level; `slope` is beta'(phi) cellwise (zero in linear mode).
Eigen::SparseMatrix<double> step_jacobian(const Grid& grid, double dt,
                                          const PhysicsParams& physics, const Field& slope);

/// The linearized step M_{n+1} x_{n+1} = B_n x_n + E h_{n+1} about a state
/// trajectory, and the transposes needed by the backward sweep.
class LinearizedSteps {
 public:
  LinearizedSteps(const ProblemSpec& spec, const Trajectory& base);

  int steps() const { return steps_; }
  Eigen::Index cells() const { return cells_; }

  /// M for the step that produces `level` (1..Nt).
  Eigen::SparseMatrix<double> matrix(int level) const;

  /// B_n x for (theta, phi) at `level` n (0..Nt-1).
  Eigen::VectorXd apply_history(int level, const Field& theta, const Field& phi) const;

  /// (theta, phi) blocks of B_n^T y.
  void apply_history_transpose(int level, const Eigen::VectorXd& y, Field& theta_out,
                               Field& phi_out) const;

  double dt() const { return dt_; }

 private:
  const ProblemSpec& spec_;
  const Trajectory& base_;
  int steps_;
  Eigen::Index cells_;
  double dt_;
};

/// SparseLU wrapper that throws on failure and checks the solve residual.
class SparseSolver {
 public:
  explicit SparseSolver(double tolerance) : tolerance_(tolerance) {}

  void factorize(const Eigen::SparseMatrix<double>& m);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  double tolerance_;
  bool analyzed_ = false;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace pfc::detail
