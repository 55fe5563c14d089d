#include "pfc/dynamics.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

#include "step_operator.hpp"

namespace pfc {

namespace detail {

Eigen::SparseMatrix<double> step_jacobian(const Grid& grid, double dt,
                                          const PhysicsParams& physics, const Field& slope) {
  const Eigen::Index n = grid.size();
  const auto& a = grid.stiffness();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * a.nonZeros() + 6 * n));

  for (int k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      const Eigen::Index r = it.row();
      const Eigen::Index c = it.col();
      t.emplace_back(r, c, dt * it.value());              // theta row, theta col
      t.emplace_back(n + r, 2 * n + c, dt * it.value());  // phi row, mu col
      t.emplace_back(2 * n + r, n + c, -dt * it.value()); // mu row, phi col
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, 1.0);
    t.emplace_back(i, n + i, physics.latent);
    t.emplace_back(n + i, n + i, 1.0);
    t.emplace_back(2 * n + i, i, dt * physics.coupling);
    t.emplace_back(2 * n + i, n + i, -physics.tau - dt * slope(i));
    t.emplace_back(2 * n + i, 2 * n + i, dt);
  }
  Eigen::SparseMatrix<double> m(3 * n, 3 * n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void SparseSolver::factorize(const Eigen::SparseMatrix<double>& m) {
  if (!analyzed_ || m.nonZeros() != matrix_.nonZeros() || m.rows() != matrix_.rows()) {
    lu_.analyzePattern(m);
    analyzed_ = true;
  }
  matrix_ = m;
  lu_.factorize(matrix_);
  if (lu_.info() != Eigen::Success) {
    throw SolverDivergence("sparse LU factorization failed: " + lu_.lastErrorMessage());
  }
}

Eigen::VectorXd SparseSolver::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = lu_.solve(rhs);
  const double rn = rhs.norm();
  if (!x.allFinite() || (matrix_ * x - rhs).norm() > tolerance_ * std::max(rn, 1e-300)) {
    if (rn == 0.0 && x.allFinite()) return x;
    throw SolverDivergence("sparse linear solve did not reach tolerance");
  }
  return x;
}

LinearizedSteps::LinearizedSteps(const ProblemSpec& spec, const Trajectory& base)
    : spec_(spec),
      base_(base),
      steps_(spec.time.steps),
      cells_(spec.grid.size()),
      dt_(spec.time.dt()) {
  if (base.theta.rows() != cells_ || base.theta.cols() != steps_ + 1 ||
      base.phi.cols() != steps_ + 1 || base.mu.cols() != steps_) {
    throw ShapeMismatch("base trajectory does not match the problem grids");
  }
}

Eigen::SparseMatrix<double> LinearizedSteps::matrix(int level) const {
  Field slope(cells_);
  const auto& pot = spec_.potential;
  for (Eigen::Index i = 0; i < cells_; ++i) {
    slope(i) = pot.monotone_prime(base_.phi(i, level));
  }
  return step_jacobian(spec_.grid, dt_, spec_.physics, slope);
}

Eigen::VectorXd LinearizedSteps::apply_history(int level, const Field& theta,
                                               const Field& phi) const {
  const Eigen::Index n = cells_;
  const auto& pot = spec_.potential;
  const double tau = spec_.physics.tau;
  Eigen::VectorXd out(3 * n);
  out.segment(0, n) = theta + spec_.physics.latent * phi;
  out.segment(n, n) = phi;
  for (Eigen::Index i = 0; i < n; ++i) {
    out(2 * n + i) = -tau * phi(i) + dt_ * pot.pi_prime(base_.phi(i, level)) * phi(i);
  }
  return out;
}

void LinearizedSteps::apply_history_transpose(int level, const Eigen::VectorXd& y,
                                              Field& theta_out, Field& phi_out) const {
  const Eigen::Index n = cells_;
  const auto& pot = spec_.potential;
  const double tau = spec_.physics.tau;
  theta_out = y.segment(0, n);
  phi_out.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi_out(i) = spec_.physics.latent * y(i) + y(n + i) - tau * y(2 * n + i) +
                 dt_ * pot.pi_prime(base_.phi(i, level)) * y(2 * n + i);
  }
}

}  // namespace detail

namespace {

struct StepContext {
  const Grid& grid;
  const GeneralizedProblem& problem;
  double dt;
  bool exact_singular;
};

double perturbation(const GeneralizedProblem& p, double phi_old) {
  return p.mode == Nonlinearity::full ? p.potential.pi(phi_old) : phi_old;
}

// dt-scaled residual of one step; see step_operator.hpp.
Eigen::VectorXd step_residual(const StepContext& ctx, const Eigen::VectorXd& x,
                              const Field& theta_old, const Field& phi_old, const Field& source,
                              const Field& lambda_old) {
  const Eigen::Index n = ctx.grid.size();
  const auto& a = ctx.grid.stiffness();
  const auto& phys = ctx.problem.physics;
  const double dt = ctx.dt;
  const auto theta = x.segment(0, n);
  const auto phi = x.segment(n, n);
  const auto mu = x.segment(2 * n, n);

  Eigen::VectorXd f(3 * n);
  f.segment(0, n) = (theta - theta_old) + phys.latent * (phi - phi_old) + dt * (a * theta) -
                    dt * source;
  f.segment(n, n) = (phi - phi_old) + dt * (a * mu);
  const Field a_phi = a * phi;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mono =
        ctx.problem.mode == Nonlinearity::full ? ctx.problem.potential.monotone(phi(i)) : 0.0;
    f(2 * n + i) = dt * mu(i) - phys.tau * (phi(i) - phi_old(i)) - dt * a_phi(i) - dt * mono -
                   dt * lambda_old(i) * perturbation(ctx.problem, phi_old(i)) +
                   dt * phys.coupling * theta(i);
  }
  return f;
}

Field monotone_slope(const StepContext& ctx, const Eigen::VectorXd& x) {
  const Eigen::Index n = ctx.grid.size();
  Field s = Field::Zero(n);
  if (ctx.problem.mode == Nonlinearity::full) {
    for (Eigen::Index i = 0; i < n; ++i) {
      s(i) = ctx.problem.potential.monotone_prime(x(n + i));
    }
  }
  return s;
}

// Largest step in [0, 1] keeping phi strictly inside D(beta).
double boundary_step(const StepContext& ctx, const Eigen::VectorXd& x, const Eigen::VectorXd& dx,
                     double fraction) {
  if (!ctx.exact_singular) return 1.0;
  const Eigen::Index n = ctx.grid.size();
  const auto& dom = ctx.problem.potential.domain();
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = x(n + i);
    const double d = dx(n + i);
    if (d > 0.0 && std::isfinite(dom.hi)) {
      alpha = std::min(alpha, fraction * (dom.hi - phi) / d);
    } else if (d < 0.0 && std::isfinite(dom.lo)) {
      alpha = std::min(alpha, fraction * (dom.lo - phi) / d);
    }
  }
  return alpha;
}

}  // namespace

Trajectory solve_generalized(const Grid& grid, const TimeGrid& time,
                             const GeneralizedProblem& problem, const SolverOptions& options) {
  const Eigen::Index n = grid.size();
  const int nt = time.steps;
  const double dt = time.dt();
  if (nt < 1 || !(dt > 0.0)) throw ConfigError("time grid needs positive steps and horizon");
  if (problem.init.theta0.size() != n || problem.init.phi0.size() != n) {
    throw ShapeMismatch("initial data does not match grid");
  }
  if (problem.source.rows() != n || problem.source.cols() != nt) {
    throw ShapeMismatch("source must be cells x Nt");
  }
  const bool unit_lambda = problem.coefficient.size() == 0;
  if (!unit_lambda && (problem.coefficient.rows() != n || problem.coefficient.cols() != nt + 1)) {
    throw ShapeMismatch("coefficient must be cells x (Nt+1)");
  }
  const auto& pot = problem.potential;
  const bool exact_singular =
      problem.mode == Nonlinearity::full && pot.singular() && pot.yosida_eps() == 0.0;
  if (exact_singular) {
    if (problem.physics.tau == 0.0) {
      throw ConfigError("singular potential in exact mode requires tau > 0");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!pot.domain().contains(problem.init.phi0(i))) {
        throw ConfigError("initial phase outside D(beta)");
      }
    }
  }

  const StepContext ctx{grid, problem, dt, exact_singular};
  const auto& newton = options.newton;

  Trajectory traj;
  traj.theta.resize(n, nt + 1);
  traj.phi.resize(n, nt + 1);
  traj.mu.resize(n, nt);
  traj.source = problem.source;
  traj.theta.col(0) = problem.init.theta0;
  traj.phi.col(0) = problem.init.phi0;

  detail::SparseSolver solver(options.linear_tolerance);
  const Field ones = Field::Ones(n);

  Eigen::VectorXd x(3 * n);
  for (int step = 0; step < nt; ++step) {
    const Field theta_old = traj.theta.col(step);
    const Field phi_old = traj.phi.col(step);
    const Field source = problem.source.col(step);
    const Field lambda_old = unit_lambda ? ones : Field(problem.coefficient.col(step));

    x.segment(0, n) = theta_old;
    x.segment(n, n) = phi_old;
    x.segment(2 * n, n) = step > 0 ? Field(traj.mu.col(step - 1)) : Field::Zero(n);

    Eigen::VectorXd f = step_residual(ctx, x, theta_old, phi_old, source, lambda_old);
    double res = f.lpNorm<Eigen::Infinity>();

    // One Newton update; with `damp` the step is halved until the residual
    // does not increase. Returns false if no acceptable step was found.
    auto update = [&](bool damp) {
      ++traj.newton_iterations;
      solver.factorize(detail::step_jacobian(grid, dt, problem.physics, monotone_slope(ctx, x)));
      const Eigen::VectorXd dx = solver.solve(-f);
      double alpha = boundary_step(ctx, x, dx, newton.boundary_fraction);
      if (!(alpha > 1e-12)) {
        throw DomainEscape("Newton update cannot stay inside D(beta)");
      }
      Eigen::VectorXd trial = x + alpha * dx;
      Eigen::VectorXd f_trial = step_residual(ctx, trial, theta_old, phi_old, source, lambda_old);
      double res_trial = f_trial.lpNorm<Eigen::Infinity>();
      for (int halvings = 0; damp && !(res_trial <= res) && halvings < 30; ++halvings) {
        alpha *= 0.5;
        trial = x + alpha * dx;
        f_trial = step_residual(ctx, trial, theta_old, phi_old, source, lambda_old);
        res_trial = f_trial.lpNorm<Eigen::Infinity>();
      }
      if (!(res_trial <= res)) return false;
      x = std::move(trial);
      f = std::move(f_trial);
      res = res_trial;
      return true;
    };

    int it = 0;
    while (res > newton.tolerance) {
      if (it++ >= newton.max_iterations || !update(true)) {
        std::ostringstream msg;
        msg << "Newton did not converge at step " << step + 1 << " (residual " << res << ")";
        throw NewtonDivergence(msg.str());
      }
    }
    // A final undamped update drives the residual to round-off so that
    // difference quotients of the discrete map stay clean.
    if (res > 1e-3 * newton.tolerance) update(false);

    traj.theta.col(step + 1) = x.segment(0, n);
    traj.phi.col(step + 1) = x.segment(n, n);
    traj.mu.col(step) = x.segment(2 * n, n);
  }
  return traj;
}

Trajectory solve_state(const SpaceTimeField& control, const ProblemSpec& spec) {
  GeneralizedProblem problem;
  problem.source = control;
  problem.mode = Nonlinearity::full;
  problem.physics = spec.physics;
  problem.potential = spec.potential;
  problem.init = spec.init;
  return solve_generalized(spec.grid, spec.time, problem, spec.solver);
}

TangentTrajectory solve_tangent(const SpaceTimeField& direction, const Trajectory& base,
                                const ProblemSpec& spec) {
  const Eigen::Index n = spec.grid.size();
  const int nt = spec.time.steps;
  if (direction.rows() != n || direction.cols() != nt) {
    throw ShapeMismatch("tangent direction must be cells x Nt");
  }
  detail::LinearizedSteps steps(spec, base);
  detail::SparseSolver solver(spec.solver.linear_tolerance);
  const double dt = steps.dt();

  TangentTrajectory out;
  out.theta = SpaceTimeField::Zero(n, nt + 1);
  out.phi = SpaceTimeField::Zero(n, nt + 1);
  out.mu = SpaceTimeField::Zero(n, nt);
  for (int step = 0; step < nt; ++step) {
    Eigen::VectorXd rhs =
        steps.apply_history(step, out.theta.col(step), out.phi.col(step));
    rhs.segment(0, n) += dt * direction.col(step);
    solver.factorize(steps.matrix(step + 1));
    const Eigen::VectorXd x = solver.solve(rhs);
    out.theta.col(step + 1) = x.segment(0, n);
    out.phi.col(step + 1) = x.segment(n, n);
    out.mu.col(step) = x.segment(2 * n, n);
  }
  return out;
}

double energy(const Grid& grid, const Potential& potential, const Field& phi) {
  double local = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    local += potential.monotone_hat(phi(i)) + potential.pi_hat(phi(i));
  }
  return 0.5 * gradient_norm_squared(grid, phi) + local * grid.cell_measure();
}

}  // namespace pfc
