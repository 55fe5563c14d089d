#include "pfc/control.hpp"

#include <algorithm>
#include <cmath>

namespace pfc {

namespace {

void check_control_shape(const ProblemSpec& spec, const SpaceTimeField& u) {
  if (u.rows() != spec.cells() || u.cols() != spec.steps()) {
    throw ShapeMismatch("control must be cells x Nt");
  }
}

struct Evaluation {
  Trajectory state;
  double value;
};

Evaluation evaluate(const SpaceTimeField& u, const ProblemSpec& spec) {
  Trajectory state = solve_state(u, spec);
  const double j = cost(state, spec.cost, spec.grid, spec.time);
  return {std::move(state), j};
}

}  // namespace

double space_time_inner(const ProblemSpec& spec, const SpaceTimeField& a,
                        const SpaceTimeField& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch("space-time fields differ in shape");
  }
  return a.cwiseProduct(b).sum() * spec.grid.cell_measure() * spec.time.dt();
}

double space_time_norm(const ProblemSpec& spec, const SpaceTimeField& a) {
  return std::sqrt(space_time_inner(spec, a, a));
}

double cost(const Trajectory& traj, const CostSpec& c, const Grid& grid, const TimeGrid& time) {
  const int nt = time.steps;
  if (traj.theta.rows() != grid.size() || traj.theta.cols() != nt + 1 ||
      c.theta_target.rows() != grid.size() || c.theta_target.cols() != nt ||
      c.phi_target.cols() != nt || c.theta_final.size() != grid.size() ||
      c.phi_final.size() != grid.size()) {
    throw ShapeMismatch("cost: trajectory and targets differ in shape");
  }
  const double cm = grid.cell_measure();
  const double dt = time.dt();
  const auto& k = c.kappa;
  double running = 0.0;
  if (k[0] != 0.0) {
    running += 0.5 * k[0] * (traj.theta.rightCols(nt) - c.theta_target).squaredNorm();
  }
  if (k[1] != 0.0) {
    running += 0.5 * k[1] * (traj.phi.rightCols(nt) - c.phi_target).squaredNorm();
  }
  double terminal = 0.0;
  if (k[2] != 0.0) terminal += 0.5 * k[2] * (traj.theta.col(nt) - c.theta_final).squaredNorm();
  if (k[3] != 0.0) terminal += 0.5 * k[3] * (traj.phi.col(nt) - c.phi_final).squaredNorm();
  return running * cm * dt + terminal * cm;
}

double cost_derivative(const Trajectory& traj, const TangentTrajectory& tangent,
                       const CostSpec& c, const Grid& grid, const TimeGrid& time) {
  const int nt = time.steps;
  const double cm = grid.cell_measure();
  const double dt = time.dt();
  const auto& k = c.kappa;
  double running = 0.0;
  running += k[0] * (traj.theta.rightCols(nt) - c.theta_target)
                        .cwiseProduct(tangent.theta.rightCols(nt))
                        .sum();
  running += k[1] * (traj.phi.rightCols(nt) - c.phi_target)
                        .cwiseProduct(tangent.phi.rightCols(nt))
                        .sum();
  double terminal = 0.0;
  terminal += k[2] * (traj.theta.col(nt) - c.theta_final).dot(tangent.theta.col(nt));
  terminal += k[3] * (traj.phi.col(nt) - c.phi_final).dot(tangent.phi.col(nt));
  return running * cm * dt + terminal * cm;
}

double reduced_cost(const SpaceTimeField& control, const ProblemSpec& spec) {
  check_control_shape(spec, control);
  return evaluate(control, spec).value;
}

SpaceTimeField reduced_gradient(const SpaceTimeField& control, const ProblemSpec& spec) {
  check_control_shape(spec, control);
  const Trajectory state = solve_state(control, spec);
  return solve_adjoint(state, spec.cost, spec).gradient();
}

SpaceTimeField project_box(const SpaceTimeField& control, const ControlBox& box) {
  if (control.rows() != box.lower.rows() || control.cols() != box.lower.cols() ||
      control.rows() != box.upper.rows() || control.cols() != box.upper.cols()) {
    throw ShapeMismatch("control and box differ in shape");
  }
  return control.cwiseMax(box.lower).cwiseMin(box.upper);
}

double stationarity_residual(const ProblemSpec& spec, const SpaceTimeField& control,
                             const SpaceTimeField& gradient) {
  return space_time_norm(spec, control - project_box(control - gradient, spec.box));
}

BangBangReport bang_bang_classify(const SpaceTimeField& control, const SpaceTimeField& adjoint,
                                  const ControlBox& box, double tolerance) {
  if (control.rows() != adjoint.rows() || control.cols() != adjoint.cols() ||
      control.rows() != box.lower.rows() || control.cols() != box.lower.cols()) {
    throw ShapeMismatch("bang_bang_classify: shapes differ");
  }
  BangBangReport r;
  r.tolerance = tolerance;
  long positive = 0, negative = 0, lower_hits = 0, upper_hits = 0;
  const long total = static_cast<long>(control.size());
  for (Eigen::Index k = 0; k < control.cols(); ++k) {
    for (Eigen::Index i = 0; i < control.rows(); ++i) {
      const double q = adjoint(i, k);
      if (q > tolerance) {
        ++positive;
        if (std::abs(control(i, k) - box.lower(i, k)) <= tolerance) ++lower_hits;
      } else if (q < -tolerance) {
        ++negative;
        if (std::abs(control(i, k) - box.upper(i, k)) <= tolerance) ++upper_hits;
      }
    }
  }
  if (total > 0) {
    r.positive_fraction = static_cast<double>(positive) / total;
    r.negative_fraction = static_cast<double>(negative) / total;
    r.indeterminate_fraction = static_cast<double>(total - positive - negative) / total;
  }
  r.lower_consistency = positive > 0 ? static_cast<double>(lower_hits) / positive : 1.0;
  r.upper_consistency = negative > 0 ? static_cast<double>(upper_hits) / negative : 1.0;
  return r;
}

BangBangReport bang_bang_classify(const SpaceTimeField& control, const SpaceTimeField& adjoint,
                                  const ControlBox& box) {
  const double scale = adjoint.size() > 0 ? adjoint.cwiseAbs().maxCoeff() : 0.0;
  return bang_bang_classify(control, adjoint, box, 1e-8 * scale);
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::stationary:
      return "stationary";
    case Termination::max_iterations:
      return "max_iterations";
    case Termination::line_search_failed:
      return "line_search_failed";
  }
  return "unknown";
}

OptimizeReport optimize(const ProblemSpec& spec, const SpaceTimeField& initial,
                        const OptimizeOptions& options) {
  check_control_shape(spec, initial);
  OptimizeReport report;

  SpaceTimeField u = project_box(initial, spec.box);
  Evaluation current = evaluate(u, spec);
  SpaceTimeField g = solve_adjoint(current.state, spec.cost, spec).gradient();
  double residual = stationarity_residual(spec, u, g);
  report.cost_history.push_back(current.value);
  report.residual_history.push_back(residual);

  double step = options.initial_step;
  report.termination = Termination::max_iterations;
  while (true) {
    if (residual <= options.tolerance) {
      report.termination = Termination::stationary;
      break;
    }
    if (report.iterations >= options.max_iterations) break;

    bool accepted = false;
    SpaceTimeField trial;
    Evaluation next{};
    for (int b = 0; b <= options.max_backtracks; ++b) {
      trial = project_box(u - step * g, spec.box);
      const double move = space_time_norm(spec, trial - u);
      next = evaluate(trial, spec);
      if (next.value <= current.value - options.armijo_sigma / step * move * move) {
        accepted = move > 0.0;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      report.termination = Termination::line_search_failed;
      break;
    }

    SpaceTimeField g_next = solve_adjoint(next.state, spec.cost, spec).gradient();
    const SpaceTimeField du = trial - u;
    const SpaceTimeField dg = g_next - g;
    report.step_history.push_back(step);
    const double curvature = space_time_inner(spec, du, dg);
    step = curvature > 0.0 ? std::clamp(space_time_inner(spec, du, du) / curvature, 1e-10, 1e10)
                           : std::min(2.0 * step, 1e10);

    u = std::move(trial);
    g = std::move(g_next);
    current = std::move(next);
    residual = stationarity_residual(spec, u, g);
    ++report.iterations;
    report.cost_history.push_back(current.value);
    report.residual_history.push_back(residual);
  }

  // A node whose |q| is below tol / sqrt(cell_measure * dt) can sit inside
  // the box without pushing the residual over tol, so that is the finest
  // sign resolution the stopping test supports.
  const double node_tol =
      options.tolerance / std::sqrt(spec.grid.cell_measure() * spec.time.dt());
  report.bang_bang = bang_bang_classify(u, g, spec.box, node_tol);
  report.control = std::move(u);
  report.gradient = std::move(g);
  return report;
}

}  // namespace pfc
