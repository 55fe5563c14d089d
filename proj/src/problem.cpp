#include "pfc/problem.hpp"

#include <sstream>

namespace pfc {

CostSpec CostSpec::zeros(const Grid& grid, const TimeGrid& time) {
  CostSpec c;
  c.theta_target = SpaceTimeField::Zero(grid.size(), time.steps);
  c.phi_target = SpaceTimeField::Zero(grid.size(), time.steps);
  c.theta_final = Field::Zero(grid.size());
  c.phi_final = Field::Zero(grid.size());
  return c;
}

ControlBox ControlBox::constant(const Grid& grid, const TimeGrid& time, double lo, double hi) {
  return {SpaceTimeField::Constant(grid.size(), time.steps, lo),
          SpaceTimeField::Constant(grid.size(), time.steps, hi)};
}

SpaceTimeField zero_control(const ProblemSpec& spec) {
  return SpaceTimeField::Zero(spec.cells(), spec.steps());
}

namespace {

void check_shape(std::vector<std::string>& out, const char* name, const SpaceTimeField& m,
                 Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << name << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x"
        << m.cols();
    out.push_back(msg.str());
  } else if (!m.allFinite()) {
    out.push_back(std::string(name) + ": non-finite entries");
  }
}

void check_shape(std::vector<std::string>& out, const char* name, const Field& f,
                 Eigen::Index rows) {
  if (f.size() != rows) {
    std::ostringstream msg;
    msg << name << ": expected " << rows << " cells, got " << f.size();
    out.push_back(msg.str());
  } else if (!f.allFinite()) {
    out.push_back(std::string(name) + ": non-finite entries");
  }
}

}  // namespace

std::vector<std::string> ProblemSpec::violations() const {
  std::vector<std::string> out;
  const Eigen::Index n = grid.size();
  const int nt = time.steps;

  if (nt < 1) out.push_back("time.steps must be positive");
  if (!(time.horizon > 0.0) || !std::isfinite(time.horizon)) {
    out.push_back("time.horizon must be positive");
  }
  if (!(physics.tau >= 0.0)) out.push_back("physics.tau must be >= 0");
  if (!(physics.latent > 0.0)) out.push_back("physics.latent must be > 0");
  if (!(physics.coupling > 0.0)) out.push_back("physics.coupling must be > 0");
  if (!(potential.yosida_eps() >= 0.0)) out.push_back("potential.yosida_eps must be >= 0");
  if (potential.singular() && potential.yosida_eps() == 0.0 && physics.tau == 0.0) {
    out.push_back(
        "singular potential evaluated exactly (yosida_eps = 0) requires tau > 0: "
        "either D(beta) is the whole line or tau > 0");
  }

  check_shape(out, "init.theta0", init.theta0, n);
  check_shape(out, "init.phi0", init.phi0, n);
  if (init.phi0.size() == n && init.phi0.allFinite()) {
    const auto& dom = potential.domain();
    if (potential.yosida_eps() == 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!dom.contains(init.phi0(i))) {
          std::ostringstream msg;
          msg << "init.phi0: cell " << i << " value " << init.phi0(i) << " outside D(beta)";
          out.push_back(msg.str());
          break;
        }
      }
    }
    const double m0 = mean(grid, init.phi0);
    if (!dom.contains(m0)) {
      std::ostringstream msg;
      msg << "init.phi0: mean " << m0 << " not inside D(beta)";
      out.push_back(msg.str());
    }
  }

  // All-zero weights are accepted: J vanishes and every control is optimal.
  for (std::size_t i = 0; i < cost.kappa.size(); ++i) {
    if (!(cost.kappa[i] >= 0.0)) {
      out.push_back("cost.kappa[" + std::to_string(i + 1) + "] must be >= 0");
    }
  }
  check_shape(out, "cost.theta_target", cost.theta_target, n, nt);
  check_shape(out, "cost.phi_target", cost.phi_target, n, nt);
  check_shape(out, "cost.theta_final", cost.theta_final, n);
  check_shape(out, "cost.phi_final", cost.phi_final, n);

  check_shape(out, "box.lower", box.lower, n, nt);
  check_shape(out, "box.upper", box.upper, n, nt);
  if (box.lower.rows() == n && box.upper.rows() == n && box.lower.cols() == nt &&
      box.upper.cols() == nt) {
    for (int k = 0; k < nt; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (box.lower(i, k) > box.upper(i, k)) {
          std::ostringstream msg;
          msg << "box: u_min > u_max at cell " << i << ", level " << (k + 1) << " ("
              << box.lower(i, k) << " > " << box.upper(i, k) << ")";
          out.push_back(msg.str());
        }
      }
    }
  }

  if (!(solver.newton.tolerance > 0.0)) out.push_back("solver.newton.tolerance must be > 0");
  if (solver.newton.max_iterations < 1) out.push_back("solver.newton.max_iterations must be >= 1");
  if (!(solver.linear_tolerance > 0.0)) out.push_back("solver.linear_tolerance must be > 0");
  return out;
}

void ProblemSpec::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::ostringstream msg;
  msg << "invalid problem (" << v.size() << " violation" << (v.size() > 1 ? "s" : "") << "):";
  for (const auto& line : v) msg << "\n  - " << line;
  throw ValidationError(msg.str());
}

}  // namespace pfc
