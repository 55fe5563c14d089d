#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pfc/dynamics.hpp"
#include "pfc/harness.hpp"

using namespace pfc;

namespace {

GeneralizedProblem base_problem(const Grid& g, const TimeGrid& t) {
  GeneralizedProblem p;
  p.source = SpaceTimeField::Zero(g.size(), t.steps);
  p.init.theta0 = Field::Zero(g.size());
  p.init.phi0 = Field::Zero(g.size());
  return p;
}

Field random_field(Eigen::Index n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Field f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = d(rng);
  return f;
}

// Step equations in their undivided form, evaluated on a finished trajectory.
double step_defect(const Grid& g, const TimeGrid& t, const GeneralizedProblem& p,
                   const Trajectory& tr) {
  const auto& a = g.stiffness();
  const double dt = t.dt();
  double worst = 0.0;
  for (int n = 0; n < t.steps; ++n) {
    const Field th = tr.theta.col(n + 1), ph = tr.phi.col(n + 1), mu = tr.mu.col(n);
    const Field th0 = tr.theta.col(n), ph0 = tr.phi.col(n);
    const Field e1 = (th - th0) / dt + p.physics.latent * (ph - ph0) / dt + a * th -
                     Field(p.source.col(n));
    const Field e2 = (ph - ph0) / dt + a * mu;
    Field e3 = p.physics.tau * (ph - ph0) / dt + a * ph - p.physics.coupling * th - mu;
    for (Eigen::Index i = 0; i < e3.size(); ++i) {
      e3(i) += p.potential.monotone(ph(i)) + p.potential.pi(ph0(i));
    }
    worst = std::max({worst, e1.cwiseAbs().maxCoeff() * dt, e2.cwiseAbs().maxCoeff() * dt,
                      e3.cwiseAbs().maxCoeff() * dt});
  }
  return worst;
}

}  // namespace

TEST_CASE("zero is a fixed point") {
  const Grid g = Grid::line(16);
  const TimeGrid t{1.0, 8};
  const Trajectory tr = solve_generalized(g, t, base_problem(g, t));
  CHECK(tr.theta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(tr.phi.cwiseAbs().maxCoeff() == 0.0);
  CHECK(tr.mu.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spatially constant data stay constant") {
  const Grid g = Grid::box(6, 5);
  const TimeGrid t{0.5, 10};
  for (const Potential& pot : {Potential::regular(), Potential::logarithmic(2.0, 1e-3)}) {
    GeneralizedProblem p = base_problem(g, t);
    p.potential = pot;
    p.physics.tau = 0.5;
    p.init.theta0.setConstant(0.3);
    p.init.phi0.setConstant(-0.4);
    const Trajectory tr = solve_generalized(g, t, p);
    CHECK((tr.theta.array() - 0.3).abs().maxCoeff() <= 1e-11);
    CHECK((tr.phi.array() + 0.4).abs().maxCoeff() <= 1e-11);
    // mu = beta(m) + pi(m) - gamma a
    const double mu = pot.monotone(-0.4) + pot.pi(-0.4) - 0.3;
    CHECK((tr.mu.array() - mu).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("step equations hold and mass is conserved") {
  std::mt19937_64 rng(17);
  for (const Grid& g : {Grid::line(24), Grid::box(8, 7, 1.0, 1.5)}) {
    const TimeGrid t{1.0, 12};
    for (int regime = 0; regime < 2; ++regime) {
      GeneralizedProblem p = base_problem(g, t);
      if (regime == 1) {
        p.potential = Potential::logarithmic(2.0, 1e-3);
        p.physics.tau = 1.0;
      }
      p.init.phi0 = random_field(g.size(), rng, -0.6, 0.6);
      p.init.theta0 = random_field(g.size(), rng, -1.0, 1.0);
      for (int k = 0; k < t.steps; ++k) p.source.col(k) = random_field(g.size(), rng, -2.0, 2.0);
      const Trajectory tr = solve_generalized(g, t, p);
      CHECK(step_defect(g, t, p, tr) <= 1e-10);
      CHECK(mass_drift(g, tr.phi) <= 1e-12);
      CHECK(tr.phi.allFinite());
    }
  }
}

TEST_CASE("coefficient and linear mode") {
  const Grid g = Grid::line(12);
  const TimeGrid t{1.0, 6};
  GeneralizedProblem p = base_problem(g, t);
  p.init.phi0 = sample(g, [](double x, double) { return 0.3 * std::cos(std::numbers::pi * x); });
  p.coefficient = SpaceTimeField::Constant(g.size(), t.steps + 1, 1.0);
  const Trajectory with_ones = solve_generalized(g, t, p);
  p.coefficient.resize(0, 0);
  const Trajectory implicit_ones = solve_generalized(g, t, p);
  CHECK(with_ones.phi == implicit_ones.phi);

  // In linear mode the third equation is mu = tau dphi - lap phi + lambda phi_old - gamma theta.
  p.mode = Nonlinearity::linear;
  p.coefficient = SpaceTimeField::Constant(g.size(), t.steps + 1, 2.0);
  const Trajectory lin = solve_generalized(g, t, p);
  const auto& a = g.stiffness();
  for (int n = 0; n < t.steps; ++n) {
    const Field expected = a * Field(lin.phi.col(n + 1)) + 2.0 * Field(lin.phi.col(n)) -
                           Field(lin.theta.col(n + 1));
    CHECK((Field(lin.mu.col(n)) - expected).cwiseAbs().maxCoeff() <= 1e-9);
  }
  CHECK(mass_drift(g, lin.phi) <= 1e-12);

  p.coefficient = SpaceTimeField::Constant(g.size(), t.steps, 1.0);
  CHECK_THROWS_AS(solve_generalized(g, t, p), ShapeMismatch);
}

TEST_CASE("solve_state equals solve_generalized with unit coefficient") {
  const ProblemSpec spec = desk_problem(DeskRegime::logarithmic, 16, 8);
  const SpaceTimeField u = random_admissible_control(spec, 3);
  GeneralizedProblem p;
  p.source = u;
  p.physics = spec.physics;
  p.potential = spec.potential;
  p.init = spec.init;
  const Trajectory a = solve_state(u, spec);
  const Trajectory b = solve_generalized(spec.grid, spec.time, p, spec.solver);
  CHECK(a.theta == b.theta);
  CHECK(a.phi == b.phi);
  CHECK(a.mu == b.mu);
}

TEST_CASE("logarithmic runs stay strictly inside (-1, 1)") {
  ProblemSpec spec = desk_problem(DeskRegime::logarithmic, 32, 16);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Trajectory tr = solve_state(random_admissible_control(spec, s), spec);
    CHECK(tr.phi.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("exact singular mode") {
  ProblemSpec spec = desk_problem(DeskRegime::logarithmic, 16, 8);
  spec.potential = spec.potential.with_eps(0.0);
  spec.init.phi0 = sample(spec.grid, [](double x, double) { return 0.9 * std::cos(std::numbers::pi * x); });
  const Trajectory tr = solve_state(SpaceTimeField::Constant(16, 8, 1.0), spec);
  CHECK(tr.phi.cwiseAbs().maxCoeff() < 1.0);
  CHECK(mass_drift(spec.grid, tr.phi) <= 1e-12);

  // The regularized trajectory approaches the exact one as eps shrinks.
  ProblemSpec reg = spec;
  reg.potential = spec.potential.with_eps(1e-5);
  const Trajectory tr_reg = solve_state(SpaceTimeField::Constant(16, 8, 1.0), reg);
  CHECK((tr_reg.phi - tr.phi).cwiseAbs().maxCoeff() < 1e-3);

  spec.physics.tau = 0.0;
  CHECK_THROWS_AS(solve_state(zero_control(spec), spec), ConfigError);
  spec.physics.tau = 1.0;
  spec.init.phi0(3) = 1.0;
  CHECK_THROWS_AS(solve_state(zero_control(spec), spec), ConfigError);
}

TEST_CASE("Newton failure is reported") {
  ProblemSpec spec = desk_problem(DeskRegime::regular, 16, 4);
  spec.solver.newton.max_iterations = 1;
  spec.solver.newton.tolerance = 1e-300;
  CHECK_THROWS_AS(solve_state(random_admissible_control(spec, 1), spec), NewtonDivergence);
}

TEST_CASE("shape errors") {
  const ProblemSpec spec = desk_problem(DeskRegime::regular, 16, 4);
  CHECK_THROWS_AS(solve_state(SpaceTimeField::Zero(16, 5), spec), ShapeMismatch);
  const Trajectory tr = solve_state(zero_control(spec), spec);
  CHECK_THROWS_AS(solve_tangent(SpaceTimeField::Zero(15, 4), tr, spec), ShapeMismatch);
}

TEST_CASE("tangent solver") {
  for (DeskRegime regime : {DeskRegime::regular, DeskRegime::logarithmic}) {
    const ProblemSpec spec = desk_problem(regime, 24, 12);
    const SpaceTimeField u = random_admissible_control(spec, 5);
    const SpaceTimeField h = random_direction(spec, 6);
    const Trajectory base = solve_state(u, spec);

    const TangentTrajectory zero = solve_tangent(zero_control(spec), base, spec);
    CHECK(zero.theta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.phi.cwiseAbs().maxCoeff() == 0.0);

    const TangentTrajectory t1 = solve_tangent(h, base, spec);
    const TangentTrajectory t2 = solve_tangent(2.0 * h, base, spec);
    CHECK((t2.phi - 2.0 * t1.phi).norm() <= 1e-12 * t2.phi.norm());
    CHECK((t2.theta - 2.0 * t1.theta).norm() <= 1e-12 * t2.theta.norm());

    // Tangent mass vanishes at every level.
    for (int n = 0; n <= spec.steps(); ++n) {
      CHECK(std::abs(mean(spec.grid, t1.phi.col(n))) <= 1e-13 * (1.0 + t1.phi.cwiseAbs().maxCoeff()));
    }

    // First-order consistency: difference quotient error is O(delta).
    std::vector<double> ld, le;
    for (double d : {1e-1, 1e-2, 1e-3}) {
      const Trajectory moved = solve_state(u + d * h, spec);
      const double e = y_norm(spec.grid, spec.time, (moved.theta - base.theta) / d - t1.theta,
                              (moved.phi - base.phi) / d - t1.phi);
      ld.push_back(std::log(d));
      le.push_back(std::log(e));
    }
    const double slope = (le.back() - le.front()) / (ld.back() - ld.front());
    CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("energy decays in the decoupled limit") {
  std::mt19937_64 rng(23);
  for (int regime = 0; regime < 2; ++regime) {
    const Grid g = Grid::line(32);
    const TimeGrid t{1.0, 128};
    GeneralizedProblem p = base_problem(g, t);
    p.physics.latent = 0.0;
    p.physics.coupling = 0.0;
    if (regime == 1) {
      p.potential = Potential::logarithmic(2.0, 1e-3);
      p.physics.tau = 1.0;
    }
    p.init.phi0 = random_field(g.size(), rng, -0.9, 0.9);
    const Trajectory tr = solve_generalized(g, t, p);
    double prev = energy(g, p.potential, tr.phi.col(0));
    for (int n = 1; n <= t.steps; ++n) {
      const double e = energy(g, p.potential, tr.phi.col(n));
      CHECK(e <= prev + 1e-10 * std::max(1.0, std::abs(prev)));
      prev = e;
    }
  }
}

TEST_CASE("energy of an equilibrium is constant") {
  const Grid g = Grid::line(16);
  const TimeGrid t{1.0, 16};
  GeneralizedProblem p = base_problem(g, t);
  p.physics.latent = 0.0;
  p.physics.coupling = 0.0;
  p.init.phi0.setConstant(1.0);  // minimum of the regular double well
  const Trajectory tr = solve_generalized(g, t, p);
  for (int n = 0; n <= t.steps; ++n) {
    CHECK(energy(g, p.potential, tr.phi.col(n)) == doctest::Approx(0.0).scale(1.0));
  }
}
