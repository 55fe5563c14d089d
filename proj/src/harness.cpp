#include "pfc/harness.hpp"

#include <Eigen/SparseCholesky>

#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

namespace pfc {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kFrechetNoiseUlps = 256.0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class ByteSink {
 public:
  void add(double v) { append(&v, sizeof v); }
  void add(long v) { append(&v, sizeof v); }
  void add(const std::string& s) {
    add(static_cast<long>(s.size()));
    bytes_ += s;
  }
  void add(const Eigen::MatrixXd& m) {
    add(static_cast<long>(m.rows()));
    add(static_cast<long>(m.cols()));
    append(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  const std::string& bytes() const { return bytes_; }

 private:
  void append(const void* p, std::size_t n) { bytes_.append(static_cast<const char*>(p), n); }
  std::string bytes_;
};

// Solve (I + s A) x = b columnwise.
SpaceTimeField smooth(const Grid& grid, const SpaceTimeField& raw, double s) {
  if (s <= 0.0) return raw;
  Eigen::SparseMatrix<double> m = s * grid.stiffness();
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.coeffRef(i, i) += 1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(m);
  if (ldlt.info() != Eigen::Success) throw SolverDivergence("smoothing factorization failed");
  SpaceTimeField out(raw.rows(), raw.cols());
  for (Eigen::Index k = 0; k < raw.cols(); ++k) out.col(k) = ldlt.solve(Field(raw.col(k)));
  return out;
}

// Piecewise constant prolongation of a cell field onto a grid with doubled
// resolution per axis.
Field prolong(const Grid& coarse, const Grid& fine, const Field& f) {
  Field out(fine.size());
  const int fx = fine.cells(0);
  const int cx = coarse.cells(0);
  for (Eigen::Index c = 0; c < fine.size(); ++c) {
    const Eigen::Index i = c % fx;
    const Eigen::Index j = c / fx;
    const Eigen::Index ci = i / 2;
    const Eigen::Index cj = coarse.dim() == 2 ? j / 2 : 0;
    out(c) = f(ci + static_cast<Eigen::Index>(cx) * cj);
  }
  return out;
}

SpaceTimeField prolong_levels(const Grid& coarse, const Grid& fine, const SpaceTimeField& f) {
  // Running levels 1..Nt map to 2k-1, 2k of the refined grid.
  SpaceTimeField out(fine.size(), 2 * f.cols());
  for (Eigen::Index k = 0; k < f.cols(); ++k) {
    const Field p = prolong(coarse, fine, f.col(k));
    out.col(2 * k) = p;
    out.col(2 * k + 1) = p;
  }
  return out;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string key(const char* prefix, std::size_t i) {
  std::ostringstream out;
  out << prefix << "[" << i << "]";
  return out.str();
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

std::string digest(const ProblemSpec& spec) {
  ByteSink sink;
  sink.add(static_cast<long>(spec.grid.dim()));
  for (int a = 0; a < spec.grid.dim(); ++a) {
    sink.add(static_cast<long>(spec.grid.cells(a)));
    sink.add(spec.grid.length(a));
  }
  sink.add(spec.time.horizon);
  sink.add(static_cast<long>(spec.time.steps));
  sink.add(spec.physics.tau);
  sink.add(spec.physics.latent);
  sink.add(spec.physics.coupling);
  sink.add(spec.potential.name());
  sink.add(spec.potential.c());
  sink.add(spec.potential.yosida_eps());
  sink.add(spec.init.theta0);
  sink.add(spec.init.phi0);
  for (double k : spec.cost.kappa) sink.add(k);
  sink.add(spec.cost.theta_target);
  sink.add(spec.cost.phi_target);
  sink.add(spec.cost.theta_final);
  sink.add(spec.cost.phi_final);
  sink.add(spec.box.lower);
  sink.add(spec.box.upper);
  sink.add(spec.solver.newton.tolerance);
  sink.add(static_cast<long>(spec.solver.newton.max_iterations));
  sink.add(spec.solver.linear_tolerance);
  return fnv1a_hex(sink.bytes());
}

ProblemSpec desk_problem(DeskRegime regime, int cells, int steps) {
  using std::numbers::pi;
  ProblemSpec spec;
  spec.grid = Grid::line(cells);
  spec.time = TimeGrid{1.0, steps};
  spec.physics.latent = 1.0;
  spec.physics.coupling = 1.0;
  if (regime == DeskRegime::regular) {
    spec.physics.tau = 0.0;
    spec.potential = Potential::regular();
  } else {
    spec.physics.tau = 1.0;
    spec.potential = Potential::logarithmic(2.0, 1e-3);
  }
  spec.init.theta0 = sample(spec.grid, [](double x, double) { return 0.2 * std::cos(pi * x); });
  spec.init.phi0 =
      sample(spec.grid, [](double x, double) { return 0.1 + 0.4 * std::cos(pi * x); });

  spec.cost = CostSpec::zeros(spec.grid, spec.time);
  spec.cost.kappa = {1.0, 1.0, 0.5, 0.5};
  for (int k = 0; k < steps; ++k) {
    const double t = spec.time.time(k + 1);
    spec.cost.theta_target.col(k) = sample(spec.grid, [t](double x, double) {
      return 0.5 + 0.1 * std::cos(pi * x) * std::sin(pi * t);
    });
    spec.cost.phi_target.col(k) =
        sample(spec.grid, [](double x, double) { return 0.1 - 0.2 * std::cos(2.0 * pi * x); });
  }
  spec.cost.theta_final =
      sample(spec.grid, [](double x, double) { return -0.3 + 0.1 * std::cos(pi * x); });
  spec.cost.phi_final =
      sample(spec.grid, [](double x, double) { return 0.1 + 0.1 * std::cos(pi * x); });
  spec.box = ControlBox::constant(spec.grid, spec.time, -1.0, 1.0);
  return spec;
}

ProblemSpec refine(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  const Grid& g = spec.grid;
  out.grid = g.dim() == 2 ? Grid::box(2 * g.cells(0), 2 * g.cells(1), g.length(0), g.length(1))
                          : Grid::line(2 * g.cells(0), g.length(0));
  out.time.steps = 2 * spec.time.steps;
  out.init.theta0 = prolong(g, out.grid, spec.init.theta0);
  out.init.phi0 = prolong(g, out.grid, spec.init.phi0);
  out.cost.theta_target = prolong_levels(g, out.grid, spec.cost.theta_target);
  out.cost.phi_target = prolong_levels(g, out.grid, spec.cost.phi_target);
  out.cost.theta_final = prolong(g, out.grid, spec.cost.theta_final);
  out.cost.phi_final = prolong(g, out.grid, spec.cost.phi_final);
  out.box.lower = prolong_levels(g, out.grid, spec.box.lower);
  out.box.upper = prolong_levels(g, out.grid, spec.box.upper);
  return out;
}

SpaceTimeField random_admissible_control(const ProblemSpec& spec, std::uint64_t seed,
                                         double smoothing) {
  std::mt19937_64 rng(seed);
  SpaceTimeField raw(spec.cells(), spec.steps());
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const double lo = spec.box.lower(i, k);
      const double hi = spec.box.upper(i, k);
      raw(i, k) = lo + (hi - lo) * unit_uniform(rng);
    }
  }
  return project_box(smooth(spec.grid, raw, smoothing), spec.box);
}

SpaceTimeField random_direction(const ProblemSpec& spec, std::uint64_t seed, double amplitude,
                                double smoothing) {
  std::mt19937_64 rng(seed);
  SpaceTimeField raw(spec.cells(), spec.steps());
  for (Eigen::Index k = 0; k < raw.cols(); ++k) {
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      raw(i, k) = amplitude * (2.0 * unit_uniform(rng) - 1.0);
    }
  }
  return smooth(spec.grid, raw, smoothing);
}

double y_norm(const Grid& grid, const TimeGrid& time, const SpaceTimeField& a,
              const SpaceTimeField& b) {
  auto part = [&](const SpaceTimeField& f) {
    double max_h = 0.0;
    double sum_v = 0.0;
    for (Eigen::Index k = 0; k < f.cols(); ++k) {
      const auto n = norms(grid, Field(f.col(k)));
      max_h = std::max(max_h, n.h);
      if (k > 0) sum_v += n.v * n.v * time.dt();
    }
    return max_h + std::sqrt(sum_v);
  };
  return part(a) + part(b);
}

SpaceTimeField time_antiderivative(const SpaceTimeField& f, const TimeGrid& time) {
  SpaceTimeField out = SpaceTimeField::Zero(f.rows(), f.cols() + 1);
  for (Eigen::Index k = 0; k < f.cols(); ++k) {
    out.col(k + 1) = out.col(k) + time.dt() * f.col(k);
  }
  return out;
}

double mass_drift(const Grid& grid, const SpaceTimeField& phi) {
  const double m0 = mean(grid, phi.col(0));
  double worst = 0.0;
  for (Eigen::Index k = 1; k < phi.cols(); ++k) {
    worst = std::max(worst, std::abs(mean(grid, phi.col(k)) - m0));
  }
  return worst / (1.0 + std::abs(m0));
}

double fd_directional_derivative(const SpaceTimeField& control, const SpaceTimeField& direction,
                                 const ProblemSpec& spec, double delta) {
  const double plus = reduced_cost(control + delta * direction, spec);
  const double minus = reduced_cost(control - delta * direction, spec);
  return (plus - minus) / (2.0 * delta);
}

FdSweep fd_sweep(const SpaceTimeField& control, const SpaceTimeField& direction,
                 const ProblemSpec& spec) {
  FdSweep sweep;
  const double scale = (control.size() > 0 ? control.cwiseAbs().maxCoeff() : 0.0) + 1.0;
  for (int e = 3; e <= 7; ++e) {
    const double delta = std::pow(10.0, -e) * scale;
    sweep.deltas.push_back(delta);
    sweep.values.push_back(fd_directional_derivative(control, direction, spec, delta));
  }
  // Plateau: the interior point whose two neighbours deviate least.
  double best = std::numeric_limits<double>::infinity();
  std::size_t pick = 1;
  for (std::size_t i = 1; i + 1 < sweep.values.size(); ++i) {
    const double v = sweep.values[i];
    const double spread = std::abs(sweep.values[i - 1] - v) + std::abs(sweep.values[i + 1] - v);
    if (spread < best) {
      best = spread;
      pick = i;
    }
  }
  sweep.delta = sweep.deltas[pick];
  sweep.value = sweep.values[pick];
  return sweep;
}

ProbeReport gradient_check_probe(const ProblemSpec& spec, const SpaceTimeField& control,
                                 int directions, std::uint64_t seed, double fd_tolerance,
                                 double duality_tolerance) {
  const auto start = Clock::now();
  ProbeReport r;
  r.name = "gradcheck";
  r.config_digest = digest(spec);
  r.thresholds["max_fd_relative_error"] = fd_tolerance;
  r.thresholds["max_duality_relative_error"] = duality_tolerance;

  const Trajectory state = solve_state(control, spec);
  const SpaceTimeField gradient = solve_adjoint(state, spec.cost, spec).gradient();
  double worst_fd = 0.0;
  double worst_dual = 0.0;
  for (int d = 0; d < directions; ++d) {
    const SpaceTimeField h = random_direction(spec, seed + static_cast<std::uint64_t>(d));
    const double adjoint_value = space_time_inner(spec, gradient, h);
    const TangentTrajectory tangent = solve_tangent(h, state, spec);
    const double tangent_value = cost_derivative(state, tangent, spec.cost, spec.grid, spec.time);
    const FdSweep sweep = fd_sweep(control, h, spec);

    // Absolute floor keeps J = 0 configurations well defined.
    const double scale = std::max({std::abs(sweep.value), std::abs(tangent_value), 1e-300});
    const double fd_err =
        sweep.value == adjoint_value ? 0.0 : std::abs(adjoint_value - sweep.value) / scale;
    const double dual_err =
        tangent_value == adjoint_value ? 0.0 : std::abs(adjoint_value - tangent_value) / scale;
    worst_fd = std::max(worst_fd, fd_err);
    worst_dual = std::max(worst_dual, dual_err);
    r.measured[key("adjoint_derivative", d)] = adjoint_value;
    r.measured[key("fd_derivative", d)] = sweep.value;
    r.measured[key("fd_delta", d)] = sweep.delta;
    r.measured[key("fd_relative_error", d)] = fd_err;
    r.measured[key("duality_relative_error", d)] = dual_err;
  }
  r.measured["max_fd_relative_error"] = worst_fd;
  r.measured["max_duality_relative_error"] = worst_dual;
  r.measured["mass_drift"] = mass_drift(spec.grid, state.phi);
  r.passed = worst_fd <= fd_tolerance && worst_dual <= duality_tolerance;
  r.runtime_seconds = seconds_since(start);
  return r;
}

ProbeReport frechet_remainder_probe(const ProblemSpec& spec, const SpaceTimeField& control,
                                    const SpaceTimeField& direction,
                                    const std::vector<double>& deltas) {
  const auto start = Clock::now();
  ProbeReport r;
  r.name = "frechet";
  r.config_digest = digest(spec);
  r.thresholds["slope_min"] = 1.8;
  r.thresholds["slope_max"] = 2.2;

  const Trajectory base = solve_state(control, spec);
  const TangentTrajectory tangent = solve_tangent(direction, base, spec);
  // Remainders below a few hundred ulps of the state itself are round-off,
  // not second-order terms, and are left out of the fit.
  const double floor =
      kFrechetNoiseUlps * std::numeric_limits<double>::epsilon() *
      y_norm(spec.grid, spec.time, base.theta, base.phi);
  r.measured["noise_floor"] = floor;
  std::vector<double> log_d, log_r;
  bool all_zero = true;
  double worst_drift = mass_drift(spec.grid, tangent.phi);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double d = deltas[i];
    const Trajectory moved = solve_state(control + d * direction, spec);
    const SpaceTimeField dtheta = moved.theta - base.theta - d * tangent.theta;
    const SpaceTimeField dphi = moved.phi - base.phi - d * tangent.phi;
    const double rem = y_norm(spec.grid, spec.time, dtheta, dphi);
    r.measured[key("delta", i)] = d;
    r.measured[key("remainder", i)] = rem;
    worst_drift = std::max(worst_drift, mass_drift(spec.grid, moved.phi));
    if (rem > 0.0) all_zero = false;
    if (rem > floor) {
      log_d.push_back(std::log(d));
      log_r.push_back(std::log(rem));
    }
  }
  r.measured["mass_drift"] = worst_drift;
  r.measured["points_fitted"] = static_cast<double>(log_d.size());
  if (all_zero) {
    r.notes.push_back("remainder vanishes identically (zero direction)");
    r.measured["slope"] = 0.0;
    r.passed = direction.isZero(0.0);
  } else if (log_d.size() < 3) {
    r.notes.push_back("fewer than three remainders above the noise floor");
    r.passed = false;
  } else {
    const double slope = least_squares_slope(log_d, log_r);
    r.measured["slope"] = slope;
    r.passed = slope >= 1.8 && slope <= 2.2;
  }
  r.runtime_seconds = seconds_since(start);
  return r;
}

namespace {

struct RatioSummary {
  double max_y = 0.0;
  double max_weak = 0.0;
  double min_y = std::numeric_limits<double>::infinity();
  double worst_drift = 0.0;
  int pairs = 0;
};

using ControlPair = std::pair<SpaceTimeField, SpaceTimeField>;

RatioSummary continuous_dependence_ratios(const ProblemSpec& spec,
                                          const std::vector<ControlPair>& pairs) {
  RatioSummary s;
  const auto& grid = spec.grid;
  const auto& time = spec.time;
  for (const auto& [u1, u2] : pairs) {
    const double du = space_time_norm(spec, u1 - u2);
    if (du == 0.0) continue;
    const Trajectory s1 = solve_state(u1, spec);
    const Trajectory s2 = solve_state(u2, spec);
    s.worst_drift = std::max({s.worst_drift, mass_drift(grid, s1.phi), mass_drift(grid, s2.phi)});
    const SpaceTimeField dtheta = s1.theta - s2.theta;
    const SpaceTimeField dphi = s1.phi - s2.phi;
    const double ratio = y_norm(grid, time, dtheta, dphi) / du;

    // Weaker pairing: |theta|_{L2 H} + |1*theta|_{L∞ V} + |phi|_{C0 V'} +
    // |phi|_{L2 V} + tau |phi|_{C0 H} against |1*(u1 - u2)|_{L2 H}.
    const SpaceTimeField int_theta = time_antiderivative(dtheta.rightCols(time.steps), time);
    const SpaceTimeField int_u = time_antiderivative(u1 - u2, time);
    double theta_l2 = 0.0, int_theta_linf = 0.0, phi_star = 0.0, phi_l2v = 0.0, phi_c0h = 0.0,
           int_u_l2 = 0.0;
    for (int n = 0; n <= time.steps; ++n) {
      int_theta_linf = std::max(int_theta_linf, norms(grid, Field(int_theta.col(n))).v);
      const Field p = dphi.col(n);
      phi_star = std::max(phi_star, dual_norm_star(grid, p.array() - mean(grid, p)));
      phi_c0h = std::max(phi_c0h, norms(grid, p).h);
      if (n > 0) {
        theta_l2 += norms(grid, Field(dtheta.col(n))).h * norms(grid, Field(dtheta.col(n))).h *
                    time.dt();
        phi_l2v += norms(grid, p).v * norms(grid, p).v * time.dt();
        const double iu = norms(grid, Field(int_u.col(n))).h;
        int_u_l2 += iu * iu * time.dt();
      }
    }
    const double weak_lhs = std::sqrt(theta_l2) + int_theta_linf + phi_star +
                            std::sqrt(phi_l2v) + spec.physics.tau * phi_c0h;
    const double weak = int_u_l2 > 0.0 ? weak_lhs / std::sqrt(int_u_l2) : 0.0;

    s.max_y = std::max(s.max_y, ratio);
    s.min_y = std::min(s.min_y, ratio);
    s.max_weak = std::max(s.max_weak, weak);
    ++s.pairs;
  }
  return s;
}

}  // namespace

ProbeReport lipschitz_probe(const ProblemSpec& spec, int pairs, std::uint64_t seed) {
  const auto start = Clock::now();
  ProbeReport r;
  r.name = "lipschitz";
  r.config_digest = digest(spec);
  r.thresholds["refinement_factor_max"] = 2.0;
  r.thresholds["refinement_factor_min"] = 0.5;

  // The same pairs are used on both levels: drawn on the coarse grid, then
  // prolonged, so the refined run sees identical controls.
  const ProblemSpec fine_spec = refine(spec);
  std::vector<ControlPair> coarse_pairs, fine_pairs;
  for (int k = 0; k < pairs; ++k) {
    coarse_pairs.emplace_back(random_admissible_control(spec, seed + 2 * k),
                              random_admissible_control(spec, seed + 2 * k + 1));
    fine_pairs.emplace_back(prolong_levels(spec.grid, fine_spec.grid, coarse_pairs.back().first),
                            prolong_levels(spec.grid, fine_spec.grid, coarse_pairs.back().second));
  }
  const RatioSummary coarse = continuous_dependence_ratios(spec, coarse_pairs);
  const RatioSummary fine = continuous_dependence_ratios(fine_spec, fine_pairs);
  r.measured["pairs"] = coarse.pairs;
  r.measured["max_ratio_coarse"] = coarse.max_y;
  r.measured["min_ratio_coarse"] = coarse.min_y;
  r.measured["max_ratio_fine"] = fine.max_y;
  r.measured["min_ratio_fine"] = fine.min_y;
  r.measured["max_weak_ratio_coarse"] = coarse.max_weak;
  r.measured["max_weak_ratio_fine"] = fine.max_weak;
  r.measured["mass_drift"] = std::max(coarse.worst_drift, fine.worst_drift);
  const double factor = coarse.max_y > 0.0 ? fine.max_y / coarse.max_y : 0.0;
  r.measured["refinement_factor"] = factor;
  const bool finite = std::isfinite(coarse.max_y) && std::isfinite(fine.max_y) &&
                      coarse.min_y > 0.0 && fine.min_y > 0.0;
  r.passed = finite && coarse.pairs > 0 && factor <= 2.0 && factor >= 0.5;
  r.runtime_seconds = seconds_since(start);
  return r;
}

ProbeReport yosida_convergence_probe(const ProblemSpec& spec, const SpaceTimeField& control,
                                     const std::vector<double>& eps_ladder) {
  const auto start = Clock::now();
  ProbeReport r;
  r.name = "yosida";
  r.config_digest = digest(spec);
  r.thresholds["mass_drift_max"] = 1e-12;
  if (!spec.potential.singular()) {
    r.applicable = false;
    r.passed = true;
    r.notes.push_back("not applicable: D(beta) is the whole line");
    return r;
  }

  std::vector<Trajectory> runs;
  double worst_drift = 0.0;
  for (double eps : eps_ladder) {
    ProblemSpec s = spec;
    s.potential = spec.potential.with_eps(eps);
    runs.push_back(solve_state(control, s));
    worst_drift = std::max(worst_drift, mass_drift(spec.grid, runs.back().phi));
  }
  bool decreasing = true;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
    const double d = y_norm(spec.grid, spec.time, runs[i + 1].theta - runs[i].theta,
                            runs[i + 1].phi - runs[i].phi);
    r.measured[key("difference", i)] = d;
    if (!(d < previous)) decreasing = false;
    previous = d;
  }

  // |beta_eps(r)| <= |beta(r)| on every value the runs visited inside D(beta).
  const Potential exact = spec.potential.with_eps(0.0);
  double worst_excess = 0.0;
  long checked = 0;
  for (const auto& run : runs) {
    for (Eigen::Index k = 0; k < run.phi.size(); ++k) {
      const double v = run.phi.data()[k];
      if (!exact.domain().contains(v)) continue;
      const double b = std::abs(exact.beta(v));
      for (double eps : eps_ladder) {
        worst_excess = std::max(worst_excess, std::abs(exact.yosida(eps, v)) - b);
      }
      ++checked;
    }
  }
  r.measured["values_checked"] = static_cast<double>(checked);
  r.measured["max_yosida_excess"] = worst_excess;
  r.measured["mass_drift"] = worst_drift;
  r.thresholds["max_yosida_excess"] = 0.0;
  r.passed = decreasing && worst_excess <= 0.0 && worst_drift <= 1e-12;
  r.runtime_seconds = seconds_since(start);
  return r;
}

ProbeReport energy_probe(const ProblemSpec& spec, int steps, double tolerance) {
  const auto start = Clock::now();
  ProbeReport r;
  r.name = "energy";
  r.config_digest = digest(spec);
  r.thresholds["max_scaled_increase"] = tolerance;

  GeneralizedProblem problem;
  problem.physics = spec.physics;
  problem.physics.latent = 0.0;
  problem.physics.coupling = 0.0;
  problem.potential = spec.potential;
  problem.init = spec.init;
  const TimeGrid time{spec.time.horizon, steps};
  problem.source = SpaceTimeField::Zero(spec.cells(), steps);
  const Trajectory traj = solve_generalized(spec.grid, time, problem, spec.solver);

  std::vector<double> e(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) e[n] = energy(spec.grid, spec.potential, traj.phi.col(n));
  const double scale = std::max(1.0, std::abs(e[0]));
  double worst = -std::numeric_limits<double>::infinity();
  int violations = 0;
  for (int n = 0; n < steps; ++n) {
    const double inc = (e[n + 1] - e[n]) / scale;
    worst = std::max(worst, inc);
    if (inc > tolerance) ++violations;
  }
  r.measured["initial_energy"] = e.front();
  r.measured["final_energy"] = e.back();
  r.measured["max_scaled_increase"] = worst;
  r.measured["violations"] = violations;
  r.measured["mass_drift"] = mass_drift(spec.grid, traj.phi);
  r.passed = violations == 0;
  r.runtime_seconds = seconds_since(start);
  return r;
}

ProbeReport separation_probe(const ProblemSpec& spec, int controls, std::uint64_t seed) {
  const auto start = Clock::now();
  ProbeReport r;
  r.name = "separation";
  r.config_digest = digest(spec);
  r.thresholds["min_margin"] = 0.0;
  const auto& dom = spec.potential.domain();
  if (!dom.bounded()) {
    r.applicable = false;
    r.passed = true;
    r.notes.push_back("not applicable: D(beta) is the whole line");
    return r;
  }

  auto margin_of = [&](const SpaceTimeField& phi) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < phi.size(); ++k) {
      m = std::min(m, dom.distance_to_boundary(phi.data()[k]));
    }
    return m;
  };

  double initial_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < spec.init.phi0.size(); ++i) {
    initial_margin = std::min(initial_margin, dom.distance_to_boundary(spec.init.phi0(i)));
  }
  r.measured["initial_margin"] = initial_margin;
  const Trajectory zero_run = solve_state(zero_control(spec), spec);
  r.measured["margin_zero_control"] = margin_of(zero_run.phi);

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double worst_drift = mass_drift(spec.grid, zero_run.phi);
  for (int k = 0; k < controls; ++k) {
    const Trajectory run = solve_state(random_admissible_control(spec, seed + k), spec);
    const double m = margin_of(run.phi);
    r.measured[key("margin", static_cast<std::size_t>(k))] = m;
    lo = std::min(lo, m);
    hi = std::max(hi, m);
    worst_drift = std::max(worst_drift, mass_drift(spec.grid, run.phi));
  }
  lo = std::min(lo, r.measured["margin_zero_control"]);
  r.measured["min_margin"] = lo;
  r.measured["max_margin"] = std::max(hi, r.measured["margin_zero_control"]);
  r.measured["mass_drift"] = worst_drift;
  r.passed = lo > 0.0;
  r.runtime_seconds = seconds_since(start);
  return r;
}

ProbeReport neumann_probe(const Grid& grid, std::uint64_t seed, int samples) {
  const auto start = Clock::now();
  ProbeReport r;
  r.name = "neumann";
  r.thresholds["round_trip_residual"] = 1e-10;
  r.thresholds["symmetry_relative"] = 1e-12;
  std::ostringstream g;
  g << "grid:" << grid.dim() << ":" << grid.cells(0) << ":" << grid.cells(1);
  r.config_digest = fnv1a_hex(g.str());

  std::mt19937_64 rng(seed);
  auto zero_mean_field = [&] {
    Field f(grid.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = 2.0 * unit_uniform(rng) - 1.0;
    f.array() -= mean(grid, f);
    return f;
  };
  const NeumannInverse n_op(grid);
  double round_trip = 0.0, left_inverse = 0.0, symmetry = 0.0, identity = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Field u = zero_mean_field();
    const Field v = zero_mean_field();
    const Field nu = n_op.apply(u);
    const Field nv = n_op.apply(v);
    round_trip = std::max(round_trip, (grid.stiffness() * nu - u).norm() / u.norm());
    const Field au = grid.stiffness() * u;
    left_inverse = std::max(left_inverse, (n_op.apply(au) - u).norm() / u.norm());
    const double uv = inner(grid, u, nv);
    const double vu = inner(grid, v, nu);
    symmetry = std::max(symmetry, std::abs(uv - vu) / std::max(std::abs(uv), std::abs(vu)));
    const double star2 = inner(grid, u, nu);
    identity = std::max(identity, std::abs(star2 - gradient_norm_squared(grid, nu)) / star2);
  }
  r.measured["round_trip_residual"] = round_trip;
  r.measured["left_inverse_error"] = left_inverse;
  r.measured["symmetry_relative"] = symmetry;
  r.measured["dual_norm_identity_relative"] = identity;
  r.passed = round_trip <= 1e-10 && symmetry <= 1e-12 && left_inverse <= 1e-10 &&
             identity <= 1e-12;
  r.runtime_seconds = seconds_since(start);
  return r;
}

std::vector<std::string> probe_names() {
  return {"gradcheck", "frechet", "lipschitz", "yosida", "energy", "separation", "neumann"};
}

ProbeReport run_probe(const std::string& name, const ProblemSpec& spec, std::uint64_t seed) {
  if (name == "gradcheck") {
    return gradient_check_probe(spec, random_admissible_control(spec, seed, 1e-2) * 0.5, 5,
                                seed + 100);
  }
  if (name == "frechet") {
    return frechet_remainder_probe(spec, random_admissible_control(spec, seed) * 0.5,
                                   random_direction(spec, seed + 100));
  }
  if (name == "lipschitz") return lipschitz_probe(spec, 20, seed);
  if (name == "yosida") {
    return yosida_convergence_probe(spec, random_admissible_control(spec, seed) * 0.5);
  }
  if (name == "energy") return energy_probe(spec);
  if (name == "separation") return separation_probe(spec, 10, seed);
  if (name == "neumann") return neumann_probe(spec.grid, seed);
  throw ConfigError("unknown probe '" + name + "'");
}

}  // namespace pfc
