#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pfc/control.hpp"

namespace pfc {

/// Outcome of one verification probe. `measured` and `thresholds` are keyed
/// by quantity name; thresholds live next to what they bound.
struct ProbeReport {
  std::string name;
  std::string config_digest;
  std::map<std::string, double> measured;
  std::map<std::string, double> thresholds;
  std::vector<std::string> notes;
  bool applicable = true;
  bool passed = false;
  double runtime_seconds = 0.0;
};

/// Stable 64-bit FNV-1a digest of every number and flag in the spec, hex.
std::string digest(const ProblemSpec& spec);
std::string fnv1a_hex(const std::string& bytes);

enum class DeskRegime {
  regular,     // W_reg, tau = 0
  logarithmic  // W_log with c = 2, Yosida eps = 1e-3, tau = 1
};

/// Unit interval problem used throughout the verification suite:
/// kappa = (1, 1, 0.5, 0.5), box [-1, 1], targets are perturbed constants.
ProblemSpec desk_problem(DeskRegime regime, int cells = 32, int steps = 16);

/// Doubles the cells per axis and the time steps; data are prolonged
/// piecewise constantly in space and time.
ProblemSpec refine(const ProblemSpec& spec);

/// Nodewise uniform in the box, smoothed by one implicit step
/// (I + s A)^{-1} with s = `smoothing`, then projected onto the box.
SpaceTimeField random_admissible_control(const ProblemSpec& spec, std::uint64_t seed,
                                         double smoothing = 1e-2);

/// Smoothed random direction with entries of order `amplitude`.
SpaceTimeField random_direction(const ProblemSpec& spec, std::uint64_t seed,
                                double amplitude = 1.0, double smoothing = 1e-2);

/// max_n |a^n|_H + (sum_{n>=1} |a^n|_V^2 dt)^{1/2}, plus the same for b.
/// a and b have columns at levels 0..Nt.
double y_norm(const Grid& grid, const TimeGrid& time, const SpaceTimeField& a,
              const SpaceTimeField& b);

/// Cumulative rectangle-rule integral: input has columns at levels 1..Nt,
/// output has levels 0..Nt with level 0 = 0.
SpaceTimeField time_antiderivative(const SpaceTimeField& f, const TimeGrid& time);

/// max_n |mean(phi^n) - mean(phi^0)| / (1 + |mean(phi^0)|).
double mass_drift(const Grid& grid, const SpaceTimeField& phi);

/// (J(u + delta h) - J(u - delta h)) / (2 delta) from two independent solves.
double fd_directional_derivative(const SpaceTimeField& control, const SpaceTimeField& direction,
                                 const ProblemSpec& spec, double delta);

struct FdSweep {
  std::vector<double> deltas;
  std::vector<double> values;
  double delta = 0.0;
  double value = 0.0;
};

/// Central differences for delta in {1e-3, ..., 1e-7} * (max|u| + 1).
/// The selected value is the one whose neighbours agree best (plateau).
FdSweep fd_sweep(const SpaceTimeField& control, const SpaceTimeField& direction,
                 const ProblemSpec& spec);

/// Adjoint gradient against the FD oracle in `directions` seeded random
/// directions, plus the tangent/adjoint duality identity.
ProbeReport gradient_check_probe(const ProblemSpec& spec, const SpaceTimeField& control,
                                 int directions = 5, std::uint64_t seed = 1,
                                 double fd_tolerance = 1e-6, double duality_tolerance = 1e-8);

/// Remainder |S(u + d h) - S(u) - d S'(u) h|_Y over a ladder of d; reports
/// the least-squares slope of log r against log d, fitted over the points
/// whose remainder clears the round-off floor (at least three are needed).
ProbeReport frechet_remainder_probe(const ProblemSpec& spec, const SpaceTimeField& control,
                                    const SpaceTimeField& direction,
                                    const std::vector<double>& deltas = {0.4, 0.2, 0.1, 0.05,
                                                                         0.02, 0.01, 1e-3, 1e-4});

/// Y-norm / L2(Q) ratios over seeded admissible control pairs on `spec`
/// and on refine(spec). Pairs are drawn on the coarse grid and prolonged.
ProbeReport lipschitz_probe(const ProblemSpec& spec, int pairs = 20, std::uint64_t seed = 7);

/// State solves along an eps ladder; consecutive Y-norm differences must
/// strictly decrease.
ProbeReport yosida_convergence_probe(const ProblemSpec& spec, const SpaceTimeField& control,
                                     const std::vector<double>& eps_ladder = {1e-1, 1e-2, 1e-3,
                                                                              1e-4});

/// Decoupled run (l = gamma = 0, u = 0) from the spec's initial phase;
/// the discrete energy must not increase.
ProbeReport energy_probe(const ProblemSpec& spec, int steps = 256, double tolerance = 1e-10);

/// Minimum distance of phi to the boundary of D(beta) over Q, for seeded
/// admissible controls plus u = 0.
ProbeReport separation_probe(const ProblemSpec& spec, int controls = 10,
                             std::uint64_t seed = 11);

/// Round trip, symmetry and dual-norm identities for N on random zero-mean
/// fields.
ProbeReport neumann_probe(const Grid& grid, std::uint64_t seed = 3, int samples = 5);

/// Names accepted by run_probe.
std::vector<std::string> probe_names();
ProbeReport run_probe(const std::string& name, const ProblemSpec& spec, std::uint64_t seed);

}  // namespace pfc
