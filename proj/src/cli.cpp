#include "pfc/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "pfc/config.hpp"
#include "pfc/harness.hpp"
#include "pfc/io.hpp"

namespace pfc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Invocation {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string probe_name;
};

RunConfig load(const Invocation& inv) {
  std::ifstream in(inv.config_path);
  if (!in) throw ParseError("cannot open config file '" + inv.config_path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + inv.config_path + "': " + e.what());
  }
  if (inv.seed && doc.is_object()) doc["seed"] = *inv.seed;
  RunConfig cfg = config_from_json(doc);
  if (!inv.out_dir.empty()) cfg.output.dir = inv.out_dir;
  return cfg;
}

std::string level_name(const std::string& field, int level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%04d.csv", level);
  return field + buf;
}

std::vector<int> snapshot_levels(int steps, int stride) {
  std::vector<int> levels;
  for (int n = 0; n < steps; n += stride) levels.push_back(n);
  levels.push_back(steps);
  return levels;
}

void write_fields(const RunConfig& cfg, const std::string& name, const SpaceTimeField& f,
                  int first_level) {
  const auto& spec = cfg.spec;
  const int last = first_level + static_cast<int>(f.cols()) - 1;
  for (int level : snapshot_levels(spec.steps(), cfg.output.snapshot_stride)) {
    if (level < first_level || level > last) continue;
    write_snapshot(cfg.output.dir / "snapshots" / level_name(name, level), cfg.digest, spec.grid,
                   name, level, spec.time.time(level), f.col(level - first_level));
  }
}

json header(const RunConfig& cfg, const std::string& command) {
  return {{"command", command}, {"config_digest", cfg.digest}};
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const auto& spec = cfg.spec;
  const Trajectory state = solve_state(cfg.control, spec);
  write_fields(cfg, "theta", state.theta, 0);
  write_fields(cfg, "phi", state.phi, 0);
  write_fields(cfg, "mu", state.mu, 1);

  std::vector<std::vector<double>> rows;
  for (int n = 0; n <= spec.steps(); ++n) {
    rows.push_back({static_cast<double>(n), spec.time.time(n), mean(spec.grid, state.phi.col(n)),
                    mean(spec.grid, state.theta.col(n)),
                    energy(spec.grid, spec.potential, state.phi.col(n))});
  }
  write_series(cfg.output.dir / "series.csv", cfg.digest,
               {"level", "time", "mass", "theta_mean", "energy"}, rows);

  json summary = header(cfg, "solve");
  summary["cost"] = cost(state, spec.cost, spec.grid, spec.time);
  summary["newton_iterations"] = state.newton_iterations;
  summary["mass_drift"] = mass_drift(spec.grid, state.phi);
  write_json(cfg.output.dir / "summary.json", summary);
  out << "solve: J = " << format_double(summary["cost"].get<double>())
      << ", mass drift = " << format_double(summary["mass_drift"].get<double>()) << '\n';
  return exit_code::ok;
}

SpaceTimeField direction_of(const RunConfig& cfg) {
  return cfg.direction.size() > 0 ? cfg.direction : random_direction(cfg.spec, cfg.seed);
}

int cmd_tangent(const RunConfig& cfg, std::ostream& out) {
  const auto& spec = cfg.spec;
  const SpaceTimeField h = direction_of(cfg);
  const Trajectory state = solve_state(cfg.control, spec);
  const TangentTrajectory tan = solve_tangent(h, state, spec);
  write_fields(cfg, "tangent_theta", tan.theta, 0);
  write_fields(cfg, "tangent_phi", tan.phi, 0);
  write_space_time(cfg.output.dir / "direction.csv", cfg.digest, spec.grid, spec.time,
                   "direction", 1, h);

  std::vector<std::vector<double>> rows;
  for (int n = 0; n <= spec.steps(); ++n) {
    rows.push_back({static_cast<double>(n), spec.time.time(n), mean(spec.grid, tan.phi.col(n))});
  }
  write_series(cfg.output.dir / "series.csv", cfg.digest, {"level", "time", "tangent_mass"}, rows);

  json summary = header(cfg, "tangent");
  summary["cost_derivative"] = cost_derivative(state, tan, spec.cost, spec.grid, spec.time);
  summary["tangent_mass_drift"] = mass_drift(spec.grid, tan.phi);
  write_json(cfg.output.dir / "summary.json", summary);
  out << "tangent: dJ[h] = " << format_double(summary["cost_derivative"].get<double>()) << '\n';
  return exit_code::ok;
}

int cmd_adjoint(const RunConfig& cfg, std::ostream& out) {
  const auto& spec = cfg.spec;
  const Trajectory state = solve_state(cfg.control, spec);
  const AdjointSolution adj = solve_adjoint(state, spec.cost, spec);
  write_fields(cfg, "q", adj.q, 0);
  write_fields(cfg, "p", adj.p, 0);
  write_space_time(cfg.output.dir / "gradient.csv", cfg.digest, spec.grid, spec.time, "gradient",
                   1, adj.gradient());

  json summary = header(cfg, "adjoint");
  summary["cost"] = cost(state, spec.cost, spec.grid, spec.time);
  summary["gradient_norm"] = space_time_norm(spec, adj.gradient());
  summary["stationarity_residual"] = stationarity_residual(spec, cfg.control, adj.gradient());
  write_json(cfg.output.dir / "summary.json", summary);
  out << "adjoint: |q|_L2(Q) = " << format_double(summary["gradient_norm"].get<double>()) << '\n';
  return exit_code::ok;
}

int report_probe(const RunConfig& cfg, ProbeReport report, const std::string& file,
                 std::ostream& out, std::ostream& err) {
  report.config_digest = cfg.digest;
  write_json(cfg.output.dir / file, to_json(report));
  out << report.name << ": " << (report.passed ? "PASS" : "FAIL")
      << (report.applicable ? "" : " (not applicable)") << '\n';
  err << report.name << ": runtime " << std::fixed << std::setprecision(2)
      << report.runtime_seconds << " s\n";
  return report.passed ? exit_code::ok : exit_code::check_failed;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto& g = cfg.gradcheck;
  auto report = gradient_check_probe(cfg.spec, cfg.control, g.directions, cfg.seed,
                                     g.fd_tolerance, g.duality_tolerance);
  return report_probe(cfg, std::move(report), "gradcheck.json", out, err);
}

int cmd_optimize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto& spec = cfg.spec;
  const auto start = std::chrono::steady_clock::now();
  const OptimizeReport rep = optimize(spec, cfg.control, cfg.optimize);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < rep.cost_history.size(); ++k) {
    rows.push_back({static_cast<double>(k), rep.cost_history[k], rep.residual_history[k],
                    k > 0 ? rep.step_history[k - 1] : 0.0});
  }
  write_series(cfg.output.dir / "history.csv", cfg.digest,
               {"iteration", "cost", "residual", "step"}, rows);
  write_space_time(cfg.output.dir / "control.csv", cfg.digest, spec.grid, spec.time, "control", 1,
                   rep.control);
  write_space_time(cfg.output.dir / "gradient.csv", cfg.digest, spec.grid, spec.time, "gradient",
                   1, rep.gradient);

  json j = header(cfg, "optimize");
  j["iterations"] = rep.iterations;
  j["termination"] = to_string(rep.termination);
  j["final_cost"] = rep.cost_history.back();
  j["final_residual"] = rep.residual_history.back();
  j["tolerance"] = cfg.optimize.tolerance;
  j["bang_bang"] = to_json(rep.bang_bang);
  write_json(cfg.output.dir / "optimize.json", j);

  out << "optimize: " << to_string(rep.termination) << " after " << rep.iterations
      << " iterations, J = " << format_double(rep.cost_history.back())
      << ", residual = " << format_double(rep.residual_history.back()) << '\n';
  err << "optimize: runtime " << std::fixed << std::setprecision(2) << seconds << " s\n";
  return rep.termination == Termination::stationary ? exit_code::ok : exit_code::check_failed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal control of a conserved phase-field system", "pfc"};
  app.require_subcommand(1);
  Invocation inv;
  auto add_common = [&inv](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "JSON configuration file")->required();
    sub->add_option("--out", inv.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", inv.seed, "seed (overrides the config seed)");
  };
  CLI::App* solve = app.add_subcommand("solve", "forward state run");
  CLI::App* tangent = app.add_subcommand("tangent", "linearized run along a direction");
  CLI::App* adjoint = app.add_subcommand("adjoint", "backward adjoint run");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "adjoint gradient against finite differences");
  CLI::App* opt = app.add_subcommand("optimize", "projected-gradient optimization");
  CLI::App* probe = app.add_subcommand("probe", "run one verification probe");
  for (CLI::App* sub : {solve, tangent, adjoint, gradcheck, opt, probe}) add_common(sub);
  std::string names;
  for (const auto& n : probe_names()) names += (names.empty() ? "" : ", ") + n;
  probe->add_option("name", inv.probe_name, "probe name: " + names)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_code::config_error;
  }

  try {
    const RunConfig cfg = load(inv);
    fs::create_directories(cfg.output.dir);
    json echo = cfg.effective;
    echo["config_digest"] = cfg.digest;
    write_json(cfg.output.dir / "config.effective.json", echo);

    if (*solve) return cmd_solve(cfg, out);
    if (*tangent) return cmd_tangent(cfg, out);
    if (*adjoint) return cmd_adjoint(cfg, out);
    if (*gradcheck) return cmd_gradcheck(cfg, out, err);
    if (*opt) return cmd_optimize(cfg, out, err);
    const auto& known = probe_names();
    if (std::find(known.begin(), known.end(), inv.probe_name) == known.end()) {
      throw ConfigError("unknown probe '" + inv.probe_name + "' (expected one of: " + names + ")");
    }
    return report_probe(cfg, run_probe(inv.probe_name, cfg.spec, cfg.seed),
                        "probe_" + inv.probe_name + ".json", out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config_error;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return exit_code::solver_failure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::solver_failure;
  }
}

}  // namespace pfc
