#include "pfc/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "pfc/harness.hpp"

namespace pfc {

namespace {

using nlohmann::json;

// Walks the document, fills defaults into `effective`, and collects every
// problem instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  std::vector<std::string> errors;
  json effective = json::object();

  const json* section(const char* name, std::initializer_list<const char*> allowed) {
    if (!doc_.contains(name)) {
      effective[name] = json::object();
      return nullptr;
    }
    const json& s = doc_.at(name);
    if (!s.is_object()) {
      errors.push_back(std::string(name) + ": expected an object");
      effective[name] = json::object();
      return nullptr;
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : s.items()) {
      if (!keys.count(item.key())) errors.push_back(std::string(name) + "." + item.key() + ": unknown key");
    }
    effective[name] = json::object();
    return &s;
  }

  template <class T>
  T value(const json* sec, const char* sec_name, const char* key, T fallback) {
    T out = fallback;
    if (sec != nullptr && sec->contains(key)) {
      const json& v = sec->at(key);
      bool ok = false;
      if constexpr (std::is_same_v<T, bool>) {
        ok = v.is_boolean();
      } else if constexpr (std::is_integral_v<T>) {
        ok = v.is_number_integer() || v.is_number_unsigned();
      } else if constexpr (std::is_floating_point_v<T>) {
        ok = v.is_number();
      } else {
        ok = v.is_string();
      }
      if (ok) {
        out = v.get<T>();
      } else {
        errors.push_back(std::string(sec_name) + "." + key + ": wrong type");
      }
    }
    effective[sec_name][key] = out;
    return out;
  }

  // Field specs are copied verbatim; `fallback` is recorded when absent.
  const json* field(const json* sec, const char* sec_name, const char* key,
                    const json& fallback) {
    if (sec != nullptr && sec->contains(key)) {
      effective[sec_name][key] = sec->at(key);
      return &sec->at(key);
    }
    effective[sec_name][key] = fallback;
    return nullptr;
  }

 private:
  const json& doc_;
};

std::uint64_t path_seed(std::uint64_t seed, const std::string& path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : path) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return seed ^ h;
}

std::optional<Field> spatial_field(const json& spec, const Grid& grid, std::uint64_t seed,
                                   const std::string& path, std::vector<std::string>& errors) {
  const Eigen::Index n = grid.size();
  if (spec.is_number()) return Field::Constant(n, spec.get<double>());
  if (spec.is_array()) {
    if (static_cast<Eigen::Index>(spec.size()) != n) {
      std::ostringstream msg;
      msg << path << ": expected " << n << " values, got " << spec.size();
      errors.push_back(msg.str());
      return std::nullopt;
    }
    Field f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!spec[i].is_number()) {
        errors.push_back(path + ": entry " + std::to_string(i) + " is not a number");
        return std::nullopt;
      }
      f(i) = spec[i].get<double>();
    }
    return f;
  }
  if (spec.is_object()) {
    for (const auto& item : spec.items()) {
      const auto& k = item.key();
      if (k != "mean" && k != "amplitude" && k != "mode" && k != "noise") {
        errors.push_back(path + "." + k + ": unknown key");
        return std::nullopt;
      }
      if (!item.value().is_number()) {
        errors.push_back(path + "." + k + ": expected a number");
        return std::nullopt;
      }
    }
    const double m = spec.value("mean", 0.0);
    const double amp = spec.value("amplitude", 0.0);
    const double mode = spec.value("mode", 1.0);
    const double noise = spec.value("noise", 0.0);
    const double lx = grid.length(0);
    Field f = sample(grid, [&](double x, double) {
      return m + amp * std::cos(mode * std::numbers::pi * x / lx);
    });
    if (noise != 0.0) {
      std::mt19937_64 rng(path_seed(seed, path));
      for (Eigen::Index i = 0; i < n; ++i) {
        f(i) += noise * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0);
      }
    }
    return f;
  }
  errors.push_back(path + ": expected a number, an array or an object");
  return std::nullopt;
}

// A per-level array (length Nt, entries are spatial specs) or one spatial
// spec repeated at every level.
std::optional<SpaceTimeField> space_time_field(const json& spec, const Grid& grid,
                                               const TimeGrid& time, std::uint64_t seed,
                                               const std::string& path,
                                               std::vector<std::string>& errors) {
  const bool per_level = spec.is_array() && !spec.empty() && !spec[0].is_number();
  SpaceTimeField out(grid.size(), time.steps);
  if (per_level) {
    if (static_cast<int>(spec.size()) != time.steps) {
      std::ostringstream msg;
      msg << path << ": expected " << time.steps << " levels, got " << spec.size();
      errors.push_back(msg.str());
      return std::nullopt;
    }
    for (int k = 0; k < time.steps; ++k) {
      const auto f = spatial_field(spec[k], grid, seed, path + "[" + std::to_string(k) + "]", errors);
      if (!f) return std::nullopt;
      out.col(k) = *f;
    }
    return out;
  }
  const auto f = spatial_field(spec, grid, seed, path, errors);
  if (!f) return std::nullopt;
  out.colwise() = *f;
  return out;
}

Potential make_potential(const std::string& kind, double c, double eps,
                         std::vector<std::string>& errors) {
  if (kind == "regular") return Potential::regular(eps);
  if (kind == "logarithmic") {
    if (!(c > 0.0)) errors.push_back("potential.c must be > 0");
    return Potential::logarithmic(c > 0.0 ? c : 2.0, eps);
  }
  if (kind == "loglinear") return Potential::loglinear(eps);
  errors.push_back("potential.kind: unknown potential '" + kind +
                   "' (expected regular, logarithmic or loglinear)");
  return Potential::regular();
}

std::string kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::logarithmic:
      return "logarithmic";
    case PotentialKind::loglinear:
      return "loglinear";
    default:
      return "regular";
  }
}

[[noreturn]] void fail(const std::vector<std::string>& errors) {
  std::ostringstream msg;
  msg << "invalid configuration (" << errors.size() << " violation"
      << (errors.size() > 1 ? "s" : "") << "):";
  for (const auto& e : errors) msg << "\n  - " << e;
  throw ValidationError(msg.str());
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("configuration root must be a JSON object");
  Reader rd(doc);
  {
    const std::set<std::string> top{"preset", "seed",      "grid",    "time",      "physics",
                                    "potential", "initial", "cost",    "box",       "solver",
                                    "control",   "direction", "optimize", "gradcheck", "output"};
    for (const auto& item : doc.items()) {
      if (!top.count(item.key())) rd.errors.push_back(item.key() + ": unknown key");
    }
  }

  RunConfig cfg;
  cfg.seed = 1;
  if (doc.contains("seed")) {
    if (doc["seed"].is_number_unsigned() || doc["seed"].is_number_integer()) {
      cfg.seed = doc["seed"].get<std::uint64_t>();
    } else {
      rd.errors.push_back("seed: expected a non-negative integer");
    }
  }
  rd.effective["seed"] = cfg.seed;

  std::string preset;
  if (doc.contains("preset")) {
    if (doc["preset"].is_string()) {
      preset = doc["preset"].get<std::string>();
      if (preset != "desk-regular" && preset != "desk-log") {
        rd.errors.push_back("preset: unknown preset '" + preset +
                            "' (expected desk-regular or desk-log)");
        preset.clear();
      }
    } else {
      rd.errors.push_back("preset: expected a string");
    }
  }
  if (!preset.empty()) rd.effective["preset"] = preset;

  // Grid and time first: every field spec depends on them.
  const json* g = rd.section("grid", {"dim", "cells", "lengths"});
  const int dim = rd.value(g, "grid", "dim", 1);
  std::vector<int> cells(static_cast<std::size_t>(std::max(dim, 1)), preset.empty() ? 64 : 32);
  std::vector<double> lengths(cells.size(), 1.0);
  if (g != nullptr && g->contains("cells")) {
    try {
      cells = g->at("cells").get<std::vector<int>>();
    } catch (const json::exception&) {
      rd.errors.push_back("grid.cells: expected an array of integers");
    }
  }
  if (g != nullptr && g->contains("lengths")) {
    try {
      lengths = g->at("lengths").get<std::vector<double>>();
    } catch (const json::exception&) {
      rd.errors.push_back("grid.lengths: expected an array of numbers");
    }
  }
  rd.effective["grid"]["cells"] = cells;
  rd.effective["grid"]["lengths"] = lengths;

  const json* t = rd.section("time", {"horizon", "steps"});
  const double horizon = rd.value(t, "time", "horizon", 1.0);
  const int steps = rd.value(t, "time", "steps", preset.empty() ? 64 : 16);

  std::optional<Grid> grid;
  if (static_cast<int>(cells.size()) != dim || static_cast<int>(lengths.size()) != dim) {
    rd.errors.push_back("grid: cells and lengths must have `dim` entries");
  } else {
    try {
      std::array<int, 2> c{cells[0], dim == 2 ? cells[1] : 1};
      std::array<double, 2> l{lengths[0], dim == 2 ? lengths[1] : 1.0};
      grid = Grid(dim, c, l);
    } catch (const ConfigError& e) {
      rd.errors.push_back(std::string("grid: ") + e.what());
    }
  }
  if (steps < 1) rd.errors.push_back("time.steps must be positive");
  if (!(horizon > 0.0)) rd.errors.push_back("time.horizon must be positive");
  if (!grid || steps < 1 || !(horizon > 0.0)) fail(rd.errors);
  const TimeGrid time{horizon, steps};

  ProblemSpec& spec = cfg.spec;
  if (!preset.empty()) {
    if (dim != 1 || std::abs(lengths[0] - 1.0) > 0.0) {
      rd.errors.push_back("preset: desk presets live on the unit interval (grid.dim = 1, lengths = [1])");
      fail(rd.errors);
    }
    spec = desk_problem(preset == "desk-regular" ? DeskRegime::regular : DeskRegime::logarithmic,
                        cells[0], steps);
    spec.time.horizon = horizon;
  } else {
    spec.grid = *grid;
    spec.time = time;
    spec.cost = CostSpec::zeros(*grid, time);
    spec.box = ControlBox::constant(*grid, time, -1.0, 1.0);
    spec.init.theta0 = Field::Zero(grid->size());
    spec.init.phi0 = Field::Zero(grid->size());
  }

  const json* ph = rd.section("physics", {"tau", "latent", "coupling"});
  spec.physics.tau = rd.value(ph, "physics", "tau", spec.physics.tau);
  spec.physics.latent = rd.value(ph, "physics", "latent", spec.physics.latent);
  spec.physics.coupling = rd.value(ph, "physics", "coupling", spec.physics.coupling);

  const json* po = rd.section("potential", {"kind", "c", "eps"});
  const std::string kind = rd.value<std::string>(po, "potential", "kind", kind_name(spec.potential.kind()));
  const double default_eps =
      (po != nullptr && po->contains("kind")) ? (kind == "regular" ? 0.0 : 1e-3)
                                              : spec.potential.yosida_eps();
  const double default_c = spec.potential.c() > 0.0 ? spec.potential.c() : 2.0;
  const double c = rd.value(po, "potential", "c", default_c);
  const double eps = rd.value(po, "potential", "eps", default_eps);
  spec.potential = make_potential(kind, c, eps, rd.errors);

  const std::string preset_marker = "preset";
  auto assign_spatial = [&](const json* src, const std::string& path, Field& dst) {
    if (src == nullptr) return;
    if (auto f = spatial_field(*src, spec.grid, cfg.seed, path, rd.errors)) dst = *f;
  };
  auto assign_space_time = [&](const json* src, const std::string& path, SpaceTimeField& dst) {
    if (src == nullptr) return;
    if (auto f = space_time_field(*src, spec.grid, spec.time, cfg.seed, path, rd.errors)) dst = *f;
  };
  const json absent = preset.empty() ? json(0.0) : json(preset_marker);

  const json* in = rd.section("initial", {"theta0", "phi0"});
  assign_spatial(rd.field(in, "initial", "theta0", absent), "initial.theta0", spec.init.theta0);
  assign_spatial(rd.field(in, "initial", "phi0", absent), "initial.phi0", spec.init.phi0);

  const json* co = rd.section("cost", {"kappa", "theta_target", "phi_target", "theta_final",
                                       "phi_final"});
  if (co != nullptr && co->contains("kappa")) {
    try {
      const auto k = co->at("kappa").get<std::vector<double>>();
      if (k.size() == 4) {
        std::copy(k.begin(), k.end(), spec.cost.kappa.begin());
      } else {
        rd.errors.push_back("cost.kappa: expected four numbers");
      }
    } catch (const json::exception&) {
      rd.errors.push_back("cost.kappa: expected four numbers");
    }
  }
  rd.effective["cost"]["kappa"] = spec.cost.kappa;
  assign_space_time(rd.field(co, "cost", "theta_target", absent), "cost.theta_target",
                    spec.cost.theta_target);
  assign_space_time(rd.field(co, "cost", "phi_target", absent), "cost.phi_target",
                    spec.cost.phi_target);
  assign_spatial(rd.field(co, "cost", "theta_final", absent), "cost.theta_final",
                 spec.cost.theta_final);
  assign_spatial(rd.field(co, "cost", "phi_final", absent), "cost.phi_final",
                 spec.cost.phi_final);

  const json* bx = rd.section("box", {"lower", "upper"});
  assign_space_time(rd.field(bx, "box", "lower", json(-1.0)), "box.lower", spec.box.lower);
  assign_space_time(rd.field(bx, "box", "upper", json(1.0)), "box.upper", spec.box.upper);

  const json* so = rd.section("solver", {"newton_tolerance", "newton_max_iterations",
                                         "boundary_fraction", "linear_tolerance"});
  auto& sv = spec.solver;
  sv.newton.tolerance = rd.value(so, "solver", "newton_tolerance", sv.newton.tolerance);
  sv.newton.max_iterations = rd.value(so, "solver", "newton_max_iterations", sv.newton.max_iterations);
  sv.newton.boundary_fraction = rd.value(so, "solver", "boundary_fraction", sv.newton.boundary_fraction);
  sv.linear_tolerance = rd.value(so, "solver", "linear_tolerance", sv.linear_tolerance);
  if (!(sv.newton.boundary_fraction > 0.0 && sv.newton.boundary_fraction < 1.0)) {
    rd.errors.push_back("solver.boundary_fraction must lie in (0, 1)");
  }

  cfg.control = zero_control(spec);
  if (doc.contains("control")) {
    rd.effective["control"] = doc["control"];
    if (auto f = space_time_field(doc["control"], spec.grid, spec.time, cfg.seed, "control",
                                  rd.errors)) {
      cfg.control = *f;
    }
  } else {
    rd.effective["control"] = 0.0;
  }
  if (doc.contains("direction") && doc["direction"] != "random") {
    rd.effective["direction"] = doc["direction"];
    if (auto f = space_time_field(doc["direction"], spec.grid, spec.time, cfg.seed, "direction",
                                  rd.errors)) {
      cfg.direction = *f;
    }
  } else {
    rd.effective["direction"] = "random";
  }

  const json* op = rd.section("optimize", {"tolerance", "max_iterations", "sigma", "initial_step",
                                           "max_backtracks"});
  auto& oo = cfg.optimize;
  oo.tolerance = rd.value(op, "optimize", "tolerance", oo.tolerance);
  oo.max_iterations = rd.value(op, "optimize", "max_iterations", oo.max_iterations);
  oo.armijo_sigma = rd.value(op, "optimize", "sigma", oo.armijo_sigma);
  oo.initial_step = rd.value(op, "optimize", "initial_step", oo.initial_step);
  oo.max_backtracks = rd.value(op, "optimize", "max_backtracks", oo.max_backtracks);
  if (!(oo.tolerance > 0.0)) rd.errors.push_back("optimize.tolerance must be > 0");
  if (oo.max_iterations < 0) rd.errors.push_back("optimize.max_iterations must be >= 0");
  if (!(oo.armijo_sigma > 0.0 && oo.armijo_sigma < 1.0)) {
    rd.errors.push_back("optimize.sigma must lie in (0, 1)");
  }
  if (!(oo.initial_step > 0.0)) rd.errors.push_back("optimize.initial_step must be > 0");
  if (oo.max_backtracks < 0) rd.errors.push_back("optimize.max_backtracks must be >= 0");

  const json* gc = rd.section("gradcheck", {"directions", "fd_tolerance", "duality_tolerance"});
  auto& gs = cfg.gradcheck;
  gs.directions = rd.value(gc, "gradcheck", "directions", gs.directions);
  gs.fd_tolerance = rd.value(gc, "gradcheck", "fd_tolerance", gs.fd_tolerance);
  gs.duality_tolerance = rd.value(gc, "gradcheck", "duality_tolerance", gs.duality_tolerance);
  if (gs.directions < 1) rd.errors.push_back("gradcheck.directions must be >= 1");

  const json* ou = rd.section("output", {"dir", "snapshot_stride"});
  cfg.output.dir = rd.value<std::string>(ou, "output", "dir", cfg.output.dir.string());
  cfg.output.snapshot_stride = rd.value(ou, "output", "snapshot_stride", cfg.output.snapshot_stride);
  if (cfg.output.snapshot_stride < 1) rd.errors.push_back("output.snapshot_stride must be >= 1");

  for (auto& v : spec.violations()) rd.errors.push_back(std::move(v));
  if (!rd.errors.empty()) fail(rd.errors);

  cfg.effective = std::move(rd.effective);
  cfg.digest = fnv1a_hex(cfg.effective.dump());
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace pfc
