#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pfc/cli.hpp"
#include "pfc/config.hpp"
#include "pfc/io.hpp"

using namespace pfc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pfc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "pfc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json desk(const char* preset) {
  return {{"preset", preset}, {"grid", {{"cells", {16}}}}, {"time", {{"steps", 8}}},
          {"control", {{"mean", 0.2}, {"amplitude", 0.3}}}};
}

}  // namespace

TEST_CASE("minimal config loads with defaults") {
  const RunConfig cfg = config_from_json(json::object());
  CHECK(cfg.spec.cells() == 64);
  CHECK(cfg.spec.steps() == 64);
  CHECK(cfg.spec.time.horizon == 1.0);
  CHECK(cfg.spec.potential.kind() == PotentialKind::regular);
  CHECK(cfg.spec.physics.tau == 0.0);
  CHECK(cfg.seed == 1);
  CHECK(cfg.effective["potential"]["kind"] == "regular");
  CHECK(cfg.effective["solver"]["newton_tolerance"] == 1e-11);
  CHECK(cfg.effective["box"]["lower"] == -1.0);
  CHECK(cfg.digest.size() == 16);
  CHECK(cfg.digest == config_from_json(cfg.effective).digest);
}

TEST_CASE("field specs") {
  const json doc = {{"grid", {{"cells", {4}}}},
                    {"time", {{"steps", 2}}},
                    {"initial",
                     {{"theta0", {1.0, 2.0, 3.0, 4.0}}, {"phi0", {{"mean", 0.1}, {"amplitude", 0.2}}}}},
                    {"box", {{"lower", {{-1, -1, -1, -1}, {-2, -2, -2, -2}}}, {"upper", 2.0}}},
                    {"control", {{"mean", 0.0}, {"noise", 0.5}}}};
  const RunConfig cfg = config_from_json(doc);
  CHECK(cfg.spec.init.theta0(2) == 3.0);
  CHECK(cfg.spec.init.phi0(0) == doctest::Approx(0.1 + 0.2 * std::cos(M_PI / 8)));
  CHECK(cfg.spec.box.lower(0, 1) == -2.0);
  CHECK(cfg.spec.box.upper(3, 1) == 2.0);
  CHECK(cfg.control.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(cfg.control.cwiseAbs().maxCoeff() > 0.0);
  CHECK(config_from_json(doc).control == cfg.control);
}

TEST_CASE("box ordering violation names the node") {
  json doc = {{"grid", {{"cells", {4}}}}, {"time", {{"steps", 2}}}};
  doc["box"]["lower"] = {{-1, -1, -1, -1}, {-1, -1, 3, -1}};
  try {
    config_from_json(doc);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("u_min > u_max at cell 2, level 2") != std::string::npos);
  }
}

TEST_CASE("tau / singular potential rule") {
  const json doc = {{"potential", {{"kind", "logarithmic"}, {"eps", 0.0}}}, {"physics", {{"tau", 0.0}}}};
  try {
    config_from_json(doc);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("requires tau > 0") != std::string::npos);
  }
  // Regularized evaluation is accepted with tau = 0; the default eps is 1e-3.
  const RunConfig ok = config_from_json({{"potential", {{"kind", "logarithmic"}}}});
  CHECK(ok.spec.potential.yosida_eps() == 1e-3);
  CHECK(ok.spec.potential.c() == 2.0);
}

TEST_CASE("every violation is listed") {
  const json doc = {{"bogus", 1},
                    {"physics", {{"latent", -1.0}, {"coupling", "x"}}},
                    {"cost", {{"kappa", {1, 2}}}},
                    {"potential", {{"kind", "quartic"}}},
                    {"initial", {{"phi0", {1.0, 2.0}}}}};
  try {
    config_from_json(doc);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bogus: unknown key") != std::string::npos);
    CHECK(msg.find("physics.latent must be > 0") != std::string::npos);
    CHECK(msg.find("physics.coupling: wrong type") != std::string::npos);
    CHECK(msg.find("cost.kappa") != std::string::npos);
    CHECK(msg.find("unknown potential 'quartic'") != std::string::npos);
    CHECK(msg.find("initial.phi0: expected 64 values, got 2") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_json({{"grid", {{"cells", {1}}}}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::array()), ValidationError);
}

TEST_CASE("load_config reports parse errors") {
  const fs::path dir = scratch("parse");
  std::ofstream(dir / "broken.json") << "{ \"grid\": ";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ParseError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ParseError);
  const fs::path ok = write_config(dir, desk("desk-regular"));
  CHECK(load_config(ok).spec.cells() == 16);
}

TEST_CASE("csv writers") {
  const fs::path dir = scratch("csv");
  const Grid g = Grid::box(2, 2);
  Field f(4);
  f << 1.0, 0.1, -2.5, 1e-20;
  write_snapshot(dir / "s.csv", "abc", g, "phi", 3, 0.5, f);
  CHECK(slurp(dir / "s.csv") ==
        "# config_digest=abc\n# field=phi level=3 time=0.5\nx,y,value\n"
        "0.25,0.25,1\n0.75,0.25,0.1\n0.25,0.75,-2.5\n0.75,0.75,1e-20\n");
  write_series(dir / "t.csv", "abc", {"a", "b"}, {{1, 2}, {3, 4.5}});
  CHECK(slurp(dir / "t.csv") == "# config_digest=abc\na,b\n1,2\n3,4.5\n");
}

TEST_CASE("unknown subcommand prints usage and exits 2") {
  const CliResult r = run({"frobnicate"});
  CHECK(r.code == exit_code::config_error);
  CHECK(r.err.find("solve") != std::string::npos);
  CHECK(run({}).code == exit_code::config_error);
  CHECK(run({"solve"}).code == exit_code::config_error);
}

TEST_CASE("the installed binary follows the same exit codes") {
  const std::string cmd = std::string("\"") + PFC_CLI_PATH + "\" frobnicate > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == exit_code::config_error);
}

TEST_CASE("config errors exit 2") {
  const fs::path dir = scratch("cfgerr");
  const fs::path cfg = write_config(dir, {{"physics", {{"tau", -1.0}}}});
  const CliResult r = run({"solve", "--config", cfg.string(), "--out", (dir / "o").string()});
  CHECK(r.code == exit_code::config_error);
  CHECK(r.err.find("physics.tau") != std::string::npos);
  CHECK(run({"solve", "--config", (dir / "nope.json").string()}).code == exit_code::config_error);
  const fs::path good = write_config(dir, desk("desk-regular"));
  CHECK(run({"probe", "nope", "--config", good.string(), "--out", (dir / "o").string()}).code ==
        exit_code::config_error);
}

TEST_CASE("solver failure exits 1") {
  const fs::path dir = scratch("solverfail");
  json doc = desk("desk-regular");
  doc["solver"] = {{"newton_max_iterations", 1}, {"newton_tolerance", 1e-300}};
  const fs::path cfg = write_config(dir, doc);
  const CliResult r = run({"solve", "--config", cfg.string(), "--out", (dir / "o").string()});
  CHECK(r.code == exit_code::solver_failure);
  CHECK(r.err.find("Newton") != std::string::npos);
}

TEST_CASE("solve, tangent and adjoint outputs") {
  const fs::path dir = scratch("outputs");
  const fs::path cfg = write_config(dir, desk("desk-log"));
  for (const char* cmd : {"solve", "tangent", "adjoint"}) {
    const fs::path out = dir / cmd;
    CHECK(run({cmd, "--config", cfg.string(), "--out", out.string()}).code == 0);
    CHECK(fs::exists(out / "config.effective.json"));
    CHECK(fs::exists(out / "summary.json"));
    const std::string digest = json::parse(slurp(out / "config.effective.json"))["config_digest"];
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
      if (!entry.is_regular_file()) continue;
      CAPTURE(entry.path().string());
      CHECK(slurp(entry.path()).find(digest) != std::string::npos);
    }
  }
  CHECK(fs::exists(dir / "solve" / "series.csv"));
  CHECK(fs::exists(dir / "solve" / "snapshots" / "phi_0000.csv"));
  CHECK(fs::exists(dir / "solve" / "snapshots" / "phi_0008.csv"));
  CHECK(fs::exists(dir / "adjoint" / "gradient.csv"));
  const json summary = json::parse(slurp(dir / "solve" / "summary.json"));
  CHECK(summary["mass_drift"].get<double>() <= 1e-12);
}

TEST_CASE("outputs are byte-identical across runs") {
  const fs::path dir = scratch("repeat");
  const fs::path cfg = write_config(dir, desk("desk-regular"));
  for (const char* d : {"a", "b"}) {
    CHECK(run({"solve", "--config", cfg.string(), "--out", (dir / d).string(), "--seed", "3"}).code == 0);
    CHECK(run({"gradcheck", "--config", cfg.string(), "--out", (dir / d).string(), "--seed", "3"}).code == 0);
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path twin = dir / "b" / fs::relative(entry.path(), dir / "a");
    CAPTURE(twin.string());
    CHECK(slurp(entry.path()) == slurp(twin));
  }
}

TEST_CASE("gradcheck on the desk configuration") {
  const fs::path dir = scratch("gradcheck");
  const fs::path cfg = write_config(dir, desk("desk-regular"));
  const CliResult r = run({"gradcheck", "--config", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 0);
  const json rep = json::parse(slurp(dir / "gradcheck.json"));
  CHECK(rep["passed"] == true);
  CHECK(rep["measured"]["max_fd_relative_error"].get<double>() <= 1e-6);
  CHECK_FALSE(rep.contains("runtime_seconds"));

  json strict = desk("desk-regular");
  strict["gradcheck"] = {{"fd_tolerance", 1e-300}, {"duality_tolerance", 1e-300}};
  const fs::path cfg2 = write_config(dir, strict);
  CHECK(run({"gradcheck", "--config", cfg2.string(), "--out", dir.string()}).code ==
        exit_code::check_failed);
}

TEST_CASE("optimize with zero weights reports no iterations") {
  const fs::path dir = scratch("optzero");
  json doc = desk("desk-regular");
  doc["cost"] = {{"kappa", {0, 0, 0, 0}}};
  const fs::path cfg = write_config(dir, doc);
  CHECK(run({"optimize", "--config", cfg.string(), "--out", dir.string()}).code == 0);
  const json rep = json::parse(slurp(dir / "optimize.json"));
  CHECK(rep["iterations"] == 0);
  CHECK(rep["termination"] == "stationary");
  CHECK(fs::exists(dir / "control.csv"));
  CHECK(fs::exists(dir / "history.csv"));
}

TEST_CASE("probe subcommand") {
  const fs::path dir = scratch("probe");
  const fs::path cfg = write_config(dir, desk("desk-log"));
  CHECK(run({"probe", "separation", "--config", cfg.string(), "--out", dir.string()}).code == 0);
  const json rep = json::parse(slurp(dir / "probe_separation.json"));
  CHECK(rep["passed"] == true);
  CHECK(rep["measured"]["min_margin"].get<double>() > 0.0);
}
