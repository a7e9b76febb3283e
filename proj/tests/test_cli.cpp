#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "cvqpu/cli.hpp"

using namespace cvqpu;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cvqpu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config parsing") {
    SUBCASE("empty device section keeps the operating point") {
      const RunConfig c = parse_config_text("[device]\n");
      CHECK(c.experiment.params == default_block_params());
    }
    SUBCASE("values, comments and round trip") {
      const RunConfig c = parse_config_text(
          "# comment\n[device]\nomega_r = 3.5e9 ; trailing\n[model]\nkappa = printed\n"
          "[experiment]\nop = kerr\nswept = ratio\ngrid = 100:300:3\ninitial = fock:2\n"
          "[integrator]\nrtol = 1e-8\n[output]\nformat = json\nname = run\n");
      CHECK(c.experiment.params.omega_r == 3.5e9);
      CHECK(c.experiment.options.kappa == KappaFormula::printed);
      CHECK(c.experiment.op == OpKind::kerr);
      CHECK(c.experiment.grid == std::vector<double>{100, 200, 300});
      CHECK(c.experiment.initial_mode.n == 2);
      CHECK(c.experiment.integrator.rtol == 1e-8);
      CHECK(c.output.format == OutputFormat::json);
      const RunConfig back = parse_config_text(serialize_config(c));
      CHECK(back.experiment.params == c.experiment.params);
      CHECK(back.experiment.options == c.experiment.options);
      CHECK(back.experiment.grid == c.experiment.grid);
      CHECK(back.output.name == "run");
      CHECK(serialize_config(back) == serialize_config(c));
    }
    SUBCASE("errors name the key and line") {
      try {
        parse_config_text("[device]\nomega_m = 1e10\nomega_z = 3\n", "dev.ini");
        FAIL("no throw");
      } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("dev.ini:3") != std::string::npos);
        CHECK(what.find("omega_z") != std::string::npos);
      }
      CHECK_THROWS_AS(parse_config_text("[device]\nomega_r = fast\n"), ConfigError);
      CHECK_THROWS_AS(parse_config_text("[nowhere]\n"), ConfigError);
      CHECK_THROWS_AS(parse_config_text("omega_r = 1\n"), ConfigError);
      CHECK_THROWS_AS(parse_config("/nonexistent/cvqpu.ini"), IoError);
    }
    SUBCASE("overrides") {
      RunConfig c;
      apply_override(c, "device.g_mr=2e8");
      apply_override(c, "model.exchange = rabi");
      CHECK(c.experiment.params.g_mr == 2e8);
      CHECK(c.experiment.options.exchange == ExchangeCoupling::rabi);
      CHECK_THROWS_AS(apply_override(c, "device.g_mr"), ConfigError);
      CHECK_THROWS_AS(apply_override(c, "g_mr=1"), ConfigError);
    }
  }

  TEST_CASE("exit codes") {
    TempDir tmp("cvqpu_cli_codes");
    CHECK(cli({"validate", "--op", "kerr"}).code == kExitOk);
    const CliRun bad = cli({"validate", "--op", "rotation", "--set", "device.omega_r=9.9e9"});
    CHECK(bad.code == kExitRegime);
    CHECK(bad.out.find("FAIL") != std::string::npos);
    CHECK(cli({"nonsense"}).code == kExitConfig);
    CHECK(cli({"validate", "--set", "device.omega_q=1"}).code == kExitConfig);
    CHECK(cli({"displace", "--set", "device.omega_m=-1", "-o", tmp.path.string()}).code == kExitConfig);
    CHECK(cli({"validate", "-c", tmp.file("missing.ini")}).code == kExitIo);
    write(tmp.file("blocker"), "");
    CHECK(cli({"sweep", "--op", "rotation", "--swept", "ratio", "--grid", "20,40", "-o", tmp.file("blocker/sub")}).code ==
          kExitIo);
    // A sweep whose operating point fails the regime check needs --force.
    const std::vector<std::string> weak = {"sweep", "--op", "rotation", "--set", "device.omega_r=9.5e9", "--set",
                                           "experiment.trunc_n=20", "--swept", "ratio", "--grid", "20", "-o", tmp.path.string()};
    CHECK(cli(weak).code == kExitRegime);
    std::vector<std::string> forced = weak;
    forced.push_back("--force");
    CHECK(cli(forced).code == kExitOk);
    const CliRun conv = cli({"converge", "--op", "rotation", "--ns", "20,22", "--tolerance", "1e-15", "-o",
                             tmp.path.string()});
    CHECK(conv.code == kExitConvergence);
  }

  TEST_CASE("rotation sweep at the operating ratio") {
    TempDir tmp("cvqpu_cli_sweep");
    const CliRun r = cli({"sweep", "--op", "rotation", "--swept", "ratio", "--grid", "57.142857142857", "-o",
                          tmp.path.string(), "--name", "rot"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("convention") != std::string::npos);
    std::istringstream csv(slurp(tmp.file("rot.csv")));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "swept_name,swept_value,ratio,fidelity,gate_time_s,trunc_N,norm_drift,leakage");
    std::vector<std::string> cells;
    std::istringstream rs(row);
    for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 8);
    CHECK(std::stod(cells[3]) == doctest::Approx(0.9998).epsilon(0.001));
    CHECK(std::stod(cells[4]) == doctest::Approx(1.7097e-6).epsilon(1e-4));
    CHECK(fs::exists(tmp.file("rot.csv.meta.json")));
  }

  TEST_CASE("wigner and compile subcommands") {
    TempDir tmp("cvqpu_cli_misc");
    const CliRun w = cli({"wigner", "--state", "coherent:2", "-o", tmp.path.string(), "--name", "w"});
    REQUIRE(w.code == kExitOk);
    std::istringstream csv(slurp(tmp.file("w.csv")));
    std::string line;
    std::getline(csv, line);
    double best = -1, bx = 0, bp = 0;
    while (std::getline(csv, line)) {
      double x, p, v;
      char c1, c2;
      std::istringstream(line) >> x >> c1 >> p >> c2 >> v;
      if (v > best) best = v, bx = x, bp = p;
    }
    CHECK(std::abs(bx - 2 * std::sqrt(2.0)) <= 0.05);
    CHECK(std::abs(bp) <= 0.05);
    CHECK(best == doctest::Approx(1 / kPi).epsilon(0.01));

    write(tmp.file("c.txt"), "R 3.14159265 0\nB 1.5707963 0 0 1\n");
    const CliRun c = cli({"compile", tmp.file("c.txt"), "-o", tmp.path.string(), "--name", "sched"});
    REQUIRE(c.code == kExitOk);
    CHECK(slurp(tmp.file("sched.txt")).find("beamsplitter") != std::string::npos);
    write(tmp.file("bad.txt"), "B 1 0 0 2\n");
    CHECK(cli({"compile", tmp.file("bad.txt"), "-o", tmp.path.string()}).code == kExitConfig);
  }

  TEST_CASE("config file drives the run") {
    TempDir tmp("cvqpu_cli_config");
    write(tmp.file("run.ini"), "[experiment]\nop = displacement\ntrunc_n = 24\n[output]\nformat = json\nname = d\n");
    const CliRun r = cli({"displace", "-c", tmp.file("run.ini"), "-o", tmp.path.string()});
    REQUIRE(r.code == kExitOk);
    const std::string json = slurp(tmp.file("d.json"));
    CHECK(json.find("\"fidelity\"") != std::string::npos);
    CHECK(json.find("\"trunc_N\": 24") != std::string::npos);
  }
}
