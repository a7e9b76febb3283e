#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

#include "cvqpu/experiments.hpp"

using namespace cvqpu;
using namespace testing;

namespace {

ExperimentConfig small(OpKind op, int n) {
  ExperimentConfig cfg;
  cfg.op = op;
  cfg.trunc_n = n;
  cfg.threads = 2;
  return cfg;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("dispersive ratios") {
    const BlockParams p;
    CHECK(dispersive_ratio(OpKind::rotation, p) == doctest::Approx(6e9 / 1.05e8));
    CHECK(dispersive_ratio(OpKind::displacement, p) == doctest::Approx(1e10 / 6e7));
    CHECK(dispersive_ratio(OpKind::squeezing, p) == doctest::Approx(1.5e8 / 8.3e6));
    CHECK(dispersive_ratio(OpKind::kerr, p) == doctest::Approx(483.0));
    CHECK(dispersive_ratio(OpKind::beamsplitter, p) == doctest::Approx(5e9 / 1.04e8));
    for (OpKind op : {OpKind::rotation, OpKind::displacement, OpKind::squeezing, OpKind::kerr, OpKind::beamsplitter}) {
      BlockParams q = p;
      set_dispersive_ratio(op, q, 23.5);
      CHECK(dispersive_ratio(op, q) == doctest::Approx(23.5).epsilon(1e-12));
      CHECK(get_param(q, ratio_parameter(op)) != get_param(p, ratio_parameter(op)));
    }
    // The detuning keeps its sign.
    BlockParams q = p;
    set_dispersive_ratio(OpKind::rotation, q, 20.0);
    CHECK(q.omega_r < q.omega_m);
    // kappa_0 scales as g_mf^2, so the ratio for a given time follows in closed form.
    const double r = kerr_ratio_for_gate_time(p, 27e-6);
    BlockParams k = p;
    set_dispersive_ratio(OpKind::kerr, k, r);
    CHECK(kPi / (2 * kerr_constants(k).kappa0) == doctest::Approx(27e-6).epsilon(1e-12));
    CHECK(r == doctest::Approx(483.0 * std::sqrt(27e-6 / (kPi / (2 * kerr_constants(p).kappa0)))).epsilon(1e-12));
  }

  TEST_CASE("config validation") {
    ExperimentConfig cfg;
    cfg.grid = {1, 3, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.grid = {3, 2, 1};
    CHECK_NOTHROW(cfg.validate());
    cfg.trunc_n = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.swept_name = "omega_x";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.initial_mode = FactorSpec::plus();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(default_truncation(OpKind::beamsplitter) == 28);
    CHECK(target_gate(ExperimentConfig{}).value.real() == doctest::Approx(kPi));
  }

  TEST_CASE("rotation sweep improves with the dispersive ratio") {
    ExperimentConfig cfg = small(OpKind::rotation, 24);
    cfg.swept_name = "ratio";
    cfg.grid = {10, 20, 40};
    const SweepResult r = run_single_mode_sweep(cfg);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].fidelity < r.rows[1].fidelity);
    CHECK(r.rows[1].fidelity < r.rows[2].fidelity);
    CHECK(r.rows[2].ratio == doctest::Approx(40.0));
    CHECK(r.rows[2].regime_pass);
    // Rows follow the grid order.
    cfg.grid = {40, 20, 10};
    const SweepResult d = run_single_mode_sweep(cfg);
    CHECK(d.rows[0].swept_value == 40.0);
    CHECK(d.rows[0].fidelity == doctest::Approx(r.rows[2].fidelity).epsilon(1e-12));
  }

  TEST_CASE("identity limits give unit fidelity") {
    SUBCASE("decoupled rotation with a zero target") {
      ExperimentConfig cfg = small(OpKind::rotation, 20);
      cfg.params.g_mr = 0.0;
      cfg.target = 0.0;
      CHECK(run_single_mode_sweep(cfg).rows[0].fidelity == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero displacement") {
      ExperimentConfig cfg = small(OpKind::displacement, 20);
      cfg.target = 0.0;
      CHECK(run_displacement_check(cfg).rows[0].fidelity == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("uncoupled beam splitter held open") {
      ExperimentConfig cfg = small(OpKind::beamsplitter, 16);
      cfg.params.g_mb = 0.0;
      cfg.params.lambda = 0.0;
      cfg.target = 0.0;
      cfg.tau_override = 1e-7;
      cfg.initial_mode = FactorSpec::coherent(1.0);
      CHECK(run_beamsplitter_experiment(cfg).rows[0].fidelity == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("singular calibration becomes a noted row") {
      ExperimentConfig cfg = small(OpKind::rotation, 20);
      cfg.params.g_mr = 0.0;
      const SweepResult r = run_single_mode_sweep(cfg);
      CHECK(std::isnan(r.rows[0].fidelity));
      CHECK_FALSE(r.rows[0].note.empty());
    }
  }

  TEST_CASE("displacement drive detuning lowers the fidelity") {
    ExperimentConfig cfg = small(OpKind::displacement, 24);
    const double on_res = run_displacement_check(cfg).rows[0].fidelity;
    CHECK(on_res > 0.999);
    cfg.params.omega_D_drive += 3e7;
    CHECK(run_displacement_check(cfg).rows[0].fidelity < on_res - 0.01);
  }

  TEST_CASE("effective models reproduce the ideal gates") {
    for (OpKind op : {OpKind::rotation, OpKind::kerr}) {
      ExperimentConfig cfg = small(op, 30);
      const OracleReport rep = run_oracle_comparison(cfg);
      REQUIRE(rep.rows.size() == 1);
      CHECK(rep.rows[0].ideal_vs_effective == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(rep.rows[0].full_vs_effective > 0.99);
      CHECK(rep.rows[0].ideal_vs_full == doctest::Approx(rep.rows[0].full_vs_effective).epsilon(1e-6));
    }
  }

  TEST_CASE("beam-splitter transfer and blocking") {
    ExperimentConfig cfg = small(OpKind::beamsplitter, 16);
    cfg.initial_mode = FactorSpec::coherent(1.0);
    const SweepResult r = run_beamsplitter_experiment(cfg);
    REQUIRE(r.snapshot);
    CHECK(std::abs(r.snapshot->m2_amplitude) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.snapshot->m1_mean_photons < 0.05);
    CHECK(r.rows[0].fidelity > 0.99);
    const SweepResult b = run_blocking_check(cfg);
    CHECK(b.rows[0].fidelity > 0.9);
    CHECK(b.snapshot->m2_mean_photons < 0.1);
  }

  TEST_CASE("results are deterministic across worker counts") {
    ExperimentConfig cfg = small(OpKind::rotation, 20);
    cfg.swept_name = "ratio";
    cfg.grid = {12, 24, 36, 48};
    cfg.threads = 1;
    const std::string one = to_csv(run_single_mode_sweep(cfg));
    cfg.threads = 4;
    CHECK(to_csv(run_single_mode_sweep(cfg)) == one);
    CHECK(to_csv(run_single_mode_sweep(cfg)) == one);
  }

  TEST_CASE("truncation study") {
    ExperimentConfig cfg = small(OpKind::rotation, 0);
    const ConvergenceReport rep = convergence_study(cfg, {20, 30, 40});
    REQUIRE(rep.points.size() == 3);
    CHECK(std::isnan(rep.points[0].delta));
    CHECK(rep.converged);
    CHECK(rep.declared_n == 20);
    CHECK(rep.leakage_monotone);
  }

  TEST_CASE("CSV and JSON output") {
    SweepResult empty;
    empty.swept_name = "ratio";
    CHECK(to_csv(empty) == csv_header());
    CHECK(csv_header() == "swept_name,swept_value,ratio,fidelity,gate_time_s,trunc_N,norm_drift,leakage\n");

    ExperimentConfig cfg = small(OpKind::rotation, 20);
    cfg.swept_name = "omega_r";
    cfg.grid = {3.9e9, 4.0e9};
    const SweepResult r = run_single_mode_sweep(cfg);
    const auto rows = parse_csv(to_csv(r));
    REQUIRE(rows.size() == 3);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& c = rows[k + 1];
      REQUIRE(c.size() == 8);
      CHECK(c[0] == "omega_r");
      CHECK(std::stod(c[1]) == doctest::Approx(r.rows[k].swept_value).epsilon(1e-11));
      CHECK(std::stod(c[3]) == doctest::Approx(r.rows[k].fidelity).epsilon(1e-11));
      CHECK(std::stod(c[4]) == doctest::Approx(r.rows[k].gate_time).epsilon(1e-11));
      CHECK(std::stoi(c[5]) == 20);
    }

    const auto j = nlohmann::json::parse(to_json(r));
    for (const auto& key : block_param_keys()) CHECK(j["metadata"]["params"].contains(key));
    CHECK(j["metadata"]["conventions"].contains("wigner"));
    CHECK(j["rows"].size() == 2);
    CHECK(j["rows"][1]["fidelity"].get<double>() == doctest::Approx(r.rows[1].fidelity).epsilon(1e-11));

    CHECK(result_file_name(r, OutputFormat::csv, "20260101T000000Z") == "rotation_omega_r_20260101T000000Z.csv");
    CHECK(result_file_name(r, OutputFormat::json, "") == "rotation_omega_r.json");
    CHECK(parse_output_format("json") == OutputFormat::json);
    CHECK_THROWS_AS(parse_output_format("xml"), ConfigError);

    const auto dir = std::filesystem::temp_directory_path() / "cvqpu_experiments_test";
    std::filesystem::create_directories(dir);
    write_results(r, (dir / "r.csv").string(), OutputFormat::csv);
    std::ifstream in(dir / "r.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == to_csv(r));
    CHECK_THROWS_AS(write_results(r, (dir / "nope" / "r.csv").string(), OutputFormat::csv), IoError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("worker count") {
    CHECK(worker_count(1) == 1);
    CHECK(worker_count(100000) >= 1);
    CHECK(result_metadata(ExperimentConfig{}).at("version") == version_string());
  }
}
