#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cvqpu/gates.hpp"

namespace cvqpu {

/// One experiment: operating point, sweep axis, target gate and numerics.
struct ExperimentConfig {
  OpKind op = OpKind::rotation;
  BlockParams params;
  ModelOptions options;
  /// A BlockParams key, or "ratio" for the op's dispersive ratio (see
  /// dispersive_ratio). Empty runs the operating point only.
  std::string swept_name;
  std::vector<double> grid;
  /// theta, alpha, xi, chi or beta; NaN selects the op's default target.
  Complex target{std::numeric_limits<double>::quiet_NaN(), 0.0};
  double phi = 0.0;
  /// Initial state of the (first) mode; the displacement always starts in vacuum.
  FactorSpec initial_mode = FactorSpec::coherent(2.0);
  /// Fock levels per mode; 0 picks the op's default.
  int trunc_n = 0;
  /// Forces the pulse length instead of the calibrated one (seconds, > 0).
  double tau_override = 0.0;
  /// Kerr only: evolve to the full revival 2 pi / kappa_0 and compare with the
  /// initial state.
  bool kerr_revival = false;
  IntegratorConfig integrator;
  double regime_threshold = 10.0;
  /// Worker count; 0 reads CVQPU_THREADS, defaulting to the hardware count.
  unsigned threads = 0;

  /// Throws ConfigError when the grid is not strictly monotone or N < 16.
  void validate() const;
};

/// Mean photon number of a mode factor (0 for qubit factors).
double factor_mean_photons(const FactorSpec& factor);

/// Gate the config asks for, with defaults R(pi), D(2), S(1.7), K(pi/2), B(pi/2, 0).
GateSpec target_gate(const ExperimentConfig& cfg);
/// N = 40 for single-mode ops, 28 per mode for the beam splitter, and 120 for
/// squeezing when nothing is configured (use convergence_study to size it).
int default_truncation(OpKind op);

/// |Delta_r/g_mr| (rotation), omega_m/Omega_D (displacement), Omega_S/g0
/// (squeezing), omega_f/g_mf (Kerr), |Delta_b/g_mb| (beam splitter).
double dispersive_ratio(OpKind op, const BlockParams& params, const ModelOptions& options = {});
/// Moves the op's swept element so that dispersive_ratio equals `ratio`:
/// omega_r, Omega_D, Omega_S, g_mf or omega_b. The sign of the detuning is kept.
void set_dispersive_ratio(OpKind op, BlockParams& params, double ratio, const ModelOptions& options = {});
/// Name of the parameter set_dispersive_ratio moves.
std::string ratio_parameter(OpKind op);
/// omega_f / g_mf at which the Kerr gate K(chi) takes `tau` seconds, by
/// inverting kappa_0 (which scales as g_mf^2).
double kerr_ratio_for_gate_time(const BlockParams& params, double tau, double chi = kPi / 2,
                                const ModelOptions& options = {});

struct SweepRow {
  double swept_value = 0.0;
  double ratio = 0.0;
  double fidelity = 0.0;
  double gate_time = 0.0;
  int trunc_n = 0;
  double norm_drift = 0.0;
  double leakage = 0.0;
  /// Best fidelity over one residual rotation of the total photon number.
  double gauge_fidelity = 0.0;
  bool regime_pass = true;
  /// Norm drift or leakage at or above 1e-6.
  bool flagged = false;
  std::string note;
};

struct TransferSnapshot {
  /// Best-fit coherent amplitude of the reduced M2 state.
  Complex m2_amplitude{0.0, 0.0};
  double m2_mean_photons = 0.0;
  double m1_mean_photons = 0.0;
  double tau = 0.0;
};

struct SweepResult {
  OpKind op = OpKind::rotation;
  std::string swept_name;
  std::vector<SweepRow> rows;
  std::optional<TransferSnapshot> snapshot;
  /// Operating point, conventions and version.
  std::map<std::string, std::string> metadata;
};

/// Full-model fidelity against the ideal gate at every grid point (or at the
/// operating point for an empty grid). Regime failures are noted per row.
SweepResult run_single_mode_sweep(const ExperimentConfig& cfg);
/// Vacuum displaced by the calibrated resonant drive.
SweepResult run_displacement_check(const ExperimentConfig& cfg);
/// initial_mode x |0> x |g> under the coupler model, compared on M1 x M2 with the ideal beam
/// splitter; the snapshot describes the operating point (or the last grid
/// point).
SweepResult run_beamsplitter_experiment(const ExperimentConfig& cfg);
/// Coupler parked at the blocking frequency for the calibrated beam-splitter
/// duration (or tau_override). The row's fidelity is M1 against its initial
/// state.
SweepResult run_blocking_check(const ExperimentConfig& cfg);

struct OracleRow {
  double swept_value = 0.0;
  double ratio = 0.0;
  double full_vs_effective = 0.0;
  double ideal_vs_full = 0.0;
  double ideal_vs_effective = 0.0;
};

struct OracleReport {
  OpKind op = OpKind::rotation;
  std::vector<OracleRow> rows;
};

/// Same initial state under the full and effective models at every grid point.
OracleReport run_oracle_comparison(const ExperimentConfig& cfg);

struct ConvergencePoint {
  int n = 0;
  double fidelity = 0.0;
  double leakage = 0.0;
  /// |F(n) - F(previous n)|; NaN for the first entry.
  double delta = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergencePoint> points;
  bool converged = false;
  /// First n whose successor changes F by less than the tolerance.
  int declared_n = 0;
  bool leakage_monotone = true;
};

/// Reruns the config's operating point for every n in `truncations`. With an
/// empty list, n starts at `start` and grows by 10 until converged or `max_n`.
ConvergenceReport convergence_study(const ExperimentConfig& cfg, std::vector<int> truncations = {},
                                    int start = 30, int max_n = 400, double tolerance = 1e-4);

/// Single operating-point evaluation used by every runner.
SweepRow evaluate_point(const ExperimentConfig& cfg, const BlockParams& params);

struct PointOutcome {
  SweepRow row;
  PulseSegment segment;
  QState final_state;
  /// Reduced state of the mode(s), on the ideal gate's layout.
  DensityMatrix modes;
  /// Ideal output on the same layout.
  QState target;
};

/// evaluate_point at cfg.params, keeping the states.
PointOutcome run_operating_point(const ExperimentConfig& cfg);

/// Ratio grid used when a sweep names no grid; contains the operating ratio.
std::vector<double> default_ratio_grid(OpKind op);

enum class OutputFormat { csv, json };
OutputFormat parse_output_format(std::string_view text);
std::string csv_header();
std::string to_csv(const SweepResult& result);
std::string to_json(const SweepResult& result);
/// Throws IoError naming the path.
void write_results(const SweepResult& result, const std::string& path, OutputFormat format);
/// <opkind>_<sweptname>_<timestamp>.<ext>.
std::string result_file_name(const SweepResult& result, OutputFormat format, const std::string& timestamp);

/// Params, conventions and version strings attached to every result.
std::map<std::string, std::string> result_metadata(const ExperimentConfig& cfg);
std::string version_string();

/// Worker count from CVQPU_THREADS (capped at the hardware count) or `requested`.
unsigned worker_count(unsigned requested = 0);

}  // namespace cvqpu
