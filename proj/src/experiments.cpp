#include "cvqpu/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <thread>

#include "json.hpp"

namespace cvqpu {

namespace {

constexpr double kFlagThreshold = 1e-6;

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string describe_factor(const FactorSpec& f) {
  if (f.kind == FactorSpec::Kind::fock) return "fock:" + std::to_string(f.n);
  return "coherent:" + fmt12(f.amplitude.real()) + "," + fmt12(f.amplitude.imag());
}

bool is_default_target(const ExperimentConfig& cfg) { return std::isnan(cfg.target.real()); }

std::vector<std::string> mode_labels(OpKind op) {
  return op == OpKind::beamsplitter ? std::vector<std::string>{"M1", "M2"} : std::vector<std::string>{"M"};
}

/// Initial state over the op's layout: initial_mode on the first mode (vacuum for the
/// displacement), vacuum on M2, |+> on F for squeezing, |g> on other qubits.
PreparedState initial_state(const ExperimentConfig& cfg, const SubsystemLayout& layout) {
  std::vector<FactorSpec> factors;
  for (const auto& slot : layout.slots()) {
    if (slot.label == "M" || slot.label == "M1")
      factors.push_back(cfg.op == OpKind::displacement ? FactorSpec::fock(0) : cfg.initial_mode);
    else if (is_mode_label(slot.label))
      factors.push_back(FactorSpec::fock(0));
    else if (slot.label == "F" && cfg.op == OpKind::squeezing)
      factors.push_back(FactorSpec::plus());
    else
      factors.push_back(FactorSpec::ground());
  }
  return make_state(factors, layout);
}

/// Initial state restricted to the modes, on the ideal gate's layout.
QState initial_modes(const ExperimentConfig& cfg, const SubsystemLayout& mode_layout) {
  std::vector<FactorSpec> factors;
  for (std::size_t k = 0; k < mode_layout.size(); ++k)
    factors.push_back(k == 0 && cfg.op != OpKind::displacement ? cfg.initial_mode : FactorSpec::fock(0));
  return make_state(factors, mode_layout).state;
}

double mean_photons(const ExperimentConfig& cfg) {
  if (cfg.op == OpKind::displacement) return std::norm(target_gate(cfg).value);
  return factor_mean_photons(cfg.initial_mode);
}

int truncation_for(const ExperimentConfig& cfg) { return cfg.trunc_n > 0 ? cfg.trunc_n : default_truncation(cfg.op); }

using PointRun = PointOutcome;

PulseSegment segment_for(const ExperimentConfig& cfg, const BlockParams& params) {
  PulseSegment seg = calibrate(target_gate(cfg), params, cfg.options);
  if (cfg.op == OpKind::kerr && cfg.kerr_revival) {
    const double kappa = gate_rate(OpKind::kerr, params, cfg.options);
    if (kappa == 0.0) throw SingularModelError("kappa_0 = 0: no Kerr revival");
    seg.tau = 2.0 * kPi / std::abs(kappa);
  }
  if (cfg.tau_override > 0.0) seg.tau = cfg.tau_override;
  return seg;
}

GateSpec comparison_gate(const ExperimentConfig& cfg) {
  GateSpec g = target_gate(cfg);
  if (cfg.op == OpKind::kerr && cfg.kerr_revival) g.value = 0.0;
  return g;
}

PointRun run_point(const ExperimentConfig& cfg, const BlockParams& params) {
  const int n = truncation_for(cfg);
  const SubsystemLayout layout = op_layout(cfg.op, n);
  const PreparedState prep = initial_state(cfg, layout);
  const PulseSegment seg = segment_for(cfg, params);
  const GateRun run = evolve_gate(seg, params, prep.state, cfg.options, cfg.integrator);

  const Operator ideal = ideal_gate(comparison_gate(cfg), n);
  PointRun out;
  out.segment = seg;
  out.final_state = run.state;
  out.target = apply(ideal, initial_modes(cfg, ideal.layout()));
  out.modes = DensityMatrix(partial_trace(run.state, mode_labels(cfg.op)).matrix(), ideal.layout());

  SweepRow& row = out.row;
  row.ratio = dispersive_ratio(cfg.op, params, cfg.options);
  row.fidelity = fidelity(out.target.amplitudes(), out.modes);
  row.gauge_fidelity = gauge_fidelity(out.target.amplitudes(), out.modes).fidelity;
  row.gate_time = seg.tau;
  row.trunc_n = n;
  row.norm_drift = run.diagnostics.norm_drift;
  const PhotonStats stats = photon_stats(out.modes);
  row.leakage = prep.leakage;
  for (double e : stats.edge_population) row.leakage = std::max(row.leakage, e);
  const RegimeReport regime = validate_regime(cfg.op, params, mean_photons(cfg), cfg.regime_threshold);
  row.regime_pass = regime.pass;
  for (const auto& c : regime.conditions)
    if (!c.pass) row.note += (row.note.empty() ? "" : "; ") + c.name + " ratio " + fmt12(c.ratio);
  row.flagged = row.norm_drift >= kFlagThreshold || row.leakage >= kFlagThreshold;
  return out;
}

BlockParams point_params(const ExperimentConfig& cfg, double value) {
  BlockParams p = cfg.params;
  if (cfg.swept_name == "ratio")
    set_dispersive_ratio(cfg.op, p, value, cfg.options);
  else
    set_param(p, cfg.swept_name, value);
  return p;
}

/// Runs job(i) for i in [0, count) on a worker pool; rethrows the first error
/// in index order.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  const unsigned workers = std::max(1u, std::min<unsigned>(worker_count(threads), static_cast<unsigned>(count)));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Fills swept_name/swept_value for a run at the configured operating point.
SweepRow operating_row(const ExperimentConfig& cfg, SweepRow row, std::string& swept_name) {
  if (swept_name.empty()) swept_name = ratio_parameter(cfg.op);
  row.swept_value = swept_name == "ratio" ? row.ratio : get_param(cfg.params, swept_name);
  return row;
}

SweepResult sweep(const ExperimentConfig& cfg, std::vector<PointRun>* runs = nullptr) {
  cfg.validate();
  SweepResult result;
  result.op = cfg.op;
  result.swept_name = cfg.swept_name;
  result.metadata = result_metadata(cfg);

  const bool grid = !cfg.grid.empty();
  if (grid && cfg.swept_name.empty()) throw ConfigError("a sweep grid needs a swept parameter name");
  const std::size_t count = grid ? cfg.grid.size() : 1;
  std::vector<PointRun> points(count);
  parallel_for(count, cfg.threads, [&](std::size_t i) {
    const BlockParams p = grid ? point_params(cfg, cfg.grid[i]) : cfg.params;
    try {
      points[i] = run_point(cfg, p);
    } catch (const SingularModelError& e) {
      SweepRow& row = points[i].row;
      row.fidelity = row.gauge_fidelity = std::numeric_limits<double>::quiet_NaN();
      row.ratio = std::numeric_limits<double>::quiet_NaN();
      row.trunc_n = truncation_for(cfg);
      row.flagged = true;
      row.regime_pass = false;
      row.note = e.what();
    }
  });
  for (std::size_t i = 0; i < count; ++i) {
    SweepRow row = points[i].row;
    if (grid)
      row.swept_value = cfg.grid[i];
    else
      row = operating_row(cfg, row, result.swept_name);
    result.rows.push_back(row);
  }
  if (runs) *runs = std::move(points);
  return result;
}

/// Squeezing without a configured truncation is sized by a convergence study
/// at the operating point.
ExperimentConfig with_truncation(const ExperimentConfig& cfg, SweepResult* note_to = nullptr) {
  if (cfg.trunc_n > 0 || cfg.op != OpKind::squeezing) return cfg;
  ExperimentConfig sized = cfg;
  const ConvergenceReport report = convergence_study(cfg);
  sized.trunc_n = report.converged ? report.declared_n : report.points.back().n;
  if (note_to) note_to->metadata["trunc_auto"] = report.converged ? "converged" : "not converged";
  return sized;
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  params.validate();
  integrator.validate();
  if (trunc_n != 0 && trunc_n < 16) throw ConfigError("truncation must be at least 16 levels per mode");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const bool up = grid[1] > grid[0];
    if (up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
      throw ConfigError("sweep grid must be strictly monotone");
  }
  for (double v : grid)
    if (!std::isfinite(v)) throw ConfigError("sweep grid values must be finite");
  if (!swept_name.empty() && swept_name != "ratio") {
    const auto& keys = block_param_keys();
    if (std::find(keys.begin(), keys.end(), swept_name) == keys.end())
      throw ConfigError("unknown swept parameter '" + swept_name + "'");
  }
  if (tau_override < 0.0 || !std::isfinite(tau_override)) throw ConfigError("tau_override must be >= 0");
  using K = FactorSpec::Kind;
  if (initial_mode.kind != K::fock && initial_mode.kind != K::coherent)
    throw ConfigError("the initial mode state must be a Fock or coherent state");
  if (!std::isfinite(initial_mode.amplitude.real()) || !std::isfinite(initial_mode.amplitude.imag()))
    throw ConfigError("initial amplitude must be finite");
  if (initial_mode.n < 0) throw ConfigError("Fock level must be non-negative");
}

GateSpec target_gate(const ExperimentConfig& cfg) {
  const bool dflt = is_default_target(cfg);
  switch (cfg.op) {
    case OpKind::rotation: return GateSpec::rotation(dflt ? kPi : cfg.target.real());
    case OpKind::displacement: return GateSpec::displacement(dflt ? Complex(2.0) : cfg.target);
    case OpKind::squeezing: return GateSpec::squeeze(dflt ? Complex(1.7) : cfg.target);
    case OpKind::kerr: return GateSpec::kerr(dflt ? kPi / 2 : cfg.target.real());
    case OpKind::beamsplitter: return GateSpec::beamsplitter(dflt ? kPi / 2 : cfg.target.real(), cfg.phi, 0, 1);
  }
  throw ConfigError("unknown op");
}

double factor_mean_photons(const FactorSpec& f) {
  switch (f.kind) {
    case FactorSpec::Kind::coherent: return std::norm(f.amplitude);
    case FactorSpec::Kind::fock: return f.n;
    default: return 0.0;
  }
}

int default_truncation(OpKind op) {
  switch (op) {
    case OpKind::beamsplitter: return 28;
    case OpKind::squeezing: return 120;
    default: return 40;
  }
}

double dispersive_ratio(OpKind op, const BlockParams& p, const ModelOptions& o) {
  auto ratio = [](double num, double den) {
    return den == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(num / den);
  };
  switch (op) {
    case OpKind::rotation: return ratio(p.omega_m - p.omega_r, p.g_mr);
    case OpKind::displacement: return ratio(p.omega_m, p.Omega_D);
    case OpKind::squeezing: return ratio(p.Omega_S, p.g0);
    case OpKind::kerr: return ratio(p.omega_f, p.g_mf);
    case OpKind::beamsplitter: return ratio(coupler_detuning(p, o.detuning), p.g_mb);
  }
  return 0.0;
}

std::string ratio_parameter(OpKind op) {
  switch (op) {
    case OpKind::rotation: return "omega_r";
    case OpKind::displacement: return "Omega_D";
    case OpKind::squeezing: return "Omega_S";
    case OpKind::kerr: return "g_mf";
    case OpKind::beamsplitter: return "omega_b";
  }
  return {};
}

void set_dispersive_ratio(OpKind op, BlockParams& p, double ratio, const ModelOptions& o) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw ConfigError("dispersive ratio must be positive and finite");
  switch (op) {
    case OpKind::rotation: {
      const double sign = p.omega_m - p.omega_r < 0.0 ? -1.0 : 1.0;
      p.omega_r = p.omega_m - sign * ratio * std::abs(p.g_mr);
      break;
    }
    case OpKind::displacement: p.Omega_D = p.omega_m / ratio; break;
    case OpKind::squeezing: p.Omega_S = ratio * std::abs(p.g0); break;
    case OpKind::kerr: p.g_mf = p.omega_f / ratio; break;
    case OpKind::beamsplitter: {
      const double sign = coupler_detuning(p, o.detuning) < 0.0 ? -1.0 : 1.0;
      p.omega_b = coupler_frequency_for(p, sign * ratio * std::abs(p.g_mb), o.detuning);
      break;
    }
  }
}

double kerr_ratio_for_gate_time(const BlockParams& params, double tau, double chi, const ModelOptions& o) {
  if (!(tau > 0.0)) throw ConfigError("Kerr gate time must be positive");
  const double kappa = kerr_constants(params, o.kappa).kappa0;
  if (kappa == 0.0) throw SingularModelError("kappa_0 = 0 at the reference point");
  const double tau_ref = std::abs(chi / kappa);
  // kappa_0 is proportional to g_mf^2.
  const double g = std::abs(params.g_mf) * std::sqrt(tau_ref / tau);
  return params.omega_f / g;
}

// ---------------------------------------------------------------------------

SweepRow evaluate_point(const ExperimentConfig& cfg, const BlockParams& params) {
  return run_point(cfg, params).row;
}

PointOutcome run_operating_point(const ExperimentConfig& in) {
  const ExperimentConfig cfg = with_truncation(in);
  cfg.validate();
  PointOutcome out = run_point(cfg, cfg.params);
  std::string name = cfg.swept_name;
  out.row = operating_row(cfg, out.row, name);
  return out;
}

std::vector<double> default_ratio_grid(OpKind op) {
  switch (op) {
    case OpKind::rotation: return {10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 6e9 / 1.05e8, 60};
    case OpKind::displacement: return {20, 50, 100, 1e10 / 6e7, 300};
    case OpKind::squeezing: return {2, 4, 6, 8, 10, 12, 14, 16, 1.5e8 / 8.3e6, 20, 25, 30};
    case OpKind::kerr: return {50, 100, 150, 200, 300, 400, 483, 600};
    case OpKind::beamsplitter: return {10, 15, 20, 30, 40, 5e9 / 1.04e8, 60};
  }
  return {};
}

SweepResult run_single_mode_sweep(const ExperimentConfig& cfg) {
  if (cfg.op != OpKind::rotation && cfg.op != OpKind::squeezing && cfg.op != OpKind::kerr)
    throw ConfigError("single-mode sweeps cover rotation, squeezing and kerr");
  SweepResult note;
  const ExperimentConfig sized = with_truncation(cfg, &note);
  SweepResult result = sweep(sized);
  for (auto& [k, v] : note.metadata) result.metadata[k] = v;
  return result;
}

SweepResult run_displacement_check(const ExperimentConfig& cfg) {
  if (cfg.op != OpKind::displacement) throw ConfigError("displacement check needs op = displacement");
  if (!(cfg.params.Omega_D > 0.0)) throw ConfigError("displacement check needs Omega_D > 0");
  ExperimentConfig single = cfg;
  single.grid.clear();
  return sweep(single);
}

SweepResult run_beamsplitter_experiment(const ExperimentConfig& cfg) {
  if (cfg.op != OpKind::beamsplitter) throw ConfigError("beam-splitter experiment needs op = beamsplitter");
  std::vector<PointRun> runs;
  SweepResult result = sweep(cfg, &runs);
  const std::size_t pick = cfg.grid.empty() ? 0 : runs.size() - 1;
  const PointRun& run = runs[pick];
  if (run.final_state.dim() > 0) {
    const int n = run.row.trunc_n;
    const SubsystemLayout single = SubsystemLayout::single("M", n);
    const DensityMatrix m1(partial_trace(run.final_state, {"M1"}).matrix(), single);
    const DensityMatrix m2(partial_trace(run.final_state, {"M2"}).matrix(), single);
    TransferSnapshot snap;
    snap.m2_amplitude = best_fit_coherent(m2);
    snap.m2_mean_photons = photon_stats(m2).mean.front();
    snap.m1_mean_photons = photon_stats(m1).mean.front();
    snap.tau = run.row.gate_time;
    result.snapshot = snap;
  }
  return result;
}

SweepResult run_blocking_check(const ExperimentConfig& cfg) {
  if (cfg.op != OpKind::beamsplitter) throw ConfigError("blocking check needs op = beamsplitter");
  cfg.validate();
  const int n = truncation_for(cfg);
  PulseSegment seg = segment_for(cfg, cfg.params);
  BlockParams parked = cfg.params;
  parked.omega_b = coupler_frequency_for(parked, blocking_detuning(parked.g_mb, parked.lambda), cfg.options.detuning);
  seg.virtual_phase = 0.0;

  const SubsystemLayout layout = op_layout(OpKind::beamsplitter, n);
  const PreparedState prep = initial_state(cfg, layout);
  const GateRun run = evolve_gate(seg, parked, prep.state, cfg.options, cfg.integrator);
  const SubsystemLayout single = SubsystemLayout::single("M", n);
  const DensityMatrix m1(partial_trace(run.state, {"M1"}).matrix(), single);
  const CVector initial = factor_vector(cfg.initial_mode, n);

  SweepResult result;
  result.op = cfg.op;
  result.swept_name = "omega_b";
  result.metadata = result_metadata(cfg);
  result.metadata["experiment"] = "blocking";
  SweepRow row;
  row.swept_value = parked.omega_b;
  row.ratio = dispersive_ratio(OpKind::beamsplitter, parked, cfg.options);
  row.fidelity = fidelity(initial, m1);
  row.gauge_fidelity = gauge_fidelity(initial, m1).fidelity;
  row.gate_time = seg.tau;
  row.trunc_n = n;
  row.norm_drift = run.diagnostics.norm_drift;
  row.leakage = prep.leakage;
  const DensityMatrix modes(partial_trace(run.state, {"M1", "M2"}).matrix(),
                            SubsystemLayout({{"M1", n}, {"M2", n}}));
  for (double e : photon_stats(modes).edge_population) row.leakage = std::max(row.leakage, e);
  row.flagged = row.norm_drift >= kFlagThreshold || row.leakage >= kFlagThreshold;
  const RegimeReport regime = validate_regime(OpKind::beamsplitter, parked, mean_photons(cfg), cfg.regime_threshold);
  row.regime_pass = regime.pass;
  result.rows.push_back(row);
  TransferSnapshot snap;
  snap.m2_amplitude = best_fit_coherent(DensityMatrix(partial_trace(run.state, {"M2"}).matrix(), single));
  snap.m1_mean_photons = photon_stats(m1).mean.front();
  snap.tau = seg.tau;
  result.snapshot = snap;
  return result;
}

OracleReport run_oracle_comparison(const ExperimentConfig& in) {
  const ExperimentConfig cfg = with_truncation(in);
  cfg.validate();
  const QubitHint hint = cfg.op == OpKind::squeezing ? QubitHint::plus : QubitHint::g;
  const bool grid = !cfg.grid.empty();
  if (grid && cfg.swept_name.empty()) throw ConfigError("a sweep grid needs a swept parameter name");
  const std::size_t count = grid ? cfg.grid.size() : 1;
  OracleReport report;
  report.op = cfg.op;
  report.rows.resize(count);
  parallel_for(count, cfg.threads, [&](std::size_t i) {
    const BlockParams p = grid ? point_params(cfg, cfg.grid[i]) : cfg.params;
    const int n = truncation_for(cfg);
    const SubsystemLayout layout = op_layout(cfg.op, n);
    const QState psi = initial_state(cfg, layout).state;
    const PulseSegment seg = segment_for(cfg, p);
    const GateRun full = evolve_gate(seg, p, psi, cfg.options, cfg.integrator);
    const GateRun eff = evolve_effective(seg, p, psi, hint, cfg.options, cfg.integrator);
    const Operator ideal = ideal_gate(comparison_gate(cfg), n);
    const QState target = apply(ideal, initial_modes(cfg, ideal.layout()));
    const DensityMatrix rf(partial_trace(full.state, mode_labels(cfg.op)).matrix(), ideal.layout());
    const DensityMatrix re(partial_trace(eff.state, mode_labels(cfg.op)).matrix(), ideal.layout());
    OracleRow& row = report.rows[i];
    row.swept_value = grid ? cfg.grid[i] : dispersive_ratio(cfg.op, p, cfg.options);
    row.ratio = dispersive_ratio(cfg.op, p, cfg.options);
    row.full_vs_effective = fidelity(rf, re);
    row.ideal_vs_full = fidelity(target.amplitudes(), rf);
    row.ideal_vs_effective = fidelity(target.amplitudes(), re);
  });
  return report;
}

ConvergenceReport convergence_study(const ExperimentConfig& cfg, std::vector<int> truncations, int start, int max_n,
                                    double tolerance) {
  ConvergenceReport report;
  const bool automatic = truncations.empty();
  if (!automatic) {
    if (!std::is_sorted(truncations.begin(), truncations.end()) ||
        std::adjacent_find(truncations.begin(), truncations.end()) != truncations.end())
      throw ConfigError("truncations must be strictly increasing");
  }
  auto run_n = [&](int n) {
    ExperimentConfig c = cfg;
    c.trunc_n = n;
    c.grid.clear();
    c.validate();
    const SweepRow row = run_point(c, c.params).row;
    ConvergencePoint pt{n, row.fidelity, row.leakage, std::numeric_limits<double>::quiet_NaN()};
    if (!report.points.empty()) {
      const ConvergencePoint& prev = report.points.back();
      pt.delta = std::abs(pt.fidelity - prev.fidelity);
      if (pt.leakage > prev.leakage * (1.0 + 1e-6) + 1e-14) report.leakage_monotone = false;
      if (!report.converged && pt.delta < tolerance) {
        report.converged = true;
        report.declared_n = prev.n;
      }
    }
    report.points.push_back(pt);
  };
  if (automatic) {
    for (int n = std::max(start, 16); n <= max_n && !report.converged; n += 10) run_n(n);
  } else {
    for (int n : truncations) run_n(n);
  }
  return report;
}

// ---------------------------------------------------------------------------

OutputFormat parse_output_format(std::string_view text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + std::string(text) + "' (csv or json)");
}

std::string csv_header() { return "swept_name,swept_value,ratio,fidelity,gate_time_s,trunc_N,norm_drift,leakage\n"; }

std::string to_csv(const SweepResult& r) {
  std::string out = csv_header();
  for (const auto& row : r.rows) {
    out += r.swept_name + ',' + fmt12(row.swept_value) + ',' + fmt12(row.ratio) + ',' + fmt12(row.fidelity) + ',' +
           fmt12(row.gate_time) + ',' + std::to_string(row.trunc_n) + ',' + fmt12(row.norm_drift) + ',' +
           fmt12(row.leakage) + '\n';
  }
  return out;
}

namespace {

/// Numbers go through their 12-digit rendering so CSV and JSON agree.
nlohmann::ordered_json num(double v) {
  if (!std::isfinite(v)) return fmt12(v);
  return std::stod(fmt12(v));
}

}  // namespace

std::string to_json(const SweepResult& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json meta, params, conventions;
  for (const auto& [k, v] : r.metadata) {
    if (k.rfind("param.", 0) == 0)
      params[k.substr(6)] = num(std::stod(v));
    else if (k.rfind("convention.", 0) == 0)
      conventions[k.substr(11)] = v;
    else
      meta[k] = v;
  }
  meta["params"] = params;
  meta["conventions"] = conventions;
  j["metadata"] = meta;
  j["swept_name"] = r.swept_name;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json e;
    e["swept_value"] = num(row.swept_value);
    e["ratio"] = num(row.ratio);
    e["fidelity"] = num(row.fidelity);
    e["gate_time_s"] = num(row.gate_time);
    e["trunc_N"] = row.trunc_n;
    e["norm_drift"] = num(row.norm_drift);
    e["leakage"] = num(row.leakage);
    e["gauge_fidelity"] = num(row.gauge_fidelity);
    e["regime_pass"] = row.regime_pass;
    e["flagged"] = row.flagged;
    if (!row.note.empty()) e["note"] = row.note;
    rows.push_back(std::move(e));
  }
  if (r.snapshot) {
    const auto& s = *r.snapshot;
    j["snapshot"] = {{"m2_amplitude_re", num(s.m2_amplitude.real())},
                     {"m2_amplitude_im", num(s.m2_amplitude.imag())},
                     {"m2_amplitude_abs", num(std::abs(s.m2_amplitude))},
                     {"m2_mean_photons", num(s.m2_mean_photons)},
                     {"m1_mean_photons", num(s.m1_mean_photons)},
                     {"tau", num(s.tau)}};
  }
  return j.dump(2) + "\n";
}

void write_results(const SweepResult& result, const std::string& path, OutputFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (format == OutputFormat::csv ? to_csv(result) : to_json(result));
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string result_file_name(const SweepResult& result, OutputFormat format, const std::string& timestamp) {
  std::string name = std::string(to_string(result.op)) + '_' + (result.swept_name.empty() ? "point" : result.swept_name);
  if (!timestamp.empty()) name += '_' + timestamp;
  return name + (format == OutputFormat::csv ? ".csv" : ".json");
}

std::string version_string() { return "cvqpu 1.0.0"; }

std::map<std::string, std::string> result_metadata(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : to_map(cfg.params)) m["param." + k] = fmt12(v);
  for (const auto& [k, v] : convention_ids(cfg.options)) m["convention." + k] = v;
  m["version"] = version_string();
  m["op_kind"] = std::string(to_string(cfg.op));
  const GateSpec g = target_gate(cfg);
  m["target"] = g.describe();
  m["initial_mode"] = describe_factor(cfg.initial_mode);
  m["trunc_N"] = std::to_string(truncation_for(cfg));
  m["rtol"] = fmt12(cfg.integrator.rtol);
  m["atol"] = fmt12(cfg.integrator.atol);
  m["regime_threshold"] = fmt12(cfg.regime_threshold);
  if (cfg.tau_override > 0.0) m["tau_override"] = fmt12(cfg.tau_override);
  if (cfg.kerr_revival) m["kerr_point"] = "revival";
  return m;
}

unsigned worker_count(unsigned requested) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (requested > 0) return std::min(requested, hw);
  if (const char* env = std::getenv("CVQPU_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return std::min<unsigned>(static_cast<unsigned>(v), hw);
  }
  return hw;
}

}  // namespace cvqpu
