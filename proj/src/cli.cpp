#include "cvqpu/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace cvqpu {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double to_double(std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ConfigError("'" + t + "' is not a number");
  return v;
}

long to_long(std::string_view text) {
  const double v = to_double(text);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError("'" + trim(text) + "' is not an integer");
  return static_cast<long>(v);
}

bool to_bool(std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("'" + t + "' is not a boolean");
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// "a,b,c" or "start:stop:count" (inclusive, evenly spaced).
std::vector<double> parse_grid(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return {};
  if (t.find(':') != std::string::npos) {
    const auto parts = split(t, ':');
    if (parts.size() != 3) throw ConfigError("grid range must be start:stop:count");
    const double a = to_double(parts[0]), b = to_double(parts[1]);
    const long n = to_long(parts[2]);
    if (n < 1) throw ConfigError("grid count must be >= 1");
    std::vector<double> g(n);
    for (long k = 0; k < n; ++k) g[k] = n == 1 ? a : a + (b - a) * double(k) / double(n - 1);
    return g;
  }
  std::vector<double> g;
  for (const auto& p : split(t, ',')) g.push_back(to_double(p));
  return g;
}

/// "x" or "re,im".
Complex parse_complex(std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() == 1) return {to_double(parts[0]), 0.0};
  if (parts.size() == 2) return {to_double(parts[0]), to_double(parts[1])};
  throw ConfigError("'" + trim(text) + "' is not a real or re,im pair");
}

std::string factor_text(const FactorSpec& f) {
  if (f.kind == FactorSpec::Kind::fock) return "fock:" + std::to_string(f.n);
  return "coherent:" + g17(f.amplitude.real()) + "," + g17(f.amplitude.imag());
}

void set_key(RunConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  ExperimentConfig& e = cfg.experiment;
  auto unknown = [&] { return ConfigError("unknown key '" + key + "' in [" + section + "]"); };
  if (section == "device") {
    const auto& keys = block_param_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw unknown();
    set_param(e.params, key, to_double(value));
  } else if (section == "model") {
    const auto& keys = model_option_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw unknown();
    set_option(e.options, key, trim(value));
  } else if (section == "experiment") {
    if (key == "op") e.op = parse_op_kind(trim(value));
    else if (key == "swept") e.swept_name = trim(value);
    else if (key == "grid") e.grid = parse_grid(value);
    else if (key == "target") e.target = trim(value).empty() ? Complex(std::nan(""), 0.0) : parse_complex(value);
    else if (key == "phi") e.phi = to_double(value);
    else if (key == "initial") e.initial_mode = FactorSpec::parse(trim(value));
    else if (key == "trunc_n") e.trunc_n = static_cast<int>(to_long(value));
    else if (key == "tau_override") e.tau_override = to_double(value);
    else if (key == "kerr_revival") e.kerr_revival = to_bool(value);
    else if (key == "regime_threshold") e.regime_threshold = to_double(value);
    else if (key == "threads") e.threads = static_cast<unsigned>(std::max(0L, to_long(value)));
    else if (key == "modes") cfg.chain_modes = static_cast<std::size_t>(std::max(0L, to_long(value)));
    else throw unknown();
  } else if (section == "integrator") {
    IntegratorConfig& i = e.integrator;
    if (key == "rtol") i.rtol = to_double(value);
    else if (key == "atol") i.atol = to_double(value);
    else if (key == "initial_step") i.initial_step = to_double(value);
    else if (key == "max_steps") i.max_steps = to_long(value);
    else if (key == "krylov_threshold") i.krylov_threshold = to_long(value);
    else if (key == "krylov_tol") i.krylov_tol = to_double(value);
    else throw unknown();
  } else if (section == "output") {
    if (key == "dir") cfg.output.dir = trim(value);
    else if (key == "format") cfg.output.format = parse_output_format(trim(value));
    else if (key == "name") cfg.output.name = trim(value);
    else throw unknown();
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cut = line.find_first_of("#;");
    const std::string body = trim(cut == std::string::npos ? line : line.substr(0, cut));
    if (body.empty()) continue;
    try {
      if (body.front() == '[') {
        if (body.back() != ']') throw ConfigError("malformed section header '" + body + "'");
        section = trim(body.substr(1, body.size() - 2));
        static const std::vector<std::string> known{"device", "model", "experiment", "integrator", "output"};
        if (std::find(known.begin(), known.end(), section) == known.end())
          throw ConfigError("unknown section [" + section + "]");
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + body + "'");
      if (section.empty()) throw ConfigError("key outside of a section");
      const std::string key = trim(body.substr(0, eq));
      set_key(cfg, section, key, body.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const std::string lhs = trim(assignment.substr(0, eq));
  const auto dot = lhs.find('.');
  if (eq == std::string_view::npos || dot == std::string::npos)
    throw ConfigError("override '" + std::string(assignment) + "' must look like section.key=value");
  try {
    set_key(cfg, lhs.substr(0, dot), lhs.substr(dot + 1), std::string(assignment.substr(eq + 1)));
  } catch (const ConfigError& e) {
    throw ConfigError("override '" + std::string(assignment) + "': " + e.what());
  }
}

std::string serialize_config(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  std::ostringstream out;
  out << "[device]\n";
  for (const auto& k : block_param_keys()) out << k << " = " << g17(get_param(e.params, k)) << "\n";
  out << "\n[model]\n";
  const auto ids = convention_ids(e.options);
  for (const auto& k : model_option_keys()) out << k << " = " << ids.at(k) << "\n";
  out << "\n[experiment]\n";
  out << "op = " << to_string(e.op) << "\n";
  out << "swept = " << e.swept_name << "\n";
  out << "grid = ";
  for (std::size_t i = 0; i < e.grid.size(); ++i) out << (i ? "," : "") << g17(e.grid[i]);
  out << "\n";
  if (!std::isnan(e.target.real())) out << "target = " << g17(e.target.real()) << "," << g17(e.target.imag()) << "\n";
  out << "phi = " << g17(e.phi) << "\n";
  out << "initial = " << factor_text(e.initial_mode) << "\n";
  out << "trunc_n = " << e.trunc_n << "\n";
  out << "tau_override = " << g17(e.tau_override) << "\n";
  out << "kerr_revival = " << (e.kerr_revival ? "true" : "false") << "\n";
  out << "regime_threshold = " << g17(e.regime_threshold) << "\n";
  out << "threads = " << e.threads << "\n";
  out << "modes = " << cfg.chain_modes << "\n";
  const IntegratorConfig& i = e.integrator;
  out << "\n[integrator]\n";
  out << "rtol = " << g17(i.rtol) << "\natol = " << g17(i.atol) << "\ninitial_step = " << g17(i.initial_step)
      << "\nmax_steps = " << i.max_steps << "\nkrylov_threshold = " << i.krylov_threshold
      << "\nkrylov_tol = " << g17(i.krylov_tol) << "\n";
  out << "\n[output]\n";
  out << "dir = " << cfg.output.dir << "\nformat = " << (cfg.output.format == OutputFormat::csv ? "csv" : "json")
      << "\nname = " << cfg.output.name << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string output_path(const OutputConfig& o, const std::string& stem, const std::string& ext) {
  std::filesystem::path dir(o.dir.empty() ? "." : o.dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const std::string name = o.name.empty() ? stem + "_" + timestamp() : o.name;
  return (dir / (name + ext)).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string ext_of(OutputFormat f) { return f == OutputFormat::csv ? ".csv" : ".json"; }

void print_conventions(std::ostream& out, const ModelOptions& o) {
  out << "conventions:";
  for (const auto& [k, v] : convention_ids(o)) out << " " << k << "=" << v << ";";
  out << "\n";
}

void print_regime(std::ostream& out, const RegimeReport& r) {
  out << "regime " << to_string(r.op) << ": " << (r.pass ? "pass" : "FAIL") << "\n";
  for (const auto& c : r.conditions)
    out << "  " << c.name << " = " << g12(c.ratio) << " (need > " << g12(c.threshold) << ") "
        << (c.pass ? "ok" : "fail") << "\n";
}

double mean_photons(const ExperimentConfig& e) {
  if (e.op == OpKind::displacement) return std::norm(target_gate(e).value);
  return factor_mean_photons(e.initial_mode);
}

/// Regime check at the operating point; returns false (after reporting) when
/// the run must stop.
bool regime_gate(const RunConfig& cfg, bool force, std::ostream& out, std::ostream& err) {
  const ExperimentConfig& e = cfg.experiment;
  const RegimeReport r = validate_regime(e.op, e.params, mean_photons(e), e.regime_threshold);
  if (r.pass) return true;
  print_regime(force ? out : err, r);
  if (force) {
    out << "continuing despite regime failure (--force)\n";
    return true;
  }
  err << "regime validation failed; rerun with --force to proceed\n";
  return false;
}

/// Writes a result and, for CSV, its metadata alongside as JSON.
std::string emit(const SweepResult& result, const OutputConfig& o) {
  const std::string stem = std::string(to_string(result.op)) + "_" +
                           (result.swept_name.empty() ? std::string("point") : result.swept_name);
  const std::string path = output_path(o, stem, ext_of(o.format));
  write_results(result, path, o.format);
  if (o.format == OutputFormat::csv) {
    SweepResult meta_only = result;
    meta_only.rows.clear();
    write_results(meta_only, path + ".meta.json", OutputFormat::json);
  }
  return path;
}

void print_rows(std::ostream& out, const SweepResult& r) {
  for (const auto& row : r.rows) {
    out << "  " << r.swept_name << "=" << g12(row.swept_value) << " ratio=" << g12(row.ratio)
        << " F=" << std::fixed << std::setprecision(6) << row.fidelity << std::defaultfloat
        << " tau=" << g12(row.gate_time) << "s N=" << row.trunc_n;
    if (row.flagged) out << " FLAGGED";
    if (!row.note.empty()) out << " [" << row.note << "]";
    out << "\n";
  }
}

struct CommonOpts {
  std::string config;
  std::vector<std::string> sets;
  std::string out_dir, format, name;
  bool force = false;
  bool verbose = false;
};

RunConfig load(const CommonOpts& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : parse_config(c.config);
  for (const auto& s : c.sets) apply_override(cfg, s);
  if (!c.out_dir.empty()) cfg.output.dir = c.out_dir;
  if (!c.format.empty()) cfg.output.format = parse_output_format(c.format);
  if (!c.name.empty()) cfg.output.name = c.name;
  cfg.experiment.params.validate();
  return cfg;
}

int cmd_sweep(RunConfig cfg, const CommonOpts& c, const std::string& op, const std::string& swept,
              const std::string& grid, std::ostream& out, std::ostream& err) {
  ExperimentConfig& e = cfg.experiment;
  if (!op.empty()) e.op = parse_op_kind(op);
  if (!swept.empty()) e.swept_name = swept;
  if (!grid.empty()) e.grid = parse_grid(grid);
  if (e.grid.empty()) {
    e.swept_name = "ratio";
    e.grid = default_ratio_grid(e.op);
  }
  if (e.swept_name.empty()) throw ConfigError("a sweep grid needs experiment.swept");
  if (!regime_gate(cfg, c.force, out, err)) return kExitRegime;
  SweepResult r;
  switch (e.op) {
    case OpKind::beamsplitter: r = run_beamsplitter_experiment(e); break;
    case OpKind::displacement: throw ConfigError("use the displace subcommand for displacements");
    default: r = run_single_mode_sweep(e); break;
  }
  const std::string path = emit(r, cfg.output);
  out << "sweep " << to_string(e.op) << " over " << r.swept_name << ": " << r.rows.size() << " points -> " << path
      << "\n";
  print_rows(out, r);
  if (r.snapshot)
    out << "  transfer: M2 best-fit amplitude |beta| = " << g12(std::abs(r.snapshot->m2_amplitude)) << "\n";
  print_conventions(out, e.options);
  return kExitOk;
}

int cmd_displace(RunConfig cfg, const CommonOpts& c, std::ostream& out, std::ostream& err) {
  cfg.experiment.op = OpKind::displacement;
  cfg.experiment.grid.clear();
  if (!regime_gate(cfg, c.force, out, err)) return kExitRegime;
  const SweepResult r = run_displacement_check(cfg.experiment);
  const std::string path = emit(r, cfg.output);
  out << "displacement " << target_gate(cfg.experiment).describe() << " -> " << path << "\n";
  print_rows(out, r);
  print_conventions(out, cfg.experiment.options);
  return kExitOk;
}

nlohmann::ordered_json segment_json(const PulseSegment& s) {
  nlohmann::ordered_json j;
  j["op_kind"] = std::string(to_string(s.op));
  j["gate"] = s.gate.describe();
  j["tau"] = s.tau;
  j["drive_phase"] = s.controls.drive_phase;
  j["modulation_phase"] = s.controls.modulation_phase;
  j["stark_angle"] = s.stark_angle;
  j["virtual_phase"] = s.virtual_phase;
  j["settings"] = s.settings;
  j["park"] = s.park;
  return j;
}

int cmd_gate(RunConfig cfg, const CommonOpts& c, const std::string& line, const std::string& state,
             std::ostream& out, std::ostream& err) {
  ExperimentConfig& e = cfg.experiment;
  if (!line.empty()) {
    const auto gates = parse_circuit(line);
    if (gates.size() != 1) throw ConfigError("--gate takes exactly one gate");
    e.op = gates[0].kind;
    e.target = gates[0].value;
    e.phi = gates[0].phi;
  }
  if (!state.empty()) e.initial_mode = FactorSpec::parse(state);
  e.grid.clear();
  if (!regime_gate(cfg, c.force, out, err)) return kExitRegime;
  const PointOutcome o = run_operating_point(e);
  const PhotonStats stats = photon_stats(o.modes);

  nlohmann::ordered_json j;
  j["metadata"] = result_metadata(e);
  j["segment"] = segment_json(o.segment);
  j["fidelity"] = o.row.fidelity;
  j["gauge_fidelity"] = o.row.gauge_fidelity;
  j["trunc_N"] = o.row.trunc_n;
  j["norm_drift"] = o.row.norm_drift;
  j["leakage"] = o.row.leakage;
  j["purity"] = stats.purity;
  j["modes"] = stats.modes;
  j["mean_photons"] = stats.mean;
  j["regime_pass"] = o.row.regime_pass;
  const std::string path = output_path(cfg.output, "gate_" + std::string(to_string(e.op)), ".json");
  write_text(path, j.dump(2) + "\n");

  out << "gate " << o.segment.gate.describe() << " -> " << path << "\n";
  out << "  tau = " << g12(o.segment.tau) << " s, fidelity = " << g12(o.row.fidelity)
      << ", gauge fidelity = " << g12(o.row.gauge_fidelity) << "\n";
  out << "  purity = " << g12(stats.purity);
  for (std::size_t k = 0; k < stats.modes.size(); ++k) out << ", <n_" << stats.modes[k] << "> = " << g12(stats.mean[k]);
  out << "\n  norm drift = " << g12(o.row.norm_drift) << ", leakage = " << g12(o.row.leakage) << "\n";
  print_conventions(out, e.options);
  return kExitOk;
}

int cmd_wigner(RunConfig cfg, const CommonOpts& c, const std::string& state, bool from_gate, const std::string& mode,
               const WignerGridSpec& grid, int trunc, std::ostream& out, std::ostream& err) {
  DensityMatrix rho;
  std::string what;
  if (from_gate) {
    ExperimentConfig& e = cfg.experiment;
    e.grid.clear();
    if (!regime_gate(cfg, c.force, out, err)) return kExitRegime;
    const PointOutcome o = run_operating_point(e);
    const std::string label = mode.empty() ? (e.op == OpKind::beamsplitter ? "M2" : "M") : mode;
    const DensityMatrix reduced = partial_trace(o.modes, {e.op == OpKind::beamsplitter ? label : "M"});
    rho = DensityMatrix(reduced.matrix(), SubsystemLayout::single("M", reduced.layout().total_dim()));
    what = o.segment.gate.describe() + " output, " + label;
  } else {
    const FactorSpec f = FactorSpec::parse(state.empty() ? "coherent:2" : state);
    const int n = trunc > 0 ? trunc : 40;
    rho = DensityMatrix::pure(make_state({f}, SubsystemLayout::single("M", n)).state);
    what = state.empty() ? "coherent:2" : state;
  }
  const WignerGrid w = wigner(rho, grid);
  const std::string path = output_path(cfg.output, "wigner", ext_of(cfg.output.format));
  if (cfg.output.format == OutputFormat::csv)
    write_wigner_csv(w, path);
  else
    write_wigner_json(w, path);
  nlohmann::ordered_json meta;
  meta["state"] = what;
  meta["conventions"] = convention_ids(cfg.experiment.options);
  meta["version"] = version_string();
  write_text(path + ".meta.json", meta.dump(2) + "\n");
  const auto [xm, pm] = w.argmax();
  out << "wigner of " << what << " -> " << path << "\n";
  out << "  peak at (x, p) = (" << g12(xm) << ", " << g12(pm) << "), min = " << g12(w.min())
      << ", integral = " << g12(w.integral()) << "\n";
  print_conventions(out, cfg.experiment.options);
  return kExitOk;
}

int cmd_compile(RunConfig cfg, const std::string& circuit_path, std::ostream& out) {
  std::ifstream in(circuit_path, std::ios::binary);
  if (!in) throw IoError("cannot read circuit '" + circuit_path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto circuit = parse_circuit(ss.str());
  std::size_t modes = std::max<std::size_t>(cfg.chain_modes, 1);
  if (cfg.chain_modes == 0)
    for (const auto& g : circuit)
      for (auto m : g.modes) modes = std::max(modes, m + 1);
  const Schedule sched = compile_schedule(circuit, uniform_chain(modes, cfg.experiment.params), cfg.experiment.options);
  const bool json = cfg.output.format == OutputFormat::json;
  const std::string path = output_path(cfg.output, "schedule", json ? ".json" : ".txt");
  write_text(path, json ? schedule_to_json(sched) : schedule_to_text(sched));
  nlohmann::ordered_json meta;
  meta["circuit"] = circuit_path;
  meta["modes"] = modes;
  meta["conventions"] = convention_ids(cfg.experiment.options);
  meta["version"] = version_string();
  write_text(path + ".meta.json", meta.dump(2) + "\n");
  out << "compiled " << circuit.size() << " gates on " << modes << " modes -> " << path << "\n";
  out << "  duration = " << g12(sched.duration) << " s\n";
  print_conventions(out, cfg.experiment.options);
  return kExitOk;
}

int cmd_converge(RunConfig cfg, const CommonOpts& c, const std::string& ns, double tol, std::ostream& out,
                 std::ostream& err) {
  ExperimentConfig& e = cfg.experiment;
  e.grid.clear();
  if (!regime_gate(cfg, c.force, out, err)) return kExitRegime;
  std::vector<int> list;
  if (!ns.empty())
    for (double v : parse_grid(ns)) list.push_back(static_cast<int>(v));
  const ConvergenceReport r = convergence_study(e, list, 30, 400, tol);
  std::ostringstream csv;
  csv << "trunc_N,fidelity,leakage,delta\n";
  for (const auto& p : r.points)
    csv << p.n << "," << g12(p.fidelity) << "," << g12(p.leakage) << "," << g12(p.delta) << "\n";
  const std::string path = output_path(cfg.output, "converge_" + std::string(to_string(e.op)), ".csv");
  write_text(path, csv.str());
  nlohmann::ordered_json meta;
  meta["metadata"] = result_metadata(e);
  meta["converged"] = r.converged;
  meta["declared_N"] = r.declared_n;
  meta["leakage_monotone"] = r.leakage_monotone;
  write_text(path + ".meta.json", meta.dump(2) + "\n");
  out << "convergence " << to_string(e.op) << " -> " << path << "\n";
  for (const auto& p : r.points)
    out << "  N=" << p.n << " F=" << g12(p.fidelity) << " leakage=" << g12(p.leakage) << " dF=" << g12(p.delta)
        << "\n";
  out << "  " << (r.converged ? "converged at N = " + std::to_string(r.declared_n) : std::string("NOT converged"))
      << (r.leakage_monotone ? "" : " (leakage not monotone)") << "\n";
  print_conventions(out, e.options);
  return r.converged ? kExitOk : kExitConvergence;
}

int cmd_validate(const RunConfig& cfg, const std::string& op, std::ostream& out) {
  ExperimentConfig e = cfg.experiment;
  if (!op.empty()) e.op = parse_op_kind(op);
  const RegimeReport r = validate_regime(e.op, e.params, mean_photons(e), e.regime_threshold);
  print_regime(out, r);
  print_conventions(out, e.options);
  return r.pass ? kExitOk : kExitRegime;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pulse-level simulator of a chainable bosonic-mode processor", "cvqpu"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", version_string());
  CommonOpts common;
  app.add_option("-c,--config", common.config, "INI config file");
  app.add_option("--set", common.sets, "Override, section.key=value (repeatable)");
  app.add_option("-o,--out", common.out_dir, "Output directory");
  app.add_option("--format", common.format, "csv or json");
  app.add_option("--name", common.name, "Fixed output file stem (no timestamp)");
  app.add_flag("--force", common.force, "Run despite regime-validation failures");
  app.add_flag("-v,--verbose", common.verbose, "Print the effective config");

  std::string op, swept, grid, gate_line, state, mode, ns, circuit, x_range, p_range;
  bool from_gate = false;
  int points = 121, trunc = 0;
  double tol = 1e-4;

  auto* sweep = app.add_subcommand("sweep", "Fidelity sweep over a device parameter");
  sweep->add_option("--op", op, "rotation | squeezing | kerr | beamsplitter");
  sweep->add_option("--swept", swept, "Device key or 'ratio'");
  sweep->add_option("--grid", grid, "a,b,c or start:stop:count");
  auto* displace = app.add_subcommand("displace", "Resonant displacement check");
  auto* gate = app.add_subcommand("gate", "One calibrated gate on an initial state");
  gate->add_option("--gate", gate_line, "Gate line, e.g. \"R 3.14159 0\"");
  gate->add_option("--state", state, "Initial mode state, e.g. coherent:2 or fock:1");
  auto* wig = app.add_subcommand("wigner", "Wigner function grid");
  wig->add_option("--state", state, "Single-mode state, e.g. coherent:2");
  wig->add_flag("--from-gate", from_gate, "Use the configured gate's output state");
  wig->add_option("--mode", mode, "Mode of a two-mode output (M1 or M2)");
  wig->add_option("--x", x_range, "x range min:max");
  wig->add_option("--p", p_range, "p range min:max");
  wig->add_option("--points", points, "Grid points per axis");
  wig->add_option("--trunc", trunc, "Fock levels for --state");
  auto* compile = app.add_subcommand("compile", "Circuit file to pulse schedule");
  compile->add_option("circuit", circuit, "Circuit file")->required();
  auto* converge = app.add_subcommand("converge", "Truncation convergence study");
  converge->add_option("--op", op, "Operation");
  converge->add_option("--ns", ns, "Truncations, a,b,c or start:stop:count");
  converge->add_option("--tolerance", tol, "Convergence threshold on |dF|");
  auto* validate = app.add_subcommand("validate", "Regime report only");
  validate->add_option("--op", op, "Operation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = load(common);
    if (!op.empty() && !sweep->parsed()) cfg.experiment.op = parse_op_kind(op);
    if (common.verbose) out << serialize_config(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg, common, op, swept, grid, out, err);
    if (displace->parsed()) return cmd_displace(cfg, common, out, err);
    if (gate->parsed()) return cmd_gate(cfg, common, gate_line, state, out, err);
    if (wig->parsed()) {
      WignerGridSpec spec;
      auto range = [](const std::string& text, double& lo, double& hi) {
        if (text.empty()) return;
        const auto parts = split(text, ':');
        if (parts.size() != 2) throw ConfigError("range must be min:max");
        lo = to_double(parts[0]);
        hi = to_double(parts[1]);
      };
      range(x_range, spec.x_min, spec.x_max);
      range(p_range, spec.p_min, spec.p_max);
      spec.nx = spec.np = points;
      return cmd_wigner(cfg, common, state, from_gate, mode, spec, trunc, out, err);
    }
    if (compile->parsed()) return cmd_compile(cfg, circuit, out);
    if (converge->parsed()) return cmd_converge(cfg, common, ns, tol, out, err);
    if (validate->parsed()) return cmd_validate(cfg, op, out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SingularModelError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace cvqpu
