#include "cvqpu/gates.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace cvqpu {

namespace {

Operator mode_op(LadderKind kind, const SubsystemLayout& layout, const std::string& label) {
  return embed(ladder(kind, layout.dim(label), label), layout, label);
}

double wrap_2pi(double x) {
  double w = std::fmod(x, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w;
}

std::string fmt(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// Coupler frequency that cancels the mode-mode exchange, if one exists.
bool blocking_frequency(const BlockParams& p, const ModelOptions& o, double& omega_b) {
  if (p.lambda == 0.0) return false;
  omega_b = coupler_frequency_for(p, blocking_detuning(p.g_mb, p.lambda), o.detuning);
  return true;
}

}  // namespace

void GateSpec::validate() const {
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag()) || !std::isfinite(phi))
    throw ConfigError("gate parameters must be finite");
  const std::size_t expected = kind == OpKind::beamsplitter ? 2 : 1;
  if (modes.size() != expected)
    throw ConfigError(std::string(to_string(kind)) + " needs " + std::to_string(expected) + " target mode(s)");
  if (kind == OpKind::beamsplitter) {
    if (modes[0] == modes[1]) throw ConfigError("beam splitter targets must be distinct");
    const std::size_t lo = std::min(modes[0], modes[1]), hi = std::max(modes[0], modes[1]);
    if (hi - lo != 1) throw ConfigError("beam splitter targets must be adjacent modes");
  }
}

std::string GateSpec::describe() const {
  std::ostringstream out;
  switch (kind) {
    case OpKind::rotation: out << "R(" << value.real() << ")"; break;
    case OpKind::displacement: out << "D(" << value.real() << (value.imag() < 0 ? "" : "+") << value.imag() << "i)"; break;
    case OpKind::squeezing: out << "S(" << value.real() << (value.imag() < 0 ? "" : "+") << value.imag() << "i)"; break;
    case OpKind::kerr: out << "K(" << value.real() << ")"; break;
    case OpKind::beamsplitter: out << "B(" << value.real() << "," << phi << ")"; break;
  }
  out << " on mode";
  for (auto m : modes) out << " " << m;
  return out.str();
}

// ---------------------------------------------------------------------------

Operator ideal_gate(const GateSpec& spec, int n_dim) {
  spec.validate();
  if (spec.kind == OpKind::beamsplitter) {
    const SubsystemLayout layout({{"M1", n_dim}, {"M2", n_dim}});
    const Operator a1 = mode_op(LadderKind::annihilate, layout, "M1");
    const Operator a2 = mode_op(LadderKind::annihilate, layout, "M2");
    const Operator hop = std::polar(1.0, spec.phi) * (a1.adjoint() * a2);
    return propagate_const(spec.value.real() * (hop + hop.adjoint()), 1.0);
  }
  const SubsystemLayout layout = SubsystemLayout::single("M", n_dim);
  const Operator a = ladder(LadderKind::annihilate, n_dim);
  CVector diag(n_dim);
  switch (spec.kind) {
    case OpKind::rotation:
      for (int k = 0; k < n_dim; ++k) diag(k) = std::polar(1.0, spec.value.real() * k);
      return Operator::diagonal(diag, layout);
    case OpKind::kerr:
      for (int k = 0; k < n_dim; ++k) diag(k) = std::polar(1.0, wrap_2pi(spec.value.real() * k * double(k)));
      return Operator::diagonal(diag, layout);
    case OpKind::displacement: {
      const Complex alpha = spec.value;
      // D = exp(-i G), G = i (alpha a^dag - alpha* a).
      return propagate_const(kI * (alpha * a.adjoint() - std::conj(alpha) * a), 1.0);
    }
    case OpKind::squeezing: {
      const Complex xi = spec.value;
      const Operator aa = a * a;
      return propagate_const((0.5 * kI) * (std::conj(xi) * aa - xi * aa.adjoint()), 1.0);
    }
    case OpKind::beamsplitter: break;
  }
  throw ConfigError("unsupported gate");
}

double ideal_gate_leakage(const GateSpec& spec, int n_dim, Complex probe) {
  const Operator u = ideal_gate(spec, n_dim);
  std::vector<FactorSpec> factors{FactorSpec::coherent(probe)};
  if (spec.kind == OpKind::beamsplitter) factors.push_back(FactorSpec::fock(0));
  const QState out = apply(u, make_state(factors, u.layout()).state);
  double edge = 0.0;
  for (Eigen::Index i = 0; i < out.dim(); ++i)
    for (std::size_t k = 0; k < u.layout().size(); ++k)
      if (u.layout().digit(i, k) >= n_dim - 3) {
        edge += std::norm(out.amplitudes()(i));
        break;
      }
  return edge;
}

// ---------------------------------------------------------------------------

double gate_rate(OpKind op, const BlockParams& p, const ModelOptions& o) {
  switch (op) {
    case OpKind::rotation: return -rotation_rate(p);
    case OpKind::displacement: return std::abs(p.Omega_D);
    case OpKind::squeezing: return 2.0 * squeeze_rate(p, o.squeeze_rate);
    case OpKind::kerr: return kerr_constants(p, o.kappa).kappa0;
    case OpKind::beamsplitter: return bs_effective_rate(p, o.detuning);
  }
  return 0.0;
}

double periodic_time(double target, double rate) {
  if (wrap_2pi(target) == 0.0) return 0.0;
  if (rate == 0.0 || !std::isfinite(rate)) throw SingularModelError("gate rate is zero: cannot calibrate");
  const double period = 2.0 * kPi / std::abs(rate);
  double tau = std::fmod(target / rate, period);
  if (tau < 0.0) tau += period;
  return tau;
}

PulseSegment calibrate(const GateSpec& spec, const BlockParams& p, const ModelOptions& o) {
  spec.validate();
  PulseSegment seg;
  seg.op = spec.kind;
  seg.gate = spec;
  seg.blocks = {spec.modes.front()};
  const double rate = gate_rate(spec.kind, p, o);
  switch (spec.kind) {
    case OpKind::rotation:
      seg.tau = periodic_time(spec.value.real(), rate);
      seg.settings = {{"omega_r", p.omega_r}, {"g_mr", p.g_mr}};
      break;
    case OpKind::displacement: {
      const double mag = std::abs(spec.value);
      if (rate == 0.0 && mag != 0.0) throw SingularModelError("Omega_D = 0: cannot calibrate a displacement");
      seg.tau = mag == 0.0 ? 0.0 : mag / rate;
      // alpha = -i tau Omega_D*  =>  arg Omega_D = -pi/2 - arg alpha.
      seg.controls.drive_phase = mag == 0.0 ? 0.0 : -0.5 * kPi - std::arg(spec.value);
      seg.settings = {{"Omega_D", p.Omega_D}, {"omega_D_drive", p.omega_D_drive},
                      {"drive_phase", seg.controls.drive_phase}};
      break;
    }
    case OpKind::squeezing: {
      const double mag = std::abs(spec.value);
      if (rate == 0.0 && mag != 0.0) throw SingularModelError("g0 = 0: cannot calibrate a squeeze");
      seg.tau = mag == 0.0 ? 0.0 : mag / rate;
      // xi = i (rate tau) e^{-i phi}  =>  phi = pi/2 - arg xi.
      seg.controls.modulation_phase = mag == 0.0 ? 0.0 : 0.5 * kPi - std::arg(spec.value);
      seg.settings = {{"g0", p.g0},           {"omega_1", p.omega_1},
                      {"Omega_S", p.Omega_S}, {"omega_S_drive", p.omega_S_drive},
                      {"modulation_phase", seg.controls.modulation_phase}};
      break;
    }
    case OpKind::kerr: {
      seg.tau = periodic_time(spec.value.real(), rate);
      const KerrConstants k = kerr_constants(p, o.kappa);
      seg.stark_angle = (k.omega_prime - p.omega_m - k.kappa0) * seg.tau;
      seg.settings = {{"g_mf", p.g_mf}, {"omega_f", p.omega_f}};
      break;
    }
    case OpKind::beamsplitter: {
      seg.blocks = {std::min(spec.modes[0], spec.modes[1]), std::max(spec.modes[0], spec.modes[1])};
      // Modes given in descending order swap the roles of a1 and a2.
      const double phi = spec.modes[0] < spec.modes[1] ? spec.phi : -spec.phi;
      seg.tau = periodic_time(spec.value.real(), rate);
      seg.virtual_phase = phi;
      seg.stark_angle = bs_stark_rate(p, o.detuning) * seg.tau;
      seg.settings = {{"omega_b", p.omega_b}, {"g_mb", p.g_mb}, {"lambda", p.lambda}};
      break;
    }
  }
  const std::string b = std::to_string(seg.blocks.front());
  double omega_block = 0.0;
  if (spec.kind != OpKind::beamsplitter && blocking_frequency(p, o, omega_block))
    seg.park["B" + b + ".omega_b"] = omega_block;
  if (spec.kind != OpKind::kerr && spec.kind != OpKind::squeezing) seg.park["F" + b + ".g_mf"] = 0.0;
  return seg;
}

GateSpec realized_gate(const PulseSegment& seg, const BlockParams& p, const ModelOptions& o) {
  GateSpec g = seg.gate;
  const double rate = gate_rate(seg.op, p, o);
  switch (seg.op) {
    case OpKind::rotation:
    case OpKind::kerr: g.value = wrap_2pi(rate * seg.tau); break;
    case OpKind::displacement:
      g.value = -kI * seg.tau * std::conj(std::polar(std::abs(p.Omega_D), seg.controls.drive_phase));
      break;
    case OpKind::squeezing:
      g.value = kI * (rate * seg.tau) * std::polar(1.0, -seg.controls.modulation_phase);
      break;
    case OpKind::beamsplitter:
      g.value = wrap_2pi(rate * seg.tau);
      g.phi = seg.gate.modes[0] < seg.gate.modes[1] ? seg.virtual_phase : -seg.virtual_phase;
      break;
  }
  return g;
}

// ---------------------------------------------------------------------------

Operator free_generator(const BlockParams& p, const SubsystemLayout& layout) {
  Operator g = Operator::zero(layout);
  for (const auto& slot : layout.slots()) {
    if (is_mode_label(slot.label)) {
      g += p.omega_m * mode_op(LadderKind::number, layout, slot.label);
      continue;
    }
    double w = 0.0;
    if (slot.label == "F") w = p.omega_f;
    else if (slot.label == "R") w = p.omega_r;
    else if (slot.label == "B") w = p.omega_b;
    else throw ConfigError("no free frequency known for subsystem '" + slot.label + "'");
    g += (0.5 * w) * embed(qubit_op(QubitOpKind::sz, slot.label), layout, slot.label);
  }
  return g;
}

Operator stark_generator(OpKind op, const BlockParams& p, const SubsystemLayout& layout, QubitHint hint,
                         const ModelOptions& o) {
  switch (op) {
    case OpKind::kerr: {
      const KerrConstants k = kerr_constants(p, o.kappa);
      const Operator n = mode_op(LadderKind::number, layout, "M");
      const Operator sz = qubit_factor(QubitOpKind::sz, layout, "F", hint);
      Operator g = (k.omega_prime - p.omega_m) * n + k.kappa0 * (n * sz);
      if (layout.contains("F")) g += (0.5 * (k.omega_f_prime - p.omega_f)) * sz;
      return g;
    }
    case OpKind::beamsplitter: {
      const double s = bs_stark_rate(p, o.detuning);
      const Operator n = mode_op(LadderKind::number, layout, "M1") + mode_op(LadderKind::number, layout, "M2");
      return s * (n * qubit_factor(QubitOpKind::proj_gg, layout, "B", hint)) -
             s * ((n + 2.0 * Operator::identity(layout)) * qubit_factor(QubitOpKind::proj_ee, layout, "B", hint));
    }
    default: return Operator::zero(layout);
  }
}

Operator diagonal_phase(const Operator& generator, double tau) {
  if (!generator.is_diagonal()) throw ConfigError("frame generator must be diagonal");
  const CVector d = generator.diagonal_entries();
  CVector out(d.size());
  for (Eigen::Index k = 0; k < d.size(); ++k) out(k) = std::polar(1.0, tau * d(k).real());
  return Operator::diagonal(out, generator.layout());
}

Operator frame_correction(OpKind op, const BlockParams& p, const SubsystemLayout& layout, double tau,
                          const ModelOptions& o, QubitHint hint) {
  return diagonal_phase(free_generator(p, layout) + stark_generator(op, p, layout, hint, o), tau);
}

GaugeResult gauge_fidelity(const CVector& target, const DensityMatrix& rho, double tol) {
  const RVector n = total_photon_number(rho.layout());
  auto f = [&](double theta) {
    CVector t(target.size());
    for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = std::polar(1.0, theta * n(k)) * target(k);
    return fidelity(t, rho);
  };
  constexpr int kScan = 720;
  const double step = 2.0 * kPi / kScan;
  double best = 0.0, best_f = -1.0;
  for (int k = 0; k < kScan; ++k) {
    const double th = -kPi + k * step;
    const double v = f(th);
    if (v > best_f) {
      best_f = v;
      best = th;
    }
  }
  const double th = golden_section_max(f, best - step, best + step, tol);
  const double v = f(th);
  if (v >= best_f) return {th, v};
  return {best, best_f};
}

// ---------------------------------------------------------------------------

Schedule compile_schedule(const std::vector<GateSpec>& circuit, const ChainParams& chain, const ModelOptions& o) {
  chain.validate();
  Schedule sched;
  sched.occupancy.resize(chain.modes());
  std::vector<double> free_at(chain.modes(), 0.0);
  for (std::size_t i = 0; i < circuit.size(); ++i) {
    const GateSpec& g = circuit[i];
    g.validate();
    for (auto m : g.modes)
      if (m >= chain.modes())
        throw ConfigError("gate " + std::to_string(i) + " (" + g.describe() + ") targets a mode outside the " +
                          std::to_string(chain.modes()) + "-mode chain");
    const std::size_t home = std::min(g.modes[0], g.modes.back());
    const BlockParams& p = chain.blocks[home];
    PulseSegment seg = calibrate(g, p, o);
    seg.park.clear();
    if (g.kind == OpKind::beamsplitter && chain.mode_mismatch(home) > 0.0)
      seg.settings["mode_mismatch"] = chain.mode_mismatch(home);
    for (std::size_t b = 0; b < chain.modes(); ++b) {
      const std::string id = std::to_string(b);
      const bool coupler_used = g.kind == OpKind::beamsplitter && b == home;
      const bool fluxonium_used = (g.kind == OpKind::kerr || g.kind == OpKind::squeezing) && b == home;
      double omega_block = 0.0;
      if (!coupler_used && b + 1 < chain.modes() && blocking_frequency(chain.blocks[b], o, omega_block))
        seg.park["B" + id + ".omega_b"] = omega_block;
      if (!fluxonium_used) seg.park["F" + id + ".g_mf"] = 0.0;
    }
    double start = 0.0;
    for (auto b : seg.blocks) start = std::max(start, free_at[b]);
    seg.start = start;
    for (auto b : seg.blocks) {
      free_at[b] = start + seg.tau;
      sched.occupancy[b].emplace_back(start, start + seg.tau);
    }
    sched.duration = std::max(sched.duration, start + seg.tau);
    sched.segments.push_back(std::move(seg));
  }
  for (auto& a : sched.segments)
    for (const auto& b : sched.segments)
      if (&a != &b && a.start < b.start + b.tau && b.start < a.start + a.tau) a.parallelizable = true;
  return sched;
}

namespace {

std::vector<std::pair<std::string, std::string>> segment_fields(const PulseSegment& s) {
  std::vector<std::pair<std::string, std::string>> f;
  switch (s.op) {
    case OpKind::rotation: f.emplace_back("theta", fmt(s.gate.value.real())); break;
    case OpKind::kerr: f.emplace_back("chi", fmt(s.gate.value.real())); break;
    case OpKind::displacement:
      f.emplace_back("alpha_re", fmt(s.gate.value.real()));
      f.emplace_back("alpha_im", fmt(s.gate.value.imag()));
      break;
    case OpKind::squeezing:
      f.emplace_back("xi_re", fmt(s.gate.value.real()));
      f.emplace_back("xi_im", fmt(s.gate.value.imag()));
      break;
    case OpKind::beamsplitter:
      f.emplace_back("beta", fmt(s.gate.value.real()));
      f.emplace_back("phi", fmt(s.gate.phi));
      break;
  }
  for (const auto& [k, v] : s.settings) f.emplace_back(k, fmt(v));
  for (const auto& [k, v] : s.park) f.emplace_back("park." + k, fmt(v));
  f.emplace_back("stark_angle", fmt(s.stark_angle));
  if (s.op == OpKind::beamsplitter) f.emplace_back("virtual_phase", fmt(s.virtual_phase));
  f.emplace_back("start", fmt(s.start, 9));
  f.emplace_back("parallel", s.parallelizable ? "1" : "0");
  return f;
}

std::string block_list(const std::vector<std::size_t>& blocks) {
  std::string out;
  for (std::size_t k = 0; k < blocks.size(); ++k) out += (k ? "," : "") + std::to_string(blocks[k]);
  return out;
}

}  // namespace

std::string schedule_to_text(const Schedule& sched) {
  std::ostringstream out;
  for (std::size_t i = 0; i < sched.segments.size(); ++i) {
    const auto& s = sched.segments[i];
    out << i << ' ' << to_string(s.op) << ' ' << block_list(s.blocks) << ' ' << fmt(s.tau, 9);
    for (const auto& [k, v] : segment_fields(s)) out << ' ' << k << '=' << v;
    out << '\n';
  }
  return out.str();
}

std::string schedule_to_json(const Schedule& sched) {
  nlohmann::ordered_json j;
  j["duration"] = sched.duration;
  auto& segs = j["segments"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sched.segments.size(); ++i) {
    const auto& s = sched.segments[i];
    nlohmann::ordered_json e;
    e["index"] = i;
    e["op_kind"] = std::string(to_string(s.op));
    e["blocks"] = s.blocks;
    e["tau"] = s.tau;
    for (const auto& [k, v] : segment_fields(s)) e[k] = k == "parallel" ? nlohmann::ordered_json(v == "1")
                                                                        : nlohmann::ordered_json(std::stod(v));
    segs.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::vector<GateSpec> parse_circuit(const std::string& text) {
  std::vector<GateSpec> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& why) {
      return ConfigError("circuit line " + std::to_string(line_no) + ": " + why);
    };
    auto num = [&](std::size_t k) {
      double v = 0.0;
      const auto& s = tok[k];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) throw fail("'" + s + "' is not a number");
      return v;
    };
    auto mode = [&](std::size_t k) {
      std::size_t v = 0;
      const auto& s = tok[k];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) throw fail("'" + s + "' is not a mode index");
      return v;
    };
    auto arity = [&](std::size_t n) {
      if (tok.size() != n) throw fail("'" + tok[0] + "' expects " + std::to_string(n - 1) + " arguments");
    };
    const std::string& g = tok[0];
    if (g == "R") {
      arity(3);
      out.push_back(GateSpec::rotation(num(1), mode(2)));
    } else if (g == "D") {
      arity(4);
      out.push_back(GateSpec::displacement({num(1), num(2)}, mode(3)));
    } else if (g == "S") {
      arity(4);
      out.push_back(GateSpec::squeeze({num(1), num(2)}, mode(3)));
    } else if (g == "K") {
      arity(3);
      out.push_back(GateSpec::kerr(num(1), mode(2)));
    } else if (g == "B") {
      arity(5);
      out.push_back(GateSpec::beamsplitter(num(1), num(2), mode(3), mode(4)));
    } else {
      throw fail("unknown gate '" + g + "'");
    }
    try {
      out.back().validate();
    } catch (const ConfigError& e) {
      throw fail(e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

QState rotate_mode(const QState& psi, const std::string& label, double theta) {
  if (theta == 0.0) return psi;
  return apply(diagonal_phase(mode_op(LadderKind::number, psi.layout(), label), theta), psi);
}

GateRun run(const HamiltonianSpec& h, const PulseSegment& seg, const QState& psi0, const Operator& generator,
            const IntegratorConfig& cfg) {
  GateRun out;
  out.tau = seg.tau;
  const bool bs = seg.op == OpKind::beamsplitter;
  QState psi = bs ? rotate_mode(psi0, "M1", -seg.virtual_phase) : psi0;
  if (seg.tau > 0.0) {
    if (h.is_constant()) {
      psi = propagate_const(h.constant(), psi, seg.tau, cfg, &out.diagnostics);
    } else {
      TdResult r = evolve_td(h, psi, 0.0, seg.tau, cfg);
      psi = std::move(r.state);
      out.diagnostics = r.diagnostics;
    }
  }
  psi = apply(diagonal_phase(generator, seg.tau), psi);
  out.state = bs ? rotate_mode(psi, "M1", seg.virtual_phase) : psi;
  return out;
}

}  // namespace

GateRun evolve_gate(const PulseSegment& seg, const BlockParams& p, const QState& psi0, const ModelOptions& o,
                    const IntegratorConfig& cfg) {
  const SubsystemLayout& layout = psi0.layout();
  const HamiltonianSpec h = build_full(seg.op, p, layout, o, seg.controls);
  return run(h, seg, psi0, free_generator(p, layout) + stark_generator(seg.op, p, layout, QubitHint::g, o), cfg);
}

GateRun evolve_effective(const PulseSegment& seg, const BlockParams& p, const QState& psi0, QubitHint hint,
                         const ModelOptions& o, const IntegratorConfig& cfg) {
  const SubsystemLayout& layout = psi0.layout();
  const HamiltonianSpec h = build_effective(seg.op, p, layout, hint, o, seg.controls);
  return run(h, seg, psi0, stark_generator(seg.op, p, layout, hint, o), cfg);
}

}  // namespace cvqpu
