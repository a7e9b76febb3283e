#include "cvqpu/hamiltonians.hpp"

#include <algorithm>
#include <cmath>

namespace cvqpu {

namespace {

Operator mode_op(LadderKind kind, const SubsystemLayout& layout, const std::string& label) {
  return embed(ladder(kind, layout.dim(label), label), layout, label);
}

Operator qop(QubitOpKind kind, const SubsystemLayout& layout, const std::string& label) {
  return embed(qubit_op(kind, label), layout, label);
}

void require(const SubsystemLayout& layout, OpKind op) {
  for (const auto& label : required_labels(op))
    if (!layout.contains(label))
      throw ConfigError(std::string(to_string(op)) + " needs subsystem '" + label + "' in layout " +
                        layout.describe());
}

/// g-weighted qubit exchange term for one mode.
Operator exchange_term(const SubsystemLayout& layout, const std::string& mode, const std::string& qubit,
                       ExchangeCoupling coupling) {
  const Operator a = mode_op(LadderKind::annihilate, layout, mode);
  if (coupling == ExchangeCoupling::rabi)
    return (a + a.adjoint()) * qop(QubitOpKind::sx, layout, qubit);
  const Operator jc = a * qop(QubitOpKind::raise, layout, qubit);
  return jc + jc.adjoint();
}

Operator quadrature_squared(const SubsystemLayout& layout, const std::string& mode) {
  const Operator a = mode_op(LadderKind::annihilate, layout, mode);
  const Operator x = a + a.adjoint();
  return x * x;
}

Operator free_mode(const SubsystemLayout& layout, const std::string& mode, double omega) {
  return omega * mode_op(LadderKind::number, layout, mode);
}

Operator free_qubit(const SubsystemLayout& layout, const std::string& qubit, double omega) {
  return (0.5 * omega) * qop(QubitOpKind::sz, layout, qubit);
}

double nonzero(double value, const char* name) {
  if (value == 0.0) throw SingularModelError(std::string(name) + " = 0: effective model is singular");
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ExchangeCoupling v) {
  return v == ExchangeCoupling::jaynes_cummings ? "jaynes_cummings" : "rabi";
}
std::string to_string(KerrCoupling v) { return v == KerrCoupling::sigma_x ? "sigma_x" : "sigma_z"; }
std::string to_string(KappaFormula v) {
  switch (v) {
    case KappaFormula::derived: return "derived";
    case KappaFormula::printed: return "printed";
    case KappaFormula::printed_literal: return "printed_literal";
  }
  return "unknown";
}
std::string to_string(SqueezeRate v) { return v == SqueezeRate::derived ? "derived" : "printed"; }
std::string to_string(CouplerDetuning v) { return v == CouplerDetuning::derived ? "derived" : "printed"; }
std::string to_string(DriveSign v) { return v == DriveSign::resonant ? "resonant" : "printed"; }

const std::vector<std::string>& model_option_keys() {
  static const std::vector<std::string> keys = {"exchange",     "kerr_coupling",    "kappa",
                                                "squeeze_rate", "coupler_detuning", "drive_sign"};
  return keys;
}

void set_option(ModelOptions& o, std::string_view key, std::string_view value) {
  auto bad = [&] {
    return ConfigError("invalid value '" + std::string(value) + "' for model option '" + std::string(key) + "'");
  };
  if (key == "exchange") {
    if (value == "jaynes_cummings") o.exchange = ExchangeCoupling::jaynes_cummings;
    else if (value == "rabi") o.exchange = ExchangeCoupling::rabi;
    else throw bad();
  } else if (key == "kerr_coupling") {
    if (value == "sigma_x") o.kerr_coupling = KerrCoupling::sigma_x;
    else if (value == "sigma_z") o.kerr_coupling = KerrCoupling::sigma_z;
    else throw bad();
  } else if (key == "kappa") {
    if (value == "derived") o.kappa = KappaFormula::derived;
    else if (value == "printed") o.kappa = KappaFormula::printed;
    else if (value == "printed_literal") o.kappa = KappaFormula::printed_literal;
    else throw bad();
  } else if (key == "squeeze_rate") {
    if (value == "derived") o.squeeze_rate = SqueezeRate::derived;
    else if (value == "printed") o.squeeze_rate = SqueezeRate::printed;
    else throw bad();
  } else if (key == "coupler_detuning") {
    if (value == "derived") o.detuning = CouplerDetuning::derived;
    else if (value == "printed") o.detuning = CouplerDetuning::printed;
    else throw bad();
  } else if (key == "drive_sign") {
    if (value == "resonant") o.drive_sign = DriveSign::resonant;
    else if (value == "printed") o.drive_sign = DriveSign::printed;
    else throw bad();
  } else {
    throw ConfigError("unknown model option '" + std::string(key) + "'");
  }
}

std::map<std::string, std::string> convention_ids(const ModelOptions& o) {
  return {
      {"quadrature", "x=(a+a^dag)/sqrt2,p=(a-a^dag)/(i sqrt2)"},
      {"gate_phase",
       "R=exp(i theta n);D=exp(alpha a^dag-alpha* a);S=exp((xi* aa-xi a^dag a^dag)/2);K=exp(i chi n^2);"
       "B=exp(-i beta(e^{i phi}a1^dag a2+h.c.))"},
      {"wigner", "W=(1/pi)Tr[rho D Pi D^dag],alpha=(x+ip)/sqrt2"},
      {"exchange", to_string(o.exchange)},
      {"kerr_coupling", to_string(o.kerr_coupling)},
      {"kappa", to_string(o.kappa)},
      {"squeeze_rate", to_string(o.squeeze_rate)},
      {"coupler_detuning", to_string(o.detuning)},
      {"drive_sign", to_string(o.drive_sign)},
  };
}

// ---------------------------------------------------------------------------

Operator qubit_factor(QubitOpKind kind, const SubsystemLayout& layout, const std::string& label, QubitHint hint) {
  if (layout.contains(label)) return qop(kind, layout, label);
  const CVector v = [&] {
    switch (hint) {
      case QubitHint::g: return factor_vector(FactorSpec::ground(), 2);
      case QubitHint::e: return factor_vector(FactorSpec::excited(), 2);
      case QubitHint::plus: return factor_vector(FactorSpec::plus(), 2);
      case QubitHint::minus: return factor_vector(FactorSpec::minus(), 2);
    }
    return CVector(CVector::Zero(2));
  }();
  const CMatrix q = qubit_op(kind, label).dense();
  const Complex value = v.dot(q * v);
  return value * Operator::identity(layout);
}

// ---------------------------------------------------------------------------

HamiltonianSpec::HamiltonianSpec(SubsystemLayout layout)
    : layout_(std::move(layout)), constant_(Operator::zero(layout_)) {}

HamiltonianSpec::HamiltonianSpec(Operator constant) : layout_(constant.layout()), constant_(std::move(constant)) {}

void HamiltonianSpec::add_rotating_pair(Operator a, Coefficient c, double frequency) {
  if (!(a.layout() == layout_)) throw ConfigError("time-dependent term has a different layout");
  terms_.push_back({std::move(a), std::move(c), std::abs(frequency)});
}

Operator HamiltonianSpec::evaluate(double t) const {
  Operator h = constant_;
  for (const auto& term : terms_) {
    const Complex c = term.coeff(t);
    h += c * term.op;
    h += std::conj(c) * term.op.adjoint();
  }
  return h;
}

double HamiltonianSpec::max_frequency() const {
  double w = 0.0;
  // Gershgorin bound on the constant part.
  const SparseCMatrix& m = constant_.matrix();
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double row = 0.0;
    for (SparseCMatrix::InnerIterator it(m, r); it; ++it) row += std::abs(it.value());
    w = std::max(w, row);
  }
  for (const auto& term : terms_) w = std::max(w, term.frequency);
  return w;
}

// ---------------------------------------------------------------------------

std::vector<std::string> required_labels(OpKind op) {
  switch (op) {
    case OpKind::rotation: return {"M", "R"};
    case OpKind::displacement: return {"M"};
    case OpKind::squeezing:
    case OpKind::kerr: return {"M", "F"};
    case OpKind::beamsplitter: return {"M1", "M2", "B"};
  }
  return {};
}

SubsystemLayout op_layout(OpKind op, int n_dim) {
  std::vector<Subsystem> slots;
  for (const auto& label : required_labels(op)) slots.push_back({label, label[0] == 'M' ? n_dim : 2});
  return SubsystemLayout(std::move(slots));
}

SubsystemLayout block_layout(int n_dim) { return SubsystemLayout({{"M", n_dim}, {"F", 2}, {"R", 2}, {"B", 2}}); }

HamiltonianSpec build_full(OpKind op, const BlockParams& p, const SubsystemLayout& layout, const ModelOptions& o,
                           const PulseControls& controls) {
  require(layout, op);
  HamiltonianSpec h(layout);
  switch (op) {
    case OpKind::rotation:
      h.constant() = free_mode(layout, "M", p.omega_m) + free_qubit(layout, "R", p.omega_r) +
                     p.g_mr * exchange_term(layout, "M", "R", o.exchange);
      break;
    case OpKind::displacement: {
      if (p.Omega_D == 0.0) throw SingularModelError("Omega_D = 0: the displacement drive is degenerate");
      h.constant() = free_mode(layout, "M", p.omega_m);
      const Complex amp = std::polar(p.Omega_D, controls.drive_phase);
      const double w = o.drive_sign == DriveSign::resonant ? p.omega_D_drive : -p.omega_D_drive;
      h.add_rotating_pair(mode_op(LadderKind::annihilate, layout, "M"),
                          [amp, w](double t) { return amp * std::polar(1.0, w * t); }, w);
      break;
    }
    case OpKind::squeezing: {
      h.constant() = free_mode(layout, "M", p.omega_m) + free_qubit(layout, "F", p.omega_f);
      // g0 cos(2 w1 t + phi) X^2 sx as a rotating pair of (g0/2) X^2 sx.
      const double w1 = p.omega_1, phi = controls.modulation_phase;
      h.add_rotating_pair((0.5 * p.g0) * (quadrature_squared(layout, "M") * qop(QubitOpKind::sx, layout, "F")),
                          [w1, phi](double t) { return std::polar(1.0, 2.0 * w1 * t + phi); }, 2.0 * w1);
      const double ws = p.omega_S_drive, amp = p.Omega_S;
      h.add_rotating_pair(qop(QubitOpKind::raise, layout, "F"),
                          [ws, amp](double t) { return std::polar(amp, -ws * t); }, ws);
      break;
    }
    case OpKind::kerr: {
      const QubitOpKind q = o.kerr_coupling == KerrCoupling::sigma_x ? QubitOpKind::sx : QubitOpKind::sz;
      h.constant() = free_mode(layout, "M", p.omega_m) + free_qubit(layout, "F", p.omega_f) +
                     p.g_mf * (quadrature_squared(layout, "M") * qop(q, layout, "F"));
      break;
    }
    case OpKind::beamsplitter: {
      const Operator a1 = mode_op(LadderKind::annihilate, layout, "M1");
      const Operator a2 = mode_op(LadderKind::annihilate, layout, "M2");
      const Operator hop = a1.adjoint() * a2;
      h.constant() = free_mode(layout, "M1", p.omega_m) + free_mode(layout, "M2", p.omega_m) +
                     free_qubit(layout, "B", p.omega_b) +
                     p.g_mb * (exchange_term(layout, "M1", "B", o.exchange) +
                               exchange_term(layout, "M2", "B", o.exchange)) +
                     p.lambda * (hop + hop.adjoint());
      break;
    }
  }
  return h;
}

HamiltonianSpec build_block(const BlockParams& p, const SubsystemLayout& layout, const ModelOptions& o) {
  for (const char* label : {"M", "F", "R", "B"})
    if (!layout.contains(label)) throw ConfigError(std::string("block Hamiltonian needs subsystem '") + label + "'");
  const QubitOpKind q = o.kerr_coupling == KerrCoupling::sigma_x ? QubitOpKind::sx : QubitOpKind::sz;
  Operator h = free_mode(layout, "M", p.omega_m) + free_qubit(layout, "F", p.omega_f) +
               free_qubit(layout, "R", p.omega_r) + free_qubit(layout, "B", p.omega_b) +
               p.g_mf * (quadrature_squared(layout, "M") * qop(q, layout, "F")) +
               p.g_mr * exchange_term(layout, "M", "R", o.exchange) +
               p.g_mb * exchange_term(layout, "M", "B", o.exchange);
  return HamiltonianSpec(std::move(h));
}

// ---------------------------------------------------------------------------

double rotation_detuning(const BlockParams& p) { return nonzero(p.omega_m - p.omega_r, "Delta_r"); }

double rotation_rate(const BlockParams& p) { return p.g_mr * p.g_mr / rotation_detuning(p); }

double bs_stark_rate(const BlockParams& p, CouplerDetuning convention) {
  return p.g_mb * p.g_mb / nonzero(coupler_detuning(p, convention), "Delta_b");
}

double bs_effective_rate(const BlockParams& p, CouplerDetuning convention) {
  return p.lambda + bs_stark_rate(p, convention);
}

double squeeze_rate(const BlockParams& p, SqueezeRate variant) {
  return variant == SqueezeRate::derived ? 0.25 * p.g0 : 0.5 * p.g0;
}

KerrConstants kerr_constants(const BlockParams& p, KappaFormula formula) {
  const double dk = nonzero(2.0 * p.omega_m - p.omega_f, "Delta_k");
  const double dp = nonzero(2.0 * p.omega_m + p.omega_f, "Delta'_k");
  const double wf = nonzero(p.omega_f, "omega_f");
  const double g2 = p.g_mf * p.g_mf;
  KerrConstants k;
  switch (formula) {
    case KappaFormula::derived:
      k.kappa0 = g2 * (4.0 / wf + 1.0 / dp - 1.0 / dk);
      k.omega_prime = p.omega_m - 2.0 * g2 * (1.0 / dk + 1.0 / dp);
      k.omega_f_prime = p.omega_f + 2.0 * g2 * (1.0 / wf + 1.0 / dp - 1.0 / dk);
      break;
    case KappaFormula::printed:
    case KappaFormula::printed_literal:
      k.kappa0 = formula == KappaFormula::printed ? g2 * (1.0 / dk + 2.0 / dp + 4.0 / wf)
                                                  : g2 * (3.0 / dk + 4.0 / wf);
      k.omega_prime = p.omega_m + 2.0 * g2 * (1.0 / dk - 1.0 / dp);
      k.omega_f_prime = p.omega_f + 2.0 * g2 * (1.0 / dk + 1.0 / dp + 1.0 / wf);
      break;
  }
  return k;
}

HamiltonianSpec build_effective(OpKind op, const BlockParams& p, const SubsystemLayout& layout, QubitHint hint,
                                const ModelOptions& o, const PulseControls& controls) {
  const std::string mode = op == OpKind::beamsplitter ? "M1" : "M";
  if (!layout.contains(mode)) throw ConfigError("effective model needs subsystem '" + mode + "'");
  HamiltonianSpec h(layout);
  switch (op) {
    case OpKind::rotation: {
      const double rate = rotation_rate(p);
      const Operator n = mode_op(LadderKind::number, layout, "M");
      h.constant() = rate * (n * qubit_factor(QubitOpKind::proj_gg, layout, "R", hint) -
                             (n + Operator::identity(layout)) * qubit_factor(QubitOpKind::proj_ee, layout, "R", hint));
      break;
    }
    case OpKind::displacement: {
      if (p.Omega_D == 0.0) throw SingularModelError("Omega_D = 0: the displacement drive is degenerate");
      const Complex amp = std::polar(p.Omega_D, controls.drive_phase);
      const double w = o.drive_sign == DriveSign::resonant ? p.omega_D_drive - p.omega_m
                                                           : -(p.omega_D_drive + p.omega_m);
      const Operator a = mode_op(LadderKind::annihilate, layout, "M");
      if (w == 0.0) {
        h.constant() = amp * a + std::conj(amp) * a.adjoint();
      } else {
        h.add_rotating_pair(a, [amp, w](double t) { return amp * std::polar(1.0, w * t); }, w);
      }
      break;
    }
    case OpKind::squeezing: {
      nonzero(p.omega_f, "omega_f");
      const Operator a = mode_op(LadderKind::annihilate, layout, "M");
      const Operator aa = std::polar(1.0, controls.modulation_phase) * (a * a);
      h.constant() = squeeze_rate(p, o.squeeze_rate) *
                     ((aa + aa.adjoint()) * (qubit_factor(QubitOpKind::proj_pp, layout, "F", hint) -
                                             qubit_factor(QubitOpKind::proj_mm, layout, "F", hint)));
      break;
    }
    case OpKind::kerr: {
      const KerrConstants k = kerr_constants(p, o.kappa);
      const Operator n = mode_op(LadderKind::number, layout, "M");
      const Operator sz = qubit_factor(QubitOpKind::sz, layout, "F", hint);
      h.constant() = (k.omega_prime - p.omega_m) * n + k.kappa0 * ((n + n * n) * sz);
      if (layout.contains("F")) h.constant() += (0.5 * (k.omega_f_prime - p.omega_f)) * sz;
      break;
    }
    case OpKind::beamsplitter: {
      if (!layout.contains("M2")) throw ConfigError("effective beam splitter needs subsystem 'M2'");
      const double s = bs_stark_rate(p, o.detuning);
      const Operator a1 = mode_op(LadderKind::annihilate, layout, "M1");
      const Operator a2 = mode_op(LadderKind::annihilate, layout, "M2");
      const Operator hop = a1.adjoint() * a2 + a2.adjoint() * a1;
      const Operator gg = qubit_factor(QubitOpKind::proj_gg, layout, "B", hint);
      const Operator ee = qubit_factor(QubitOpKind::proj_ee, layout, "B", hint);
      const Operator n_sum = a1.adjoint() * a1 + a2.adjoint() * a2;
      const Operator n_sum_e = n_sum + 2.0 * Operator::identity(layout);
      h.constant() = s * ((n_sum + hop) * gg) - s * ((n_sum_e + hop) * ee) + p.lambda * hop;
      break;
    }
  }
  return h;
}

FrameCheck squeezing_frame_check(const BlockParams& p, double tolerance) {
  FrameCheck check;
  const double target_w1 = p.omega_m + 0.5 * p.omega_f;
  check.modulation_mismatch = std::abs(p.omega_1 - target_w1) / std::abs(target_w1);
  check.drive_mismatch = p.omega_f == 0.0 ? std::abs(p.omega_S_drive)
                                          : std::abs(p.omega_S_drive - p.omega_f) / std::abs(p.omega_f);
  check.modulation_resonant = check.modulation_mismatch <= tolerance;
  check.drive_resonant = check.drive_mismatch <= tolerance;

  // e^{+2i w1 t} times each mode/qubit factor of (a + a^dag)^2 sigma_x in the
  // interaction picture; the conjugate terms carry the same |frequency|.
  const struct {
    const char* name;
    double mode;
  } modes[] = {{"aa", -2.0 * p.omega_m}, {"a^dag a^dag", 2.0 * p.omega_m}, {"(2n+1)", 0.0}};
  const struct {
    const char* name;
    double qubit;
  } qubits[] = {{"sigma_eg", p.omega_f}, {"sigma_ge", -p.omega_f}};
  for (const auto& m : modes)
    for (const auto& q : qubits)
      check.residuals.push_back({std::string(m.name) + " " + q.name, std::abs(2.0 * p.omega_1 + m.mode + q.qubit)});
  check.residuals.push_back({"drive sigma_eg", std::abs(p.omega_f - p.omega_S_drive)});
  std::stable_sort(check.residuals.begin(), check.residuals.end(),
                   [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
  check.pass = check.modulation_resonant && check.drive_resonant;
  return check;
}

}  // namespace cvqpu
