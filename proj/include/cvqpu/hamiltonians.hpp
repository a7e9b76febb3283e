#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cvqpu/device.hpp"
#include "cvqpu/fock.hpp"

namespace cvqpu {

/// Coupling of the R and B qubits to their mode(s).
enum class ExchangeCoupling {
  jaynes_cummings,  ///< g (a^dag sigma_- + a sigma_+)
  rabi,             ///< g (a + a^dag) sigma_x, keeps the counter-rotating terms
};

/// Qubit operator in the mode-fluxonium Kerr coupling g_mf (a + a^dag)^2 (.).
enum class KerrCoupling { sigma_x, sigma_z };

/// Closed forms used for kappa_0, omega' and omega'_f.
enum class KappaFormula {
  /// Second-order expansion of g_mf (a + a^dag)^2 sigma_x around the bare
  /// spectrum; agrees with the dressed numerical spectrum.
  derived,
  /// kappa_0 = g^2 (1/Delta_k + 2/Delta'_k + 4/omega_f) with the printed omega'
  /// and omega'_f.
  printed,
  /// As printed, with the repeated 1/Delta_k term taken literally (3/Delta_k).
  printed_literal,
};

/// Rate of the effective squeezing Hamiltonian.
enum class SqueezeRate {
  derived,  ///< (g0/4)(aa + a^dag a^dag) sigma_x, from averaging over the drive frame
  printed,  ///< (g0/2)(aa + a^dag a^dag) sigma_x
};

/// Sign of the time dependence of the displacement drive.
enum class DriveSign {
  resonant,  ///< Omega_D a e^{+i omega_D t} + h.c.; resonant with the mode for omega_D = omega_m
  printed,   ///< Omega_D a e^{-i omega_D t} + h.c.
};

/// Model variants. Defaults are the configuration used for all reported numbers.
struct ModelOptions {
  ExchangeCoupling exchange = ExchangeCoupling::jaynes_cummings;
  KerrCoupling kerr_coupling = KerrCoupling::sigma_x;
  KappaFormula kappa = KappaFormula::derived;
  SqueezeRate squeeze_rate = SqueezeRate::derived;
  CouplerDetuning detuning = CouplerDetuning::derived;
  DriveSign drive_sign = DriveSign::resonant;

  friend bool operator==(const ModelOptions&, const ModelOptions&) = default;
};

/// Phases set by calibration, not part of the device description.
struct PulseControls {
  /// arg(Omega_D); the drive amplitude is |Omega_D| e^{i phase}.
  double drive_phase = 0.0;
  /// phi in g_mf(t) = g0 cos(2 omega_1 t + phi).
  double modulation_phase = 0.0;
};

std::string to_string(ExchangeCoupling v);
std::string to_string(KerrCoupling v);
std::string to_string(KappaFormula v);
std::string to_string(SqueezeRate v);
std::string to_string(CouplerDetuning v);
std::string to_string(DriveSign v);

/// Sets one option from its config name ("exchange", "kerr_coupling", "kappa",
/// "squeeze_rate", "coupler_detuning", "drive_sign"). Throws ConfigError.
void set_option(ModelOptions& options, std::string_view key, std::string_view value);
const std::vector<std::string>& model_option_keys();

/// Convention identifiers written into every output's metadata.
std::map<std::string, std::string> convention_ids(const ModelOptions& options);

/// Time-dependent coefficient c(t) of a rotating term.
using Coefficient = std::function<Complex(double)>;

struct TimeTerm {
  Operator op;
  Coefficient coeff;
  /// Largest |d arg c / dt|, used to size the first integrator step.
  double frequency = 0.0;
};

/// H(t) = H_const + sum_k [c_k(t) A_k + conj(c_k(t)) A_k^dag].
class HamiltonianSpec {
 public:
  HamiltonianSpec() = default;
  explicit HamiltonianSpec(SubsystemLayout layout);
  HamiltonianSpec(Operator constant);

  const SubsystemLayout& layout() const { return layout_; }
  const Operator& constant() const { return constant_; }
  Operator& constant() { return constant_; }
  const std::vector<TimeTerm>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  /// Adds c(t) A and its adjoint partner.
  void add_rotating_pair(Operator a, Coefficient c, double frequency);

  Operator evaluate(double t) const;
  /// Largest angular frequency present: spectral bound of the constant part and
  /// every term frequency.
  double max_frequency() const;

 private:
  SubsystemLayout layout_;
  Operator constant_;
  std::vector<TimeTerm> terms_;
};

/// Labels each op expects in its layout.
std::vector<std::string> required_labels(OpKind op);
/// Default layout: M (N) first, then the op's qubits; M1, M2 (N each) then B
/// for the beam splitter.
SubsystemLayout op_layout(OpKind op, int n_dim);
/// M (N), F, R, B.
SubsystemLayout block_layout(int n_dim);

HamiltonianSpec build_full(OpKind op, const BlockParams& params, const SubsystemLayout& layout,
                           const ModelOptions& options = {}, const PulseControls& controls = {});

/// Static building-block Hamiltonian over M, F, R, B.
HamiltonianSpec build_block(const BlockParams& params, const SubsystemLayout& layout,
                            const ModelOptions& options = {});

/// Qubit state assumed by an effective model when its qubit is not in the layout.
enum class QubitHint { g, e, plus, minus };

/// Qubit operator on `label`, or its expectation in `hint` times the identity
/// when the qubit is not part of the layout.
Operator qubit_factor(QubitOpKind kind, const SubsystemLayout& layout, const std::string& label, QubitHint hint);

/// Effective Hamiltonians, all expressed in the interaction picture of the bare
/// Hamiltonian (free mode and qubit terms removed). When the op's qubit is in
/// `layout` the qubit operator is kept; otherwise it is replaced by its value
/// in `hint`.
HamiltonianSpec build_effective(OpKind op, const BlockParams& params, const SubsystemLayout& layout,
                                QubitHint hint, const ModelOptions& options = {},
                                const PulseControls& controls = {});

struct KerrConstants {
  double omega_prime = 0.0;    ///< dressed mode frequency
  double omega_f_prime = 0.0;  ///< dressed qubit transition frequency
  double kappa0 = 0.0;
};

KerrConstants kerr_constants(const BlockParams& params, KappaFormula formula = KappaFormula::derived);

/// Delta_r = omega_m - omega_r; throws SingularModelError when zero.
double rotation_detuning(const BlockParams& params);
/// g_mr^2 / Delta_r.
double rotation_rate(const BlockParams& params);
/// g_eff = lambda + g_mb^2 / Delta_b.
double bs_effective_rate(const BlockParams& params, CouplerDetuning convention = CouplerDetuning::derived);
/// g_mb^2 / Delta_b, the mode shift with the coupler in |g>.
double bs_stark_rate(const BlockParams& params, CouplerDetuning convention = CouplerDetuning::derived);
/// Prefactor of (aa + a^dag a^dag) sigma_x.
double squeeze_rate(const BlockParams& params, SqueezeRate variant = SqueezeRate::derived);

struct FrameCheck {
  bool modulation_resonant = false;  ///< omega_1 = omega_m + omega_f / 2
  bool drive_resonant = false;       ///< omega_S = omega_f
  double modulation_mismatch = 0.0;  ///< relative
  double drive_mismatch = 0.0;       ///< relative
  struct Residual {
    std::string term;
    double frequency;
  };
  /// Oscillation frequencies left in the interaction picture, slowest first.
  std::vector<Residual> residuals;
  bool pass = false;
};

FrameCheck squeezing_frame_check(const BlockParams& params, double tolerance = 1e-6);

}  // namespace cvqpu
