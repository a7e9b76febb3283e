#pragma once

#include <map>
#include <string>
#include <vector>

#include "cvqpu/device.hpp"
#include "cvqpu/evolve.hpp"
#include "cvqpu/hamiltonians.hpp"
#include "cvqpu/metrics.hpp"

namespace cvqpu {

/// One gate of the set. `value` holds theta, alpha, xi, chi or beta (real
/// parameters in its real part); `phi` is the beam-splitter phase.
struct GateSpec {
  OpKind kind = OpKind::rotation;
  Complex value{0.0, 0.0};
  double phi = 0.0;
  std::vector<std::size_t> modes{0};

  static GateSpec rotation(double theta, std::size_t mode = 0) { return {OpKind::rotation, theta, 0.0, {mode}}; }
  static GateSpec displacement(Complex alpha, std::size_t mode = 0) {
    return {OpKind::displacement, alpha, 0.0, {mode}};
  }
  static GateSpec squeeze(Complex xi, std::size_t mode = 0) { return {OpKind::squeezing, xi, 0.0, {mode}}; }
  static GateSpec kerr(double chi, std::size_t mode = 0) { return {OpKind::kerr, chi, 0.0, {mode}}; }
  static GateSpec beamsplitter(double beta, double phi = 0.0, std::size_t m1 = 0, std::size_t m2 = 1) {
    return {OpKind::beamsplitter, beta, phi, {m1, m2}};
  }

  /// Throws ConfigError for non-finite parameters or bad targets.
  void validate() const;
  std::string describe() const;
};

/// Ideal unitary on layout "M" (dim n_dim), or "M1","M2" for the beam splitter:
///   R(theta) = exp(i theta n)
///   D(alpha) = exp(alpha a^dag - alpha* a)
///   S(xi)    = exp((xi* aa - xi a^dag a^dag) / 2)
///   K(chi)   = exp(i chi n^2)
///   B(beta, phi) = exp(-i beta (e^{i phi} a1^dag a2 + e^{-i phi} a1 a2^dag))
Operator ideal_gate(const GateSpec& spec, int n_dim);

/// Population of the top 3 Fock levels after the gate acts on a coherent
/// probe (mode 1 for the beam splitter).
double ideal_gate_leakage(const GateSpec& spec, int n_dim, Complex probe = 2.0);

/// Calibrated physical realization of one gate on one block.
struct PulseSegment {
  OpKind op = OpKind::rotation;
  GateSpec gate;
  double tau = 0.0;
  std::vector<std::size_t> blocks{0};
  PulseControls controls;
  /// Element frequencies, couplings and drives used by the pulse.
  std::map<std::string, double> settings;
  /// Settings of idle elements (coupler frequencies, g_mf = 0).
  std::map<std::string, double> park;
  /// Stark rotation angle removed after the pulse (coupler or fluxonium in |g>).
  double stark_angle = 0.0;
  /// Phase of a virtual rotation e^{i phi n1} applied around the pulse.
  double virtual_phase = 0.0;
  double start = 0.0;
  bool parallelizable = false;
};

/// Signed rate whose product with tau gives the realized parameter (theta, chi,
/// beta), or its magnitude (|alpha|, |xi|).
double gate_rate(OpKind op, const BlockParams& params, const ModelOptions& options = {});

/// Smallest tau >= 0 with rate * tau = target (mod 2 pi); 0 for a zero target
/// whatever the rate.
double periodic_time(double target, double rate);

/// Throws SingularModelError when the relevant rate vanishes and the target is
/// not the identity.
PulseSegment calibrate(const GateSpec& spec, const BlockParams& params, const ModelOptions& options = {});

/// Gate parameter realized by the segment's pulse under the effective model.
/// Periodic parameters are reduced to [0, 2 pi).
GateSpec realized_gate(const PulseSegment& segment, const BlockParams& params, const ModelOptions& options = {});

/// Diagonal generators of the comparison frame: bare free evolution of every
/// element in `layout`, and the analytic Stark shifts of the op.
Operator free_generator(const BlockParams& params, const SubsystemLayout& layout);
Operator stark_generator(OpKind op, const BlockParams& params, const SubsystemLayout& layout, QubitHint hint,
                         const ModelOptions& options = {});

/// exp(+i tau G) for a diagonal generator G.
Operator diagonal_phase(const Operator& generator, double tau);

/// Unitary taking the lab-frame final state to the comparison frame:
/// exp(+i tau (G_free + G_stark)).
Operator frame_correction(OpKind op, const BlockParams& params, const SubsystemLayout& layout, double tau,
                          const ModelOptions& options = {}, QubitHint hint = QubitHint::g);

struct GaugeResult {
  double angle = 0.0;
  double fidelity = 0.0;
};

/// max over theta of <target| e^{-i theta N} rho e^{i theta N} |target>, N the
/// total photon number: coarse scan then golden section to `tol` rad.
GaugeResult gauge_fidelity(const CVector& target, const DensityMatrix& rho, double tol = 1e-6);

struct Schedule {
  std::vector<PulseSegment> segments;
  /// Busy intervals [start, end) of every block.
  std::vector<std::vector<std::pair<double, double>>> occupancy;
  double duration = 0.0;
};

/// Calibrates every gate on its block(s) and places it as early as its blocks
/// allow. Throws ConfigError for missing or non-adjacent targets.
Schedule compile_schedule(const std::vector<GateSpec>& circuit, const ChainParams& chain,
                          const ModelOptions& options = {});

/// One segment per line: index op_kind blocks tau key=value...
std::string schedule_to_text(const Schedule& schedule);
std::string schedule_to_json(const Schedule& schedule);

/// Lines "R theta m", "D re im m", "S re im m", "K chi m", "B beta phi m1 m2";
/// '#' starts a comment. Throws ConfigError naming the line.
std::vector<GateSpec> parse_circuit(const std::string& text);

struct GateRun {
  QState state;
  EvolutionDiagnostics diagnostics;
  double tau = 0.0;
};

/// Evolves psi0 under the full Hamiltonian for the segment's pulse and maps the
/// result to the comparison frame. Exact propagation for time-independent
/// models, adaptive integration otherwise.
GateRun evolve_gate(const PulseSegment& segment, const BlockParams& params, const QState& psi0,
                    const ModelOptions& options = {}, const IntegratorConfig& cfg = {});

/// Same pulse under the effective model, Stark shifts removed.
GateRun evolve_effective(const PulseSegment& segment, const BlockParams& params, const QState& psi0,
                         QubitHint hint, const ModelOptions& options = {}, const IntegratorConfig& cfg = {});

}  // namespace cvqpu
