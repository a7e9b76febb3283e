#pragma once

#include <vector>

#include "cvqpu/fock.hpp"
#include "cvqpu/hamiltonians.hpp"

namespace cvqpu {

struct IntegratorConfig {
  double rtol = 1e-9;
  double atol = 1e-12;
  /// First step in seconds; 0 selects 1 / (50 omega_max).
  double initial_step = 0.0;
  long max_steps = 50'000'000;
  /// Record the state at every entry of `sample_times` (steps land on them).
  bool dense_output = false;
  std::vector<double> sample_times;
  /// Sectors larger than this use the Lanczos path instead of a dense
  /// eigendecomposition.
  Eigen::Index krylov_threshold = 4096;
  double krylov_tol = 1e-12;

  void validate() const;
};

struct EvolutionDiagnostics {
  double norm_drift = 0.0;
  long steps = 0;
  long rejected_steps = 0;
  double max_error_estimate = 0.0;
  /// |<H>(t1) - <H>(t0)|, constant Hamiltonians only.
  double energy_drift = 0.0;
  /// Norm drift above 1e-6.
  bool norm_flagged = false;
  std::string method;
};

/// exp(-i H t) for a fixed Hermitian H. H is split into the connected
/// components of its sparsity graph; each component is diagonalized once (or
/// handled by Lanczos when large), so repeated times are cheap.
class Propagator {
 public:
  explicit Propagator(const Operator& h, Eigen::Index krylov_threshold = 4096, double krylov_tol = 1e-12);

  QState apply(const QState& psi, double t) const;
  /// Dense unitary; every sector is diagonalized for this call.
  Operator unitary(double t) const;

  std::size_t sector_count() const { return sectors_.size(); }
  Eigen::Index largest_sector() const;
  const Operator& hamiltonian() const { return h_; }

 private:
  struct Sector {
    std::vector<Eigen::Index> index;
    bool krylov = false;
    RVector evals;
    CMatrix evecs;
    SparseCMatrix block;
  };

  Operator h_;
  std::vector<Sector> sectors_;
  double krylov_tol_;
};

/// Unitary exp(-i H t). Throws ConfigError for non-Hermitian H.
Operator propagate_const(const Operator& h, double t);
/// exp(-i H t) psi, with diagnostics.
QState propagate_const(const Operator& h, const QState& psi, double t, const IntegratorConfig& cfg = {},
                       EvolutionDiagnostics* diagnostics = nullptr);

/// exp(-i H t) v by Lanczos with full reorthogonalization and adaptive sub-steps.
CVector lanczos_expm(const SparseCMatrix& h, const CVector& v, double t, double tol = 1e-12, int max_basis = 40);

struct TdResult {
  QState state;
  EvolutionDiagnostics diagnostics;
  std::vector<QState> samples;
};

/// Integrates i d psi/dt = H(t) psi from t0 to t1 with an embedded
/// Dormand-Prince 5(4) pair. The diagonal of the constant part is moved into an
/// exact interaction frame before integrating. No renormalization.
/// Throws ConvergenceError when max_steps is exhausted.
TdResult evolve_td(const HamiltonianSpec& h, const QState& psi0, double t0, double t1,
                   const IntegratorConfig& cfg = {});

}  // namespace cvqpu
