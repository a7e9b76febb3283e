#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cvqpu/fock.hpp"

namespace cvqpu {

/// Slots whose label starts with 'M' are bosonic modes; the rest are qubits.
bool is_mode_label(std::string_view label);

class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(CMatrix rho, SubsystemLayout layout);

  static DensityMatrix pure(const QState& psi);

  const CMatrix& matrix() const { return rho_; }
  const SubsystemLayout& layout() const { return layout_; }
  Eigen::Index dim() const { return rho_.rows(); }
  Complex trace() const { return rho_.trace(); }
  double purity() const;
  bool is_pure(double tol = 1e-10) const { return std::abs(purity() - 1.0) <= tol; }

  /// Throws ConfigError when Hermiticity, unit trace or positivity fails by
  /// more than `tol`.
  void validate(double tol = 1e-10) const;

 private:
  CMatrix rho_;
  SubsystemLayout layout_;
};

/// Reduced state on `keep` (returned in layout order). Throws ConfigError for
/// unknown or empty `keep`.
DensityMatrix partial_trace(const QState& psi, const std::vector<std::string>& keep);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);

/// Uhlmann fidelity (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2, clamped to [0, 1].
double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);
/// <psi|rho|psi> for a normalized psi.
double fidelity(const CVector& psi, const DensityMatrix& rho);
double fidelity(const QState& a, const QState& b);

struct WignerGridSpec {
  double x_min = -5.0, x_max = 5.0;
  int nx = 121;
  double p_min = -5.0, p_max = 5.0;
  int np = 121;
  /// Extra Fock levels for the displacement operators; negative picks one from
  /// the largest |alpha| on the grid.
  int padding = -1;
};

struct WignerGrid {
  RVector x, p;
  /// w(i, j) = W(x_i, p_j).
  RMatrix w;

  double integral() const;
  double min() const { return w.minCoeff(); }
  /// (x, p) of the largest value.
  std::pair<double, double> argmax() const;
};

/// W(alpha) = (1/pi) Tr[rho D(alpha) Pi D(alpha)^dag] with alpha = (x + ip)/sqrt2,
/// so the vacuum gives W(0, 0) = 1/pi and W integrates to 1 over dx dp.
/// Throws ConfigError for multi-slot input.
WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& spec = {});

void write_wigner_csv(const WignerGrid& grid, const std::string& path);
void write_wigner_json(const WignerGrid& grid, const std::string& path);

struct PhotonStats {
  std::vector<std::string> modes;
  std::vector<double> mean;
  /// Population of the top 3 Fock levels of each mode.
  std::vector<double> edge_population;
  double purity = 1.0;
};

PhotonStats photon_stats(const DensityMatrix& rho);

/// Total photon number of every basis index, summed over mode slots.
RVector total_photon_number(const SubsystemLayout& layout);

/// beta maximizing <beta|rho|beta> for a single-mode rho.
Complex best_fit_coherent(const DensityMatrix& rho);

/// Maximum of a unimodal f on [a, b] by golden-section search; returns x.
double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol);

}  // namespace cvqpu
