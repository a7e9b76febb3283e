#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cvqpu/types.hpp"

namespace cvqpu {

enum class OpKind { rotation, displacement, squeezing, kerr, beamsplitter };

std::string_view to_string(OpKind kind);
OpKind parse_op_kind(std::string_view text);

/// Circuit parameters of one building block (M, F, R, B). Every frequency is an
/// angular frequency in rad/s.
struct BlockParams {
  double omega_m = 1e10;
  double omega_f = 4e8;
  double omega_r = 4e9;
  double omega_b = 5e9;
  double g_mr = 1.05e8;
  double g_mb = 1.04e8;
  double g_mf = 4e8 / 483.0;
  double g0 = 8.3e6;
  double lambda = 7e6;
  double omega_S_drive = 4e8;
  double omega_D_drive = 1e10;
  double Omega_S = 1.5e8;
  double Omega_D = 6e7;
  double omega_1 = 1e10 + 4e8 / 2.0;

  /// Throws ConfigError when an invariant fails (non-finite value, omega_m <= 0,
  /// negative coupling magnitude).
  void validate() const;

  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

/// Operating point used for every reported simulation.
BlockParams default_block_params();

/// Serialization keys, in canonical order.
const std::vector<std::string>& block_param_keys();
double get_param(const BlockParams& p, std::string_view key);
void set_param(BlockParams& p, std::string_view key, double value);
std::map<std::string, double> to_map(const BlockParams& p);

/// Sign convention for the coupler detuning.
enum class CouplerDetuning {
  /// Delta_b = omega_m - omega_b. Second-order theory for the excitation-
  /// conserving coupler then gives g_eff = lambda + g_mb^2 / Delta_b.
  derived,
  /// Delta_b = omega_b - omega_m, as printed alongside the effective model.
  printed,
};

double coupler_detuning(const BlockParams& p, CouplerDetuning convention);
/// omega_b that realizes a given Delta_b under `convention`.
double coupler_frequency_for(const BlockParams& p, double detuning, CouplerDetuning convention);

/// Delta_block = -g_mb^2 / lambda. Throws SingularModelError for lambda == 0.
double blocking_detuning(double g_mb, double lambda);

struct ChainParams {
  /// Block k holds mode M_k and the coupler B_k between M_k and M_{k+1}; its
  /// `lambda` is the direct M_k-M_{k+1} exchange.
  std::vector<BlockParams> blocks;

  std::size_t modes() const { return blocks.size(); }
  void validate() const;
  /// |omega_m(k) - omega_m(k+1)| / omega_m(k); the coupler model assumes 0.
  double mode_mismatch(std::size_t k) const;
};

ChainParams uniform_chain(std::size_t modes, const BlockParams& block = default_block_params());

struct RegimeCondition {
  std::string name;
  double ratio = 0.0;
  double threshold = 10.0;
  bool pass = false;
};

struct RegimeReport {
  OpKind op = OpKind::rotation;
  std::vector<RegimeCondition> conditions;
  bool pass = true;
};

/// Checks every "much greater than" assumption behind the effective model of
/// `op` as a ratio against `threshold`. Reports only; never throws for a
/// failing condition.
RegimeReport validate_regime(OpKind op, const BlockParams& params, double mean_photons, double threshold = 10.0);

}  // namespace cvqpu
