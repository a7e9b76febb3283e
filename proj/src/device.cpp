#include "cvqpu/device.hpp"

#include <cmath>

namespace cvqpu {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::rotation: return "rotation";
    case OpKind::displacement: return "displacement";
    case OpKind::squeezing: return "squeezing";
    case OpKind::kerr: return "kerr";
    case OpKind::beamsplitter: return "beamsplitter";
  }
  return "unknown";
}

OpKind parse_op_kind(std::string_view text) {
  for (OpKind k : {OpKind::rotation, OpKind::displacement, OpKind::squeezing, OpKind::kerr, OpKind::beamsplitter})
    if (to_string(k) == text) return k;
  if (text == "displace") return OpKind::displacement;
  if (text == "squeeze") return OpKind::squeezing;
  throw ConfigError("unknown operation kind '" + std::string(text) + "'");
}

BlockParams default_block_params() { return BlockParams{}; }

namespace {

struct KeyRef {
  const char* name;
  double BlockParams::*member;
  bool is_coupling;
};

constexpr KeyRef kKeys[] = {
    {"omega_m", &BlockParams::omega_m, false},
    {"omega_f", &BlockParams::omega_f, false},
    {"omega_r", &BlockParams::omega_r, false},
    {"omega_b", &BlockParams::omega_b, false},
    {"g_mr", &BlockParams::g_mr, true},
    {"g_mb", &BlockParams::g_mb, true},
    {"g_mf", &BlockParams::g_mf, true},
    {"g0", &BlockParams::g0, true},
    {"lambda", &BlockParams::lambda, true},
    {"omega_S_drive", &BlockParams::omega_S_drive, false},
    {"omega_D_drive", &BlockParams::omega_D_drive, false},
    {"Omega_S", &BlockParams::Omega_S, false},
    {"Omega_D", &BlockParams::Omega_D, false},
    {"omega_1", &BlockParams::omega_1, false},
};

const KeyRef& find_key(std::string_view key) {
  for (const auto& k : kKeys)
    if (key == k.name) return k;
  throw ConfigError("unknown device parameter '" + std::string(key) + "'");
}

}  // namespace

void BlockParams::validate() const {
  for (const auto& k : kKeys) {
    const double v = this->*k.member;
    if (!std::isfinite(v)) throw ConfigError(std::string("device parameter ") + k.name + " is not finite");
    if (k.is_coupling && v < 0.0) throw ConfigError(std::string("coupling ") + k.name + " must be >= 0");
  }
  if (omega_m <= 0.0) throw ConfigError("omega_m must be positive");
}

const std::vector<std::string>& block_param_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& k : kKeys) out.emplace_back(k.name);
    return out;
  }();
  return keys;
}

double get_param(const BlockParams& p, std::string_view key) { return p.*find_key(key).member; }

void set_param(BlockParams& p, std::string_view key, double value) { p.*find_key(key).member = value; }

std::map<std::string, double> to_map(const BlockParams& p) {
  std::map<std::string, double> out;
  for (const auto& k : kKeys) out[k.name] = p.*k.member;
  return out;
}

double coupler_detuning(const BlockParams& p, CouplerDetuning convention) {
  return convention == CouplerDetuning::derived ? p.omega_m - p.omega_b : p.omega_b - p.omega_m;
}

double coupler_frequency_for(const BlockParams& p, double detuning, CouplerDetuning convention) {
  return convention == CouplerDetuning::derived ? p.omega_m - detuning : p.omega_m + detuning;
}

double blocking_detuning(double g_mb, double lambda) {
  if (lambda == 0.0) throw SingularModelError("lambda = 0: no coupler frequency blocks the mode exchange");
  return -g_mb * g_mb / lambda;
}

void ChainParams::validate() const {
  if (blocks.empty()) throw ConfigError("a chain needs at least one block");
  for (const auto& b : blocks) b.validate();
}

double ChainParams::mode_mismatch(std::size_t k) const {
  if (k + 1 >= blocks.size()) return 0.0;
  return std::abs(blocks[k].omega_m - blocks[k + 1].omega_m) / blocks[k].omega_m;
}

ChainParams uniform_chain(std::size_t modes, const BlockParams& block) {
  ChainParams chain;
  chain.blocks.assign(modes, block);
  chain.validate();
  return chain;
}

RegimeReport validate_regime(OpKind op, const BlockParams& p, double mean_photons, double threshold) {
  if (mean_photons < 0.0) throw ConfigError("mean photon number must be >= 0");
  RegimeReport report;
  report.op = op;
  auto add = [&](std::string name, double num, double den) {
    const double ratio = den == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(num) / std::abs(den);
    report.conditions.push_back({std::move(name), ratio, threshold, ratio >= threshold});
  };
  const double nbar = std::max(mean_photons, 1.0);
  switch (op) {
    case OpKind::rotation:
      add("|Delta_r|/g_mr", p.omega_m - p.omega_r, p.g_mr);
      break;
    case OpKind::displacement:
      add("omega_m/|Omega_D|", p.omega_m, p.Omega_D);
      break;
    case OpKind::squeezing:
      add("omega_m/g0", p.omega_m, p.g0);
      add("omega_1/g0", p.omega_1, p.g0);
      add("omega_f/g0", p.omega_f, p.g0);
      add("Omega_S/g0", p.Omega_S, p.g0);
      break;
    case OpKind::kerr:
      add("omega_f/(nbar g_mf)", p.omega_f, nbar * p.g_mf);
      add("|Delta_k|/(nbar g_mf)", 2.0 * p.omega_m - p.omega_f, nbar * p.g_mf);
      add("|Delta'_k|/(nbar g_mf)", 2.0 * p.omega_m + p.omega_f, nbar * p.g_mf);
      break;
    case OpKind::beamsplitter:
      add("|Delta_b|/g_mb", p.omega_b - p.omega_m, p.g_mb);
      break;
  }
  for (const auto& c : report.conditions) report.pass = report.pass && c.pass;
  return report;
}

}  // namespace cvqpu
