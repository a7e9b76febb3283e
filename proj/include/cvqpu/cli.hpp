#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cvqpu/experiments.hpp"

namespace cvqpu {

struct OutputConfig {
  std::string dir = ".";
  OutputFormat format = OutputFormat::csv;
  /// Fixed file stem; empty uses <opkind>_<sweptname>_<timestamp>.
  std::string name;
};

/// Everything a config file can set.
struct RunConfig {
  ExperimentConfig experiment;
  OutputConfig output;
  /// Chain length for `compile`; 0 takes it from the circuit.
  std::size_t chain_modes = 0;
};

/// Sections [device], [model], [experiment], [integrator], [output] of
/// `key = value` lines; '#' and ';' start comments. Unknown sections or keys
/// and malformed values throw ConfigError naming `source` and the line.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
/// Throws IoError when the file cannot be read.
RunConfig parse_config(const std::string& path);
/// Applies "section.key=value".
void apply_override(RunConfig& cfg, std::string_view assignment);
/// Inverse of parse_config_text; every key written at full precision.
std::string serialize_config(const RunConfig& cfg);

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRegime = 2, kExitConvergence = 3, kExitIo = 4 };

/// Parses argv, runs one subcommand and returns its exit code. Results go to
/// files; the summary goes to `out`, errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cvqpu
