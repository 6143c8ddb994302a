#pragma once

// Run configuration: flat INI sections of `key = value` in SI base units.
// Unknown sections and keys are rejected.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twpa/chain_model.hpp"
#include "twpa/squid_core.hpp"

namespace twpa::io {

struct KeySpec {
  std::string section;
  std::string key;
  std::string default_value;  ///< published-device value; also used by the built-in preset
  bool required = true;
  std::string doc;
};

const std::vector<KeySpec>& config_schema();

/// Raw key/value pairs with source line numbers for messages.
struct IniFile {
  std::string source;
  std::map<std::string, std::map<std::string, std::pair<std::string, int>>> values;

  std::optional<std::string> get(std::string_view section, std::string_view key) const;
};

/// Parses INI text. Throws ConfigError naming the line for syntax errors,
/// unknown sections/keys and duplicates.
IniFile parse_ini(std::string_view text, std::string_view source);

/// Reads a file, or the built-in preset when `path` is "paper_defaults".
IniFile load_ini(const std::string& path);

/// Complete preset text reproducing the published device.
std::string paper_defaults_ini();

/// Human-readable schema listing for --help.
std::string schema_help();

struct PumpSection {
  double fp_hz = 0.0;
  double pp_dbm = 0.0;
  std::optional<double> g0_db;
};

struct SimSection {
  long n_cells_override = 0;
  double tol = 1e-6;
  double settle_s = 400e-9;
  double record_s = 10e-9;
  double ramp_s = 0.0;
  int orders = 3;
  double probe_dbm = -130.0;
  double fs_hz = 0.0;  ///< 0: one grid step below f_p/2
};

struct SweepSection {
  double f_start_hz = 0.0;
  double f_stop_hz = 0.0;
  long n_points = 0;
};

struct RunConfig {
  std::string hash;  ///< FNV-1a of the source text
  SquidParams squid;
  ChainSpec chain;
  double flux_phi0 = 0.0;
  PumpSection pump;
  SimSection sim;
  SweepSection sweep;
};

/// Builds the typed configuration. Every required key of the listed sections
/// must be present; the first missing one is named in the ConfigError.
RunConfig build_config(const IniFile& ini, const std::vector<std::string>& sections);

std::string fnv1a_hex(std::string_view data);

}  // namespace twpa::io
