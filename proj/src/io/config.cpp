#include "twpa/io/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "twpa/error.hpp"
#include "twpa/io/csv.hpp"

namespace twpa::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

const KeySpec* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : config_schema()) {
    if (k.section == section && k.key == key) return &k;
  }
  return nullptr;
}

bool known_section(std::string_view section) {
  const auto& s = config_schema();
  return std::any_of(s.begin(), s.end(), [&](const KeySpec& k) { return k.section == section; });
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = {
      {"squid", "ic_a", "0.9e-6", true, "critical current of the small junction [A]"},
      {"squid", "cj_f", "50e-15", true, "junction capacitance [F] (assumed; time domain only)"},
      {"squid", "lm_h", "60e-12", true, "meander shunt inductance [H]"},
      {"squid", "lp_h", "0", true, "parasitic series inductance [H]"},
      {"squid", "lj0l_h", "0", true, "linear inductance of the large via junction [H]"},
      {"squid", "lw_h", "37e-12", true, "inter-cell wire inductance [H]"},
      {"squid", "rshunt_ohm", "inf", false, "junction shunt resistance [Ohm]; inf = undamped"},
      {"chain", "n_cells", "2393", true, "number of unit cells"},
      {"chain", "pitch_m", "10e-6", true, "cell length [m] (reporting only)"},
      {"chain", "c1_f", "10.5e-15", true, "ground capacitance C1 [F]"},
      {"chain", "c2_f", "68.2e-15", true, "ground capacitance C2 [F]"},
      {"chain", "c3_f", "50.4e-15", true, "ground capacitance C3 [F]"},
      {"chain", "group_len", "6", true, "cells per capacitance group"},
      {"chain", "ordering", "1 2 1 3", true, "group sequence, 1-based indices into C1..C3 (space or comma separated)"},
      {"chain", "z_term_ohm", "50", true, "port impedance [Ohm]"},
      {"chain", "loss_tangent", "0", true, "dielectric loss tangent of the ground capacitors"},
      {"flux", "phi_ext_phi0", "0.33", true, "external flux [Phi0]"},
      {"pump", "fp_hz", "12.08e9", true, "pump frequency [Hz]"},
      {"pump", "pp_dbm", "-56", true, "pump power at the device input [dBm]"},
      {"pump", "g0_db", "20", false, "small-signal gain at f_p/2 [dB] for the analytic profile; derived from the circuit when absent"},
      {"sim", "n_cells_override", "240", false, "time-domain chain length; 0 keeps chain.n_cells"},
      {"sim", "tol", "1e-6", false, "steady-state tolerance between extraction windows"},
      {"sim", "settle_s", "400e-9", false, "time budget to reach steady state [s]"},
      {"sim", "record_s", "10e-9", false, "extraction window [s]; sets the frequency grid"},
      {"sim", "ramp_s", "0", false, "drive ramp [s]; 0 = one window"},
      {"sim", "orders", "3", false, "highest pump order of the conversion gains"},
      {"sim", "probe_dbm", "-130", false, "probe power [dBm]"},
      {"sim", "fs_hz", "0", false, "signal frequency [Hz]; 0 = one grid step below f_p/2"},
      {"sweep", "f_start_hz", "1e9", true, "first frequency [Hz]"},
      {"sweep", "f_stop_hz", "20e9", true, "last frequency [Hz]"},
      {"sweep", "n_points", "2000", true, "number of frequency points"},
  };
  return schema;
}

std::optional<std::string> IniFile::get(std::string_view section, std::string_view key) const {
  const auto s = values.find(std::string(section));
  if (s == values.end()) return std::nullopt;
  const auto k = s->second.find(std::string(key));
  if (k == s->second.end()) return std::nullopt;
  return k->second.first;
}

IniFile parse_ini(std::string_view text, std::string_view source) {
  IniFile ini;
  ini.source = std::string(source);
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) throw ConfigError(where() + "unknown section [" + section + "]");
      ini.values[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where() + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (section.empty()) throw ConfigError(where() + "key '" + key + "' outside a section");
    if (!find_key(section, key)) throw ConfigError(where() + "unknown key " + section + "." + key);
    auto& sec = ini.values[section];
    if (sec.count(key)) throw ConfigError(where() + "duplicate key " + section + "." + key);
    sec[key] = {value, line_no};
    if (end == text.size()) break;
  }
  return ini;
}

IniFile load_ini(const std::string& path) {
  if (path == "paper_defaults") return parse_ini(paper_defaults_ini(), "paper_defaults");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_ini(ss.str(), path);
}

std::string paper_defaults_ini() {
  std::string out;
  std::string section;
  for (const auto& k : config_schema()) {
    if (k.default_value.empty()) continue;
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.key + " = " + k.default_value + "\n";
  }
  return out;
}

std::string schema_help() {
  std::ostringstream os;
  os << "Configuration file: INI sections with `key = value`, SI base units.\n"
        "Unknown sections or keys are errors. Built-in preset: --config paper_defaults\n";
  std::string section;
  for (const auto& k : config_schema()) {
    if (k.section != section) {
      section = k.section;
      os << "\n[" << section << "]\n";
    }
    const std::string name = k.section + "." + k.key;
    os << "  " << name;
    for (std::size_t i = name.size(); i < 24; ++i) os << ' ';
    os << (k.default_value.empty() ? "(none)" : k.default_value);
    for (std::size_t i = k.default_value.empty() ? 6 : k.default_value.size(); i < 10; ++i) os << ' ';
    os << (k.required ? "  " : "  optional; ") << k.doc << "\n";
  }
  return os.str();
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig build_config(const IniFile& ini, const std::vector<std::string>& sections) {
  auto wanted = [&](const std::string& s) {
    return std::find(sections.begin(), sections.end(), s) != sections.end();
  };
  // presence check first so the message names the first missing key
  for (const auto& k : config_schema()) {
    if (k.required && wanted(k.section) && !ini.get(k.section, k.key)) {
      throw ConfigError(ini.source + ": missing required key " + k.section + "." + k.key);
    }
  }
  auto num = [&](const char* section, const char* key) -> std::optional<double> {
    const auto v = ini.get(section, key);
    if (!v) {
      const KeySpec* spec = find_key(section, key);
      if (spec->required || spec->default_value.empty()) return std::nullopt;
      return parse_double(spec->default_value);
    }
    const int line = ini.values.at(section).at(key).second;
    return parse_double(*v, ini.source + ":" + std::to_string(line) + ": " + section + "." + key);
  };
  auto integer = [&](const char* section, const char* key) -> long {
    const double v = *num(section, key);
    if (v != std::floor(v)) {
      throw ConfigError(ini.source + ": " + section + "." + key + " must be an integer");
    }
    return static_cast<long>(v);
  };

  RunConfig c;
  std::string text;
  for (const auto& [s, kv] : ini.values) {
    for (const auto& [k, v] : kv) text += s + "." + k + "=" + v.first + "\n";
  }
  c.hash = fnv1a_hex(text);

  if (wanted("squid")) {
    c.squid.ic = *num("squid", "ic_a");
    c.squid.cj = *num("squid", "cj_f");
    c.squid.lm = *num("squid", "lm_h");
    c.squid.lp = *num("squid", "lp_h");
    c.squid.lj0l = *num("squid", "lj0l_h");
    c.squid.lw = *num("squid", "lw_h");
    c.squid.rshunt = *num("squid", "rshunt_ohm");
  }
  if (wanted("chain")) {
    c.chain.n_cells = integer("chain", "n_cells");
    c.chain.pitch = *num("chain", "pitch_m");
    const double cs[3] = {*num("chain", "c1_f"), *num("chain", "c2_f"), *num("chain", "c3_f")};
    const long group = integer("chain", "group_len");
    std::vector<int> ordering;
    std::string ord_text = *ini.get("chain", "ordering");
    std::replace(ord_text.begin(), ord_text.end(), ',', ' ');
    std::istringstream ord(ord_text);
    std::string tok;
    while (ord >> tok) {
      const double v = parse_double(tok, ini.source + ": chain.ordering");
      if (v != 1.0 && v != 2.0 && v != 3.0) {
        throw ConfigError(ini.source + ": chain.ordering entries must be 1, 2 or 3");
      }
      ordering.push_back(static_cast<int>(v) - 1);
    }
    if (ordering.empty()) throw ConfigError(ini.source + ": chain.ordering is empty");
    if (group < 1) throw ConfigError(ini.source + ": chain.group_len must be >= 1");
    try {
      c.chain.pattern = build_pattern(cs[0], cs[1], cs[2], static_cast<int>(group), ordering);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(ini.source + ": chain: " + e.what());
    }
    c.chain.z_term = *num("chain", "z_term_ohm");
    c.chain.loss_tangent = *num("chain", "loss_tangent");
  }
  if (wanted("flux")) c.flux_phi0 = *num("flux", "phi_ext_phi0");
  if (wanted("squid") && wanted("chain")) {
    c.chain.squid = c.squid;
    try {
      validate(c.squid);
      c.chain.flux = flux_point_from_phi0(c.squid, c.flux_phi0);
      validate(c.chain);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(ini.source + ": " + e.what());
    } catch (const std::domain_error& e) {
      throw ConfigError(ini.source + ": " + e.what());
    }
  }
  if (wanted("pump")) {
    c.pump.fp_hz = *num("pump", "fp_hz");
    c.pump.pp_dbm = *num("pump", "pp_dbm");
    c.pump.g0_db = num("pump", "g0_db");
    if (!(c.pump.fp_hz > 0.0)) throw ConfigError(ini.source + ": pump.fp_hz must be positive");
  }
  if (wanted("sim")) {
    c.sim.n_cells_override = integer("sim", "n_cells_override");
    c.sim.tol = *num("sim", "tol");
    c.sim.settle_s = *num("sim", "settle_s");
    c.sim.record_s = *num("sim", "record_s");
    c.sim.ramp_s = *num("sim", "ramp_s");
    c.sim.orders = static_cast<int>(integer("sim", "orders"));
    c.sim.probe_dbm = *num("sim", "probe_dbm");
    c.sim.fs_hz = *num("sim", "fs_hz");
    if (!(c.sim.record_s > 0.0)) throw ConfigError(ini.source + ": sim.record_s must be positive");
    if (c.sim.orders < 0) throw ConfigError(ini.source + ": sim.orders must be >= 0");
  }
  if (wanted("sweep")) {
    c.sweep.f_start_hz = *num("sweep", "f_start_hz");
    c.sweep.f_stop_hz = *num("sweep", "f_stop_hz");
    c.sweep.n_points = integer("sweep", "n_points");
    if (!(c.sweep.f_start_hz > 0.0) || !(c.sweep.f_stop_hz > c.sweep.f_start_hz)) {
      throw ConfigError(ini.source + ": sweep requires 0 < f_start_hz < f_stop_hz");
    }
    if (c.sweep.n_points < 2) throw ConfigError(ini.source + ": sweep.n_points must be >= 2");
  }
  return c;
}

}  // namespace twpa::io
