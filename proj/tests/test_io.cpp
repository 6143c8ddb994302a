#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "twpa/error.hpp"
#include "twpa/io/config.hpp"
#include "twpa/io/csv.hpp"
#include "twpa/io/svg.hpp"

using namespace twpa;
using namespace twpa::io;

TEST_CASE("shortest round-trip number formatting") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-56.0) == "-56");
}

TEST_CASE("CSV emit and parse are inverse") {
  CsvTable t = numeric_table({"freq_hz", "gain_db"}, {{1e9, 2.5e9, 6.04e9}, {0.1, -1.0 / 3.0, 20.0}});
  const std::string text = to_csv(t);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.substr(0, text.find('\n')) == "freq_hz,gain_db");
  const CsvTable back = parse_csv(text);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.numbers("gain_db")[1] == -1.0 / 3.0);
  CHECK(to_csv(back) == text);
}

TEST_CASE("CSV errors name the offending place") {
  const CsvTable t = parse_csv("a,b\n1,2\n3,x\n", "data.csv");
  try {
    (void)t.numbers("b");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK(m.find("b") != std::string::npos);
    CHECK(m.find("row 3") != std::string::npos);  // file line
  }
  CHECK_THROWS_AS(t.column("missing"), ConfigError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n", "ragged.csv"), ConfigError);
  CHECK_THROWS_AS(parse_csv("", "empty.csv"), ConfigError);
  CHECK_THROWS_AS(parse_double("1.5e"), ConfigError);
  CHECK_THROWS_AS(parse_double("12abc"), ConfigError);
}

TEST_CASE("built-in preset parses into the published device") {
  const auto cfg = build_config(load_ini("paper_defaults"),
                                {"squid", "chain", "flux", "pump", "sim", "sweep"});
  CHECK(cfg.squid.ic == 0.9e-6);
  CHECK(cfg.squid.lm == 60e-12);
  CHECK(cfg.chain.n_cells == 2393);
  CHECK(cfg.chain.pattern.period == 24);
  CHECK(cfg.flux_phi0 == 0.33);
  CHECK(std::isinf(cfg.squid.rshunt));
  CHECK(cfg.pump.pp_dbm == -56.0);
  CHECK(cfg.pump.g0_db.value() == 20.0);
  CHECK(cfg.sim.n_cells_override == 240);
  CHECK(cfg.hash.size() == 16);
}

TEST_CASE("config errors") {
  SUBCASE("empty file names the first missing key") {
    try {
      (void)build_config(parse_ini("", "empty.ini"), {"squid", "chain"});
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("squid.ic_a") != std::string::npos);
    }
  }
  SUBCASE("unknown key") {
    CHECK_THROWS_WITH_AS(parse_ini("[squid]\nic = 1\n", "x.ini"),
                         doctest::Contains("x.ini:2"), ConfigError);
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_AS(parse_ini("[pumps]\n", "x.ini"), ConfigError);
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_AS(parse_ini("[flux]\nphi_ext_phi0 = 0.3\nphi_ext_phi0 = 0.4\n", "x.ini"), ConfigError);
  }
  SUBCASE("key outside a section") {
    CHECK_THROWS_AS(parse_ini("ic_a = 1\n", "x.ini"), ConfigError);
  }
  SUBCASE("malformed number") {
    auto text = paper_defaults_ini();
    text.replace(text.find("ic_a = 0.9e-6"), 13, "ic_a = 0.9u");
    CHECK_THROWS_AS(build_config(parse_ini(text, "x.ini"), {"squid"}), ConfigError);
  }
  SUBCASE("non-integer cell count") {
    auto text = paper_defaults_ini();
    text.replace(text.find("n_cells = 2393"), 14, "n_cells = 23.5");
    CHECK_THROWS_AS(build_config(parse_ini(text, "x.ini"), {"squid", "chain", "flux"}), ConfigError);
  }
  SUBCASE("hysteretic SQUID") {
    auto text = paper_defaults_ini();
    text.replace(text.find("ic_a = 0.9e-6"), 13, "ic_a = 9e-6");
    CHECK_THROWS_AS(build_config(parse_ini(text, "x.ini"), {"squid", "chain", "flux"}), ConfigError);
  }
  SUBCASE("comments and blank lines are ignored") {
    const auto ini = parse_ini("# c\n\n[flux]\n; c\nphi_ext_phi0 = 0.25 \n", "x.ini");
    CHECK(ini.get("flux", "phi_ext_phi0").value() == "0.25");
  }
}

TEST_CASE("schema help lists every key with its default") {
  const auto help = schema_help();
  for (const auto& k : config_schema()) {
    CHECK(help.find(k.section + "." + k.key) != std::string::npos);
    if (!k.default_value.empty()) CHECK(help.find(k.default_value) != std::string::npos);
  }
}

TEST_CASE("config hash depends on values only") {
  const auto a = build_config(parse_ini("[flux]\nphi_ext_phi0 = 0.3\n", "a"), {"flux"});
  const auto b = build_config(parse_ini("# x\n[flux]\nphi_ext_phi0=0.3\n", "b"), {"flux"});
  const auto c = build_config(parse_ini("[flux]\nphi_ext_phi0 = 0.31\n", "c"), {"flux"});
  CHECK(a.hash == b.hash);
  CHECK(a.hash != c.hash);
}

TEST_CASE("SVG output is deterministic") {
  CsvTable t = numeric_table({"x", "y", "z"}, {{0, 1, 2, 3}, {1, 4, 9, 16}, {0, -1, -2, -3}});
  const auto a = line_chart_svg(t, "demo");
  CHECK(a == line_chart_svg(t, "demo"));
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("polyline") != std::string::npos);
  CsvTable q{{"freq_hz", "quantity", "value"}, {}};
  q.add_row({"1", "a", "2"});
  q.add_row({"2", "a", "3"});
  q.add_row({"1", "b", "1"});
  CHECK(line_chart_svg(q, "q").find(">a<") != std::string::npos);
}
