#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "twpa/io/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "twpa_cli_test.log";
  const std::string cmd = std::string(TWPA_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(log);
  std::ostringstream ss;
  ss << f.rdbuf();
  r.out = ss.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("twpa_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help prints the configuration schema") {
  const auto r = run("--help");
  CHECK(r.code == 0);
  CHECK(r.out.find("squid.ic_a") != std::string::npos);
  CHECK(r.out.find("0.9e-6") != std::string::npos);
  CHECK(r.out.find("chain.n_cells") != std::string::npos);
}

TEST_CASE("design lists the first stopband") {
  const auto dir = scratch("design");
  const auto r = run("--config paper_defaults --out " + dir.string() + " --plot design");
  REQUIRE(r.code == 0);
  const auto sb = twpa::io::read_csv(dir / "stopbands.csv");
  const auto lo = sb.numbers("f_lo_hz"), hi = sb.numbers("f_hi_hz");
  REQUIRE(!lo.empty());
  CHECK(hi[0] > 10.2e9);
  CHECK(lo[0] < 12e9);
  CHECK(fs::exists(dir / "s21.csv"));
  CHECK(fs::exists(dir / "dispersion.svg"));
  CHECK(slurp(dir / "run_manifest.json").find("config_hash") != std::string::npos);
}

TEST_CASE("gain reports the compression point at band centre") {
  const auto dir = scratch("gain");
  REQUIRE(run("--config paper_defaults --out " + dir.string() + " gain").code == 0);
  const auto t = twpa::io::read_csv(dir / "gain.csv");
  const auto f = t.numbers("freq_hz"), g = t.numbers("gain_db");
  std::size_t best = 0;
  for (std::size_t i = 0; i < g.size(); ++i) if (g[i] > g[best]) best = i;
  CHECK(g[best] == doctest::Approx(20.0).epsilon(1e-4));
  CHECK(twpa::io::parse_double(t.rows[best][2]) == doctest::Approx(-82.0).epsilon(1e-5));
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run("--config paper_defaults --seed 3 --out " + a.string() + " --plot design").code == 0);
  REQUIRE(run("--config paper_defaults --seed 3 --out " + b.string() + " --plot design").code == 0);
  for (const char* f : {"s21.csv", "stopbands.csv", "dispersion.csv", "s21.svg"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  std::ofstream(dir / "empty.ini").close();
  auto r = run("--config " + (dir / "empty.ini").string() + " --out " + dir.string() + " design");
  CHECK(r.code == 2);
  CHECK(r.out.find("squid.ic_a") != std::string::npos);

  r = run("--config " + (dir / "missing.ini").string() + " design");
  CHECK(r.code == 2);
  CHECK(r.out.find("missing.ini") != std::string::npos);

  r = run("frobnicate");
  CHECK(r.code == 2);

  // Flat data: no stopband, nothing to fit.
  std::ofstream s21(dir / "flat.csv");
  s21 << "freq_hz,s21_db,s21_phase_rad\n";
  for (int i = 0; i < 50; ++i) s21 << 2e9 + i * 1e8 << ",0,0\n";
  s21.close();
  r = run("--config paper_defaults --out " + dir.string() + " fit-s21 --data " +
          (dir / "flat.csv").string());
  CHECK(r.code == 3);
}

TEST_CASE("noise, calibration and snr commands") {
  const auto dir = scratch("noise");
  {
    std::ofstream f(dir / "noise.csv");
    f << "freq_hz,temp_k,pout_dbm,rbw_hz\n";
    // Two-mode model, G = 20 dB, N_exc = 1.5, r = 1, f_p = 12 GHz
    const double h = 6.62607015e-34, kb = 1.380649e-23;
    for (double fs : {5e9, 6e9}) {
      for (double t : {0.05, 0.2, 0.6}) {
        auto n = [&](double ff) { return 0.5 / std::tanh(h * ff / (2 * kb * t)); };
        const double photons = 100.0 * (n(fs) + n(12e9 - fs) + 1.5);
        f.precision(17);
        f << fs << "," << t << "," << 10 * std::log10(photons * h * fs * 1e6 / 1e-3) << ",1e6\n";
      }
    }
  }
  auto r = run("--out " + dir.string() + " fit-noise --mode two-mode --fp 12e9 --eta1 0.9 --n2 12 "
               "--gss-db 19 --data " + (dir / "noise.csv").string());
  REQUIRE(r.code == 0);
  const auto fit = twpa::io::read_csv(dir / "noise_fit.csv");
  CHECK(fit.numbers("g_sys_db")[0] == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(fit.numbers("n_sys_exc")[1] == doctest::Approx(1.5).epsilon(1e-9));
  const auto br = twpa::io::read_csv(dir / "breakdown.csv");
  CHECK(br.header == std::vector<std::string>{"freq_hz", "quantum_limit", "pre_twpa",
                                              "twpa_excess", "post_twpa", "total"});
  CHECK(br.numbers("total")[0] == doctest::Approx(2.5).epsilon(1e-9));

  r = run("--out " + dir.string() + " fit-noise --mode bogus --data " + (dir / "noise.csv").string());
  CHECK(r.code == 2);

  {
    std::ofstream g(dir / "g2.csv");
    g << "freq_hz,g2_db\n4e9,40\n5e9,41\n";
    std::ofstream s(dir / "rt.csv");
    s << "freq_hz,s21_db\n4e9,-26\n5e9,-25\n";
  }
  REQUIRE(run("--out " + dir.string() + " calibrate --g2 " + (dir / "g2.csv").string() + " --s21 " +
              (dir / "rt.csv").string()).code == 0);
  CHECK(twpa::io::read_csv(dir / "insertion_loss.csv").numbers("il_db")[0] == 66.0);

  REQUIRE(run("--out " + dir.string() + " snr --gss-start 0 --gss-stop 10 --gss-step 5").code == 0);
  const auto snr = twpa::io::read_csv(dir / "snr.csv");
  CHECK(snr.rows.size() == 3);
  CHECK(snr.numbers("delta_snr")[0] == doctest::Approx(10.5 / 11.0));  // defaults: N_in 0.5, N_T 0.5, N2 10
}
