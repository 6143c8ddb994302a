#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "twpa/constants.hpp"
#include "twpa/gain_analytics.hpp"

using namespace twpa;

TEST_CASE("pump phase amplitude") {
  CHECK(pump_phase_amplitude(0.0, 52.0, 58.6e-12) == 0.0);
  const double p = dbm_to_watt(-56.0);
  const double a = pump_phase_amplitude(p, 52.0, 58.6e-12);
  CHECK(pump_phase_amplitude(2 * p, 52.0, 58.6e-12) == doctest::Approx(std::sqrt(2.0) * a));
  // I_p = sqrt(2 P / Z), phi_p = L I_p / phi0_reduced
  CHECK(a == doctest::Approx(58.6e-12 * std::sqrt(2 * p / 52.0) / kReducedFluxQuantum));
  CHECK_THROWS_AS(pump_phase_amplitude(-1.0, 50.0, 1e-12), std::invalid_argument);
}

TEST_CASE("small-signal gain limits") {
  CHECK(small_signal_gain(0.08, 0.1, 0.0, 2393, 6e9, 12e9) == doctest::Approx(1.0));
  CHECK(small_signal_gain(0.08, 0.1, 0.5, 2393, 12e9 - 1e-3, 12e9) == doctest::Approx(1.0));
  const double gn = std::acosh(10.0);
  CHECK(gn == doctest::Approx(2.9932).epsilon(1e-4));
  CHECK(ratio_to_db(gain_from_coefficient(gn / 1000, 1000)) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("mismatch form reduces to cosh^2 and is continuous at g' = 0") {
  const double g = 1e-3, n = 2000;
  const double c = std::cosh(g * n);
  CHECK(gain_from_coefficient(g, n, 0.0) == doctest::Approx(c * c).epsilon(1e-14));
  CHECK(gain_from_coefficient(g, n, 1e-12) == doctest::Approx(c * c).epsilon(1e-9));
  const double at = gain_from_coefficient(g, n, 2 * g);
  CHECK(at == doctest::Approx(gain_from_coefficient(g, n, 2 * g * (1 + 1e-9))).epsilon(1e-6));
  CHECK(at == doctest::Approx(gain_from_coefficient(g, n, 2 * g * (1 - 1e-9))).epsilon(1e-6));
  // g' = 0: |1 + i g n|^2
  CHECK(at == doctest::Approx(1.0 + g * g * n * n).epsilon(1e-9));
}

TEST_CASE("jacobi dn limits and quadrature oracle") {
  for (double u : {0.0, 0.3, 1.0, 4.0, 12.0}) {
    CHECK(std::abs(jacobi_dn(u, 0.0) - 1.0) < 1e-15);
    CHECK(std::abs(jacobi_dn(u, 1.0) - 1.0 / std::cosh(u)) < 1e-15);
  }
  CHECK(std::abs(jacobi_dn(0.5, 0.9) - oracle::jacobi_dn_quad(0.5, 0.9)) < 1e-9);
  CHECK_THROWS_AS(jacobi_dn(1.0, 1.1), std::domain_error);
  CHECK_THROWS_AS(jacobi_dn(1.0, -0.1), std::domain_error);
}

TEST_CASE("dn precision close to k = 1 through the complementary parameter") {
  // k^2 = 1 / (1 + x) for tiny x
  for (double x : {1e-6, 1e-9, 1e-12}) {
    const double u = 3.0;
    const double k = 1.0 / std::sqrt(1.0 + x);
    const double ref = oracle::jacobi_dn_quad(u, k);
    CHECK(std::abs(jacobi_dn_m1(u, x / (1 + x)) - ref) < 1e-9);
  }
}

TEST_CASE("depleted gain") {
  const double gn = std::acosh(10.0);
  const double pp = dbm_to_watt(-56.0);
  CHECK(depleted_gain(0.0, pp, 6e9, 12e9, gn) == doctest::Approx(100.0).epsilon(1e-12));
  const double ps = pp / (4 * 100.0);
  const double drop = ratio_to_db(depleted_gain(ps, pp, 6e9, 12e9, gn)) - 20.0;
  CHECK(drop >= -1.3);
  CHECK(drop <= -0.7);
  CHECK(ratio_to_db(depleted_gain(ps, pp, 6e9, 12e9, gn, DepletionMethod::approx)) ==
        doctest::Approx(20.0 - 10 * std::log10(1.0 + 0.25 + 0.25 * 0.25 / 4)).epsilon(1e-12));
}

TEST_CASE("depleted gain is non-increasing in signal power") {
  const double gn = 3.0, pp = 1e-9;
  double prev = INFINITY;
  for (int i = 0; i < 200; ++i) {
    const double g = depleted_gain(pp * std::pow(10.0, -8.0 + i * 0.05), pp, 6e9, 12e9, gn);
    CHECK(g <= prev * (1 + 1e-12));
    prev = g;
  }
}

TEST_CASE("exact and approximate depletion agree at high gain") {
  double worst = 0.0;
  for (double g0db = 15.0; g0db <= 30.0; g0db += 1.0) {
    const double g0 = db_to_ratio(g0db), gn = std::acosh(std::sqrt(g0));
    for (double r = 1e-4; r <= 1.0; r *= 1.3) {
      const double ps = r / (2 * g0);  // P_s <= P_p / (2 G0) with P_p = 1
      const double e = ratio_to_db(depleted_gain(ps, 1.0, 6e9, 12e9, gn));
      const double a = ratio_to_db(depleted_gain(ps, 1.0, 6e9, 12e9, gn, DepletionMethod::approx));
      worst = std::max(worst, std::abs(e - a));
    }
    // Compression point consistency: exact gain at P1dB lies within 0.3 dB of -1 dB.
    const double ps1 = 1.0 / (4 * g0);
    CHECK(std::abs(ratio_to_db(depleted_gain(ps1, 1.0, 6e9, 12e9, gn)) - g0db + 1.0) < 0.3);
  }
  CHECK(worst < 0.3);
}

TEST_CASE("compression points") {
  CHECK(compression_point(-56, 20).p1db_dbm == -82.0);
  CHECK(compression_point(-56, 20, MixingMode::four_wave).p1db_dbm == -85.0);
  CHECK(compression_point(-46, 20).p1db_dbm == doctest::Approx(-72.0));
  CHECK(mode_name(MixingMode::three_wave) == "3wm");
  CHECK_THROWS_AS(compression_point(-56, 0.0), std::invalid_argument);
}
