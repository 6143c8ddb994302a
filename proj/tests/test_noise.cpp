#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "twpa/constants.hpp"
#include "twpa/error.hpp"
#include "twpa/chain_model.hpp"
#include "twpa/noise_calibration.hpp"

using namespace twpa;

TEST_CASE("thermal photon number") {
  CHECK(planck_noise(6e9, 0.0) == 0.5);
  CHECK(planck_noise(6e9, 1e-4) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(planck_noise(6e9, 1.0) == doctest::Approx(3.496).epsilon(3e-4));
  const double f = 1e9, t = 60.0 * kPlanck * f / kBoltzmann;
  CHECK(planck_noise(f, t) == doctest::Approx(kBoltzmann * t / (kPlanck * f)).epsilon(0.01));
  double prev = 0.0;
  for (double tt = 0.0; tt < 5.0; tt += 0.01) {
    const double n = planck_noise(6e9, tt);
    CHECK(n >= 0.5);
    CHECK(n >= prev);
    prev = n;
  }
  CHECK_THROWS_AS(planck_noise(6e9, -1.0), std::invalid_argument);
}

TEST_CASE("photons from power") {
  CHECK(photons_from_power(kPlanck * 6e9 * 1e3, 6e9, 1e3) == doctest::Approx(1.0));
  CHECK(photons_from_power(1e-18, 6e9, 200.0) ==
        doctest::Approx(0.5 * photons_from_power(1e-18, 6e9, 100.0)));
  CHECK(photons_from_power(1e-18, 6e9, 100.0) == doctest::Approx(2515.32).epsilon(1e-5));
}

TEST_CASE("two-mode fit round trip") {
  const std::vector<double> f = {4e9, 5e9, 6e9, 7e9};
  const std::vector<double> t = {0.02, 0.1, 0.2, 0.4, 0.8};
  const auto sweep = synthesize_two_mode(f, t, 12e9, 20.0, 2.0, -0.2);
  const auto fits = fit_two_mode(sweep, 12e9, -0.2);
  REQUIRE(fits.size() == f.size());
  for (const auto& r : fits) {
    CHECK(std::abs(r.g_sys_db - 20.0) < 0.1);
    CHECK(r.n_sys_exc == doctest::Approx(2.0).epsilon(0.02));
    CHECK(r.g_sys_db == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(r.n_sys_exc == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_FALSE(r.nonphysical);
    CHECK(r.g_sys_db_range.lo <= r.g_sys_db);
    CHECK(r.g_sys_db_range.hi >= r.g_sys_db);
    CHECK(r.n_sys_exc_range.lo <= r.n_sys_exc);
    CHECK(r.n_sys_exc_range.hi >= r.n_sys_exc);
  }
}

TEST_CASE("two temperatures give an exact solve") {
  const std::vector<double> f = {6e9};
  const std::vector<double> t = {0.05, 0.5};
  const auto fits = fit_two_mode(synthesize_two_mode(f, t, 12e9, 18.0, 1.3), 12e9);
  CHECK(fits[0].residual < 1e-9 * db_to_ratio(18.0));
}

TEST_CASE("two-mode fit input checks") {
  NoiseSweep one = {{6e9, 0.1, -100.0, 1e6}, {6e9, 0.1, -99.0, 1e6}};
  CHECK_THROWS_AS(fit_two_mode(one, 12e9), std::invalid_argument);
  NoiseSweep above = {{13e9, 0.1, -100.0, 1e6}, {13e9, 0.5, -99.0, 1e6}};
  CHECK_THROWS_AS(fit_two_mode(above, 12e9), std::invalid_argument);
  NoiseSweep neg = {{6e9, 0.1, -99.0, 1e6}, {6e9, 0.5, -100.0, 1e6}};
  CHECK_THROWS_AS(fit_two_mode(neg, 12e9), FitError);
}

TEST_CASE("single-mode fit") {
  const std::vector<double> f = {4e9, 6e9, 8e9};
  const std::vector<double> t = {0.02, 0.2, 0.5, 1.0};
  SUBCASE("noiseless, unit transmission") {
    const auto fits = fit_single_mode(synthesize_single_mode(f, t, 1.0, 40.0, 12.0), 1.0);
    for (const auto& r : fits) {
      CHECK(r.g2_db == doctest::Approx(40.0).epsilon(1e-12));
      CHECK(r.n2 == doctest::Approx(12.0).epsilon(1e-10));
    }
  }
  SUBCASE("1% multiplicative noise") {
    // load swept 20 mK - 2 K in 24 steps; RMS error over the draws
    const auto clean = synthesize_single_mode(f, linspace(0.02, 2.0, 24), 0.8, 40.0, 12.0);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 0.01);
    double ss = 0.0;
    int count = 0;
    for (int k = 0; k < 100; ++k) {
      auto s = clean;
      for (auto& r : s) r.p_out_dbm += ratio_to_db(1.0 + n(rng));
      for (const auto& r : fit_single_mode(s, 0.8)) {
        ss += (r.g2_db - 40.0) * (r.g2_db - 40.0);
        ++count;
      }
    }
    CHECK(std::sqrt(ss / count) < 0.1);
  }
}

TEST_CASE("system noise breakdown") {
  const auto q = system_noise_breakdown(1.0, 0.0, 0.0, 20.0);
  CHECK(q.total == 1.0);
  const auto b = system_noise_breakdown(0.9, 1.0, 12.0, 19.0);
  CHECK(b.pre_twpa == doctest::Approx(0.1111).epsilon(1e-3));
  CHECK(b.twpa_excess == doctest::Approx(1.1111).epsilon(1e-3));
  CHECK(b.post_twpa == doctest::Approx(0.168).epsilon(3e-3));
  CHECK(b.total == doctest::Approx(2.39).epsilon(2e-3));
  double prev = 0.0;
  for (double eta = 1.0; eta > 0.3; eta -= 0.05) {
    const auto x = system_noise_breakdown(eta, 1.0, 12.0, 19.0);
    CHECK(x.pre_twpa >= 0.0);
    CHECK(x.twpa_excess >= 0.0);
    CHECK(x.post_twpa >= 0.0);
    CHECK(x.total > prev);
    prev = x.total;
  }
}

TEST_CASE("insertion loss") {
  const double g2[] = {40.0, 30.0};
  const double rt[] = {-26.0, 30.0};
  const auto il = insertion_loss_calibration(g2, rt);
  CHECK(il[0] == 66.0);
  CHECK(il[1] == 0.0);
  const double short_rt[] = {1.0};
  CHECK_THROWS_AS(insertion_loss_calibration(g2, short_rt), std::invalid_argument);
}

TEST_CASE("insertion loss is consistent across perturbed cooldowns") {
  // Each cooldown re-measures G2 and the round trip with +-0.5 dB level errors.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> e(-0.5, 0.5);
  double lo = INFINITY, hi = -INFINITY;
  for (int k = 0; k < 50; ++k) {
    const double g2[] = {40.0 + e(rng)};
    const double rt[] = {-26.0 + e(rng)};
    const double il = insertion_loss_calibration(g2, rt)[0];
    lo = std::min(lo, il);
    hi = std::max(hi, il);
  }
  CHECK(hi - lo < 2.0);
}

TEST_CASE("SNR improvement") {
  for (double n2 : {0.0, 3.0, 50.0}) {
    // unity gain still adds the idler vacuum
    CHECK(delta_snr(0.5, 1.0, n2, 0.5, 0.0) == doctest::Approx((0.5 + n2) / (1.0 + n2)));
  }
  CHECK(ratio_to_db(delta_snr(0.5, 1.0, 10.0, 0.5, 300.0)) == doctest::Approx(10.21).epsilon(1e-3));
  CHECK_THROWS_AS(delta_snr(0.5, 0.0, 1.0, 0.5, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(delta_snr(0.5, 1.0, 1.0, 0.4, 10.0), std::invalid_argument);
}

TEST_CASE("best SNR improvement coincides with the lowest system noise") {
  // TWPA noise grows with gain through pump-induced excess; the optimum is interior.
  const double eta = 0.85, n2 = 15.0;
  std::size_t best_snr = 0, best_noise = 0;
  double max_snr = -INFINITY, min_noise = INFINITY;
  for (std::size_t i = 0; i <= 300; ++i) {
    const double gdb = 5.0 + 0.1 * i;
    const double nt_exc = 0.3 + 0.02 * std::pow(gdb / 5.0, 2.0);
    const double nt = 0.5 + nt_exc;
    const double s = delta_snr(0.5, eta, n2, nt, gdb);
    const double tot = system_noise_breakdown(eta, nt_exc, n2, gdb).total;
    if (s > max_snr) { max_snr = s; best_snr = i; }
    if (tot < min_noise) { min_noise = tot; best_noise = i; }
  }
  CHECK(best_snr > 0);
  CHECK(best_snr < 300);
  CHECK(best_snr == best_noise);
}
