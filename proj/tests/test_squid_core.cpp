#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "twpa/constants.hpp"
#include "twpa/error.hpp"
#include "twpa/squid_core.hpp"

using namespace twpa;

namespace {
SquidParams design() {
  SquidParams p;
  p.ic = 0.9e-6;
  p.lm = 60e-12;
  return p;
}
SquidParams fitted() {
  SquidParams p;
  p.ic = 0.93e-6;
  p.lm = 58.6e-12;
  p.lw = 37.0e-12;
  p.lp = 8.9e-12;
  return p;
}
}  // namespace

TEST_CASE("screening parameter of the design values") {
  CHECK(screening_parameter(design()) == doctest::Approx(0.164).epsilon(0.01));
  CHECK(screening_parameter(design()) == doctest::Approx(0.16).epsilon(0.03));
}

TEST_CASE("solve_phi_dc fixed points and bisection oracle") {
  CHECK(solve_phi_dc(0.0, 0.16) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(solve_phi_dc(kPi, 0.16) == doctest::Approx(kPi).epsilon(1e-14));
  const double x = solve_phi_dc(kPi / 2, 0.16);
  CHECK(std::abs(x - oracle::phi_dc_bisect(kPi / 2, 0.16)) < 1e-12);
  CHECK(x == doctest::Approx(1.4128).epsilon(1e-4));
}

TEST_CASE("solve_phi_dc residual over random samples") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ext(-4 * kPi, 4 * kPi), bl(0.0, 0.99);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double pe = ext(rng), b = bl(rng);
    const double p = solve_phi_dc(pe, b);
    worst = std::max(worst, std::abs(p + b * std::sin(p) - pe));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("solve_phi_dc rejects the hysteretic regime") {
  CHECK_THROWS_AS(solve_phi_dc(1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(solve_phi_dc(1.0, 1.5), std::domain_error);
}

TEST_CASE("nonlinear coefficients") {
  const auto a = nonlinear_coeffs_from_beta_l(0.16, kPi / 2);
  CHECK(a.beta == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(std::abs(a.gamma) < 1e-15);
  const auto b = nonlinear_coeffs_from_beta_l(0.16, 0.0);
  CHECK(std::abs(b.beta) < 1e-15);
  CHECK(b.gamma == doctest::Approx(0.02299).epsilon(2e-4));
}

TEST_CASE("gamma changes sign at cos(phi_dc) = 0 and beta is odd in sin(phi_dc)") {
  for (double x : {0.1, 0.4, 0.9, 1.3}) {
    CHECK(nonlinear_coeffs_from_beta_l(0.16, kPi / 2 - x).gamma > 0.0);
    CHECK(nonlinear_coeffs_from_beta_l(0.16, kPi / 2 + x).gamma < 0.0);
    const double bm = nonlinear_coeffs_from_beta_l(0.16, kPi - x).beta;
    const double bp = nonlinear_coeffs_from_beta_l(0.16, kPi + x).beta;
    CHECK(bm == doctest::Approx(-bp).epsilon(1e-12));
  }
}

TEST_CASE("squid inductance limits") {
  SquidParams p = fitted();
  for (auto m : {InductanceModel::ideal, InductanceModel::non_ideal}) {
    CHECK(squid_inductance(p, kPi / 2, m) == doctest::Approx(p.lm).epsilon(1e-12));
  }
  CHECK(squid_inductance(design(), 0.0, InductanceModel::ideal) ==
        doctest::Approx(51.72e-12).epsilon(2e-4));
  CHECK(cell_inductance(p, kPi / 2) == doctest::Approx(95.6e-12).epsilon(1e-3));
}

TEST_CASE("non-ideal inductance tends to the ideal one as the parasitic vanishes") {
  SquidParams p = design();
  const double ideal = squid_inductance(p, 0.3, InductanceModel::ideal);
  double prev = INFINITY;
  for (double lp : {20e-12, 10e-12, 5e-12, 1e-12, 1e-15}) {
    // Keep beta_L fixed so only alpha_p changes.
    SquidParams q = p;
    q.lp = lp;
    q.lm = p.lm - lp;
    const double d = std::abs(squid_inductance(q, 0.3) - ideal * q.lm / p.lm);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-15);
}

TEST_CASE("line parameters") {
  const auto lp = line_parameters(95.6e-12, 36e-15, 5.5e9);
  CHECK(lp.z == doctest::Approx(51.5).epsilon(2e-3));
  CHECK(lp.z * lp.z * 36e-15 == doctest::Approx(95.6e-12).epsilon(1e-14));
  CHECK(lp.k_lin_per_cell == doctest::Approx(0.0641).epsilon(2e-3));
  CHECK(line_parameters(95.6e-12, 36e-15, 0.0).k_lin_per_cell == 0.0);
}

TEST_CASE("parameter validation") {
  SquidParams p = design();
  p.ic = -1.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p = design();
  p.lm = 0.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
}
