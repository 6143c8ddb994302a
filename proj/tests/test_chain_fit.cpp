#include <doctest.h>

#include <cmath>
#include <random>

#include "twpa/chain_fit.hpp"
#include "twpa/constants.hpp"
#include "twpa/error.hpp"

using namespace twpa;

namespace {

ChainSpec template_chain() {
  ChainSpec c;
  c.n_cells = 2393;
  c.squid.ic = 0.93e-6;
  c.squid.lm = 58.6e-12;
  c.squid.lp = 8.9e-12;
  c.flux = flux_point_from_phi0(c.squid, 0.0);
  c.pattern = build_pattern(10.5e-15, 68.2e-15, 50.4e-15, 6);
  return c;
}

S21Spectrum synthetic(double l_cell, double f0, double f1, std::size_t n) {
  const auto c = template_chain();
  LadderLine line = ladder_from_chain(c);
  line.l_cell = l_cell;
  return s21_spectrum(line, linspace(f0, f1, n));
}

// Cell inductance over one flux period, evaluated from the circuit directly.
FluxModelData flux_sweep(const SquidParams& p) {
  FluxModelData d;
  d.abscissa = FluxAbscissa::bias_current;
  const double period = kFluxQuantum / p.lm;  // bias current for one flux quantum
  for (int i = 0; i <= 40; ++i) {
    const double i_dc = period * (-0.1 + 1.2 * i / 40.0);
    const double phi_ext = p.lm * i_dc / kReducedFluxQuantum;
    const double phi_dc = solve_phi_dc(phi_ext, screening_parameter(p));
    d.x.push_back(i_dc);
    d.l_cell.push_back(cell_inductance(p, phi_dc));
  }
  return d;
}

SquidParams fitted_squid() {
  SquidParams p;
  p.ic = 0.93e-6;
  p.lm = 58.6e-12;
  p.lw = 37.0e-12;
  p.lp = 8.9e-12;
  return p;
}

}  // namespace

TEST_CASE("cell inductance round trip through the transfer-matrix model") {
  std::vector<S21Spectrum> s{synthetic(95.6e-12, 8e9, 14e9, 601)};
  s[0].flux_phi0 = 0.5;
  const auto fits = fit_cell_inductance(s, template_chain());
  REQUIRE(fits.size() == 1);
  CHECK(fits[0].converged);
  CHECK(fits[0].l_cell == doctest::Approx(95.6e-12).epsilon(1e-3));
  CHECK(fits[0].flux_phi0 == 0.5);
}

TEST_CASE("spectrum without a stopband cannot be fitted") {
  std::vector<S21Spectrum> s{synthetic(95.6e-12, 2e9, 6e9, 301)};
  const auto fits = fit_cell_inductance(s, template_chain());
  REQUIRE(fits.size() == 1);
  CHECK_FALSE(fits[0].converged);
  CHECK_FALSE(fits[0].error.empty());
}

TEST_CASE("flux sweep of fitted spectra follows the expected shape") {
  const auto c = template_chain();
  std::vector<S21Spectrum> s;
  std::vector<double> truth;
  for (double flux : {0.0, 0.25, 0.5}) {
    const double l = cell_inductance(c.squid, flux_point_from_phi0(c.squid, flux).phi_dc);
    truth.push_back(l);
    s.push_back(synthetic(l, 7e9, 15e9, 801));
    s.back().flux_phi0 = flux;
  }
  const auto fits = fit_cell_inductance(s, c);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    CHECK(fits[i].converged);
    CHECK(fits[i].l_cell == doctest::Approx(truth[i]).epsilon(1e-3));
  }
  // Minimum near zero flux, maximum near half a flux quantum.
  CHECK(fits[0].l_cell < fits[1].l_cell);
  CHECK(fits[1].l_cell < fits[2].l_cell);
}

TEST_CASE("flux model round trip") {
  const auto p = fitted_squid();
  const auto fit = fit_flux_model(flux_sweep(p));
  CHECK(fit.ic == doctest::Approx(p.ic).epsilon(0.01));
  CHECK(fit.lm == doctest::Approx(p.lm).epsilon(0.01));
  CHECK(fit.lw == doctest::Approx(p.lw).epsilon(0.01));
  CHECK(fit.lpar == doctest::Approx(p.lp).epsilon(0.01));
  CHECK(fit.covariance.size() == 16);
}

TEST_CASE("flux model needs modulation") {
  FluxModelData d;
  d.x = linspace(0, 30e-6, 20);
  d.l_cell.assign(20, 95e-12);
  CHECK_THROWS_AS(fit_flux_model(d), FitError);
}

TEST_CASE("flux model under 1% multiplicative noise") {
  const auto p = fitted_squid();
  const auto clean = flux_sweep(p);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.01);
  // Per-draw spread of Ic is ~2.5% (Ic and Lpar trade off), so 5% is a
  // Monte-Carlo statement: the mean, plus 95% coverage.
  int within = 0;
  double sum = 0.0;
  const int draws = 100;
  for (int k = 0; k < draws; ++k) {
    auto d = clean;
    for (auto& l : d.l_cell) l *= 1.0 + noise(rng);
    const auto fit = fit_flux_model(d);
    sum += fit.ic;
    if (std::abs(fit.ic / p.ic - 1.0) < 0.05) ++within;
  }
  CHECK(std::abs(sum / draws / p.ic - 1.0) < 0.05);
  CHECK(within >= 95);
}

TEST_CASE("flux abscissa needs the nominal Lm") {
  const auto p = fitted_squid();
  auto d = flux_sweep(p);
  d.abscissa = FluxAbscissa::flux_phi0;
  for (auto& x : d.x) x = p.lm * x / kFluxQuantum;
  CHECK_THROWS(fit_flux_model(d));
  d.lm_nominal = p.lm;
  const auto fit = fit_flux_model(d);
  CHECK(fit.ic == doctest::Approx(p.ic).epsilon(0.01));
  CHECK(fit.lw == doctest::Approx(p.lw).epsilon(0.01));
}
