#include "twpa/gain_analytics.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "twpa/constants.hpp"

namespace twpa {

std::string_view mode_name(MixingMode m) {
  return m == MixingMode::three_wave ? "3wm" : "4wm";
}

double pump_phase_amplitude(double p_p, double z, double l_sq) {
  if (!(p_p >= 0.0) || !(z > 0.0) || !(l_sq > 0.0)) {
    throw std::invalid_argument("pump_phase_amplitude: inputs must be positive");
  }
  const double i_p = std::sqrt(2.0 * p_p / z);
  return l_sq * i_p / kReducedFluxQuantum;
}

double gain_coefficient(double beta, double k_p_per_cell, double phi_p, double f_s, double f_p) {
  if (!(f_p > 0.0)) throw std::invalid_argument("gain_coefficient: f_p must be positive");
  const double delta = std::abs(f_s - 0.5 * f_p) / (0.5 * f_p);
  if (delta >= 1.0) return 0.0;
  return 0.25 * std::abs(beta) * k_p_per_cell * phi_p * std::sqrt(1.0 - delta * delta);
}

double gain_from_coefficient(double g, double n, std::optional<double> delta_k) {
  if (!delta_k || *delta_k == 0.0) {
    const double c = std::cosh(g * n);
    return c * c;
  }
  using C = std::complex<double>;
  const double dk = *delta_k;
  const C gp = std::sqrt(C(g * g - 0.25 * dk * dk, 0.0));
  // sinh(g' n) / g' tends to n as g' -> 0
  const C sinh_over = std::abs(gp) * n < 1e-8 ? C(n, 0.0) : std::sinh(gp * n) / gp;
  const C amp = std::cosh(gp * n) + C(0.0, 0.5 * dk) * sinh_over;
  return std::norm(amp);
}

double small_signal_gain(double beta, double k_p_per_cell, double phi_p, double n,
                         double f_s, double f_p, std::optional<double> delta_k) {
  if (!(f_s < f_p)) throw std::invalid_argument("small_signal_gain: requires f_s < f_p");
  const double delta = std::abs(f_s - 0.5 * f_p) / (0.5 * f_p);
  if (delta >= 1.0) return 1.0;
  return gain_from_coefficient(gain_coefficient(beta, k_p_per_cell, phi_p, f_s, f_p), n, delta_k);
}

double jacobi_dn_m1(double u, double m1) {
  if (!(m1 >= 0.0 && m1 <= 1.0)) throw std::domain_error("jacobi_dn: parameter outside [0, 1]");
  if (m1 == 1.0) return 1.0;
  if (m1 == 0.0) return 1.0 / std::cosh(u);

  // Descending Landen: a0 = 1, b0 = k', c0 = k.
  constexpr int kMax = 40;
  std::array<double, kMax + 1> a{}, c{};
  a[0] = 1.0;
  double b = std::sqrt(m1);
  c[0] = std::sqrt(1.0 - m1);
  int n = 0;
  while (n < kMax && std::abs(c[n]) > 1e-17 * a[n]) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  double phi_prev = phi;
  for (int j = n; j > 0; --j) {
    phi_prev = phi;
    phi = 0.5 * (phi + std::asin(c[j] / a[j] * std::sin(phi)));
  }
  if (n == 0) return 1.0;
  return std::cos(phi) / std::cos(phi_prev - phi);
}

double jacobi_dn(double u, double k) {
  if (!(k >= 0.0 && k <= 1.0)) throw std::domain_error("jacobi_dn: modulus outside [0, 1]");
  if (k > 1.0 - 1e-12) return 1.0 / std::cosh(u);
  return jacobi_dn_m1(u, (1.0 - k) * (1.0 + k));
}

double depleted_gain(double p_s, double p_p, double f_s, double f_p, double gn,
                     DepletionMethod method) {
  if (!(p_s >= 0.0)) throw std::invalid_argument("depleted_gain: p_s must be >= 0");
  if (!(p_p > 0.0)) throw std::invalid_argument("depleted_gain: p_p must be positive");
  if (!(gn > 0.0)) throw std::invalid_argument("depleted_gain: gN must be positive");
  if (!(f_s > 0.0 && f_p > 0.0)) throw std::invalid_argument("depleted_gain: frequencies must be positive");
  const double x = f_p * p_s / (f_s * p_p);
  if (method == DepletionMethod::exact) {
    // k^2 = 1 / (1 + x), so 1 - k^2 = x / (1 + x)
    const double dn = jacobi_dn_m1(gn, x / (1.0 + x));
    return 1.0 / (dn * dn);
  }
  const double c = std::cosh(gn);
  const double g0 = c * c;
  const double q = g0 * x;
  return g0 / (1.0 + 0.5 * q + 0.0625 * q * q);
}

SaturationResult compression_point(double p_p_dbm, double g0_db, MixingMode mode) {
  if (!(g0_db > 0.0)) throw std::invalid_argument("compression_point: G0 must be positive");
  SaturationResult r;
  r.g0_db = g0_db;
  r.mode = mode;
  r.p1db_dbm = p_p_dbm - g0_db - (mode == MixingMode::three_wave ? 6.0 : 9.0);
  return r;
}

}  // namespace twpa
