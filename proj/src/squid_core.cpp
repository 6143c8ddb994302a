#include "twpa/squid_core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "twpa/constants.hpp"
#include "twpa/error.hpp"

namespace twpa {

namespace {

constexpr double kMaxBetaL = 1.0 - 1e-9;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void validate(const SquidParams& p) {
  require(std::isfinite(p.ic) && p.ic > 0.0, "squid: ic must be positive");
  require(std::isfinite(p.cj) && p.cj >= 0.0, "squid: cj must be non-negative");
  require(std::isfinite(p.lm) && p.lm > 0.0, "squid: lm must be positive");
  require(std::isfinite(p.lp) && p.lp >= 0.0, "squid: lp must be non-negative");
  require(std::isfinite(p.lj0l) && p.lj0l >= 0.0, "squid: lj0l must be non-negative");
  require(std::isfinite(p.lw) && p.lw >= 0.0, "squid: lw must be non-negative");
  require(p.rshunt > 0.0, "squid: rshunt must be positive");
  require(std::isfinite(screening_parameter(p)), "squid: screening parameter not finite");
}

double screening_parameter(const SquidParams& p) {
  return p.ic * p.loop_inductance() / kReducedFluxQuantum;
}

double parasitic_ratio(const SquidParams& p) {
  const double loop = p.loop_inductance();
  return loop > 0.0 ? p.parasitic() / loop : 0.0;
}

double solve_phi_dc(double phi_ext, double beta_l) {
  if (!(beta_l >= 0.0)) throw std::domain_error("solve_phi_dc: beta_L must be >= 0");
  if (beta_l >= kMaxBetaL) {
    throw std::domain_error("solve_phi_dc: beta_L = " + std::to_string(beta_l) +
                            " is in the hysteretic regime (>= 1)");
  }
  if (beta_l == 0.0) return phi_ext;

  // residual is strictly increasing, and has a sign change on [x - bL, x + bL].
  auto residual = [&](double x) { return x + beta_l * std::sin(x) - phi_ext; };
  double lo = phi_ext - beta_l;
  double hi = phi_ext + beta_l;
  double x = phi_ext - beta_l * std::sin(phi_ext);
  if (x <= lo || x >= hi) x = 0.5 * (lo + hi);

  for (int it = 0; it < 200; ++it) {
    const double r = residual(x);
    if (r == 0.0) return x;
    if (r > 0.0) hi = x; else lo = x;
    const double dr = 1.0 + beta_l * std::cos(x);
    double next = x - r / dr;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-16 * (1.0 + std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

FluxPoint flux_point_from_phi0(const SquidParams& p, double flux_phi0) {
  FluxPoint fp;
  fp.phi_ext = kTwoPi * flux_phi0;
  fp.phi_dc = solve_phi_dc(fp.phi_ext, screening_parameter(p));
  return fp;
}

NonlinearCoeffs nonlinear_coeffs_from_beta_l(double beta_l, double phi_dc) {
  const double c = std::cos(phi_dc);
  const double denom = 1.0 + beta_l * c;
  if (!(denom > 0.0)) {
    throw NumericalError("singular operating point: 1 + beta_L cos(phi_dc) = " +
                         std::to_string(denom));
  }
  NonlinearCoeffs nc;
  nc.beta_l = beta_l;
  nc.beta = 0.5 * beta_l * std::sin(phi_dc) / denom;
  nc.gamma = beta_l / 6.0 * c / denom;
  return nc;
}

NonlinearCoeffs nonlinear_coeffs(const SquidParams& p, double phi_dc) {
  NonlinearCoeffs nc = nonlinear_coeffs_from_beta_l(screening_parameter(p), phi_dc);
  nc.alpha_p = parasitic_ratio(p);
  return nc;
}

double squid_inductance(const SquidParams& p, double phi_dc, InductanceModel model) {
  const double bl = screening_parameter(p);
  const double bc = bl * std::cos(phi_dc);
  if (!(1.0 + bc > 0.0)) {
    throw NumericalError("singular operating point: 1 + beta_L cos(phi_dc) <= 0");
  }
  if (model == InductanceModel::ideal) return p.lm / (1.0 + bc);
  return p.lm * (1.0 + parasitic_ratio(p) * bc) / (1.0 + bc);
}

double cell_inductance(const SquidParams& p, double phi_dc) {
  return p.lw + squid_inductance(p, phi_dc, InductanceModel::non_ideal);
}

LineParams line_parameters(double l_cell, double cg, double freq_hz, double l_sq) {
  if (!(l_cell > 0.0) || !(cg > 0.0)) {
    throw std::invalid_argument("line_parameters: L_cell and Cg must be positive");
  }
  if (!(freq_hz >= 0.0)) throw std::invalid_argument("line_parameters: negative frequency");
  LineParams lp;
  lp.l_sq = l_sq;
  lp.l_cell = l_cell;
  lp.z = std::sqrt(l_cell / cg);
  lp.k_lin_per_cell = kTwoPi * freq_hz * std::sqrt(l_cell * cg);
  return lp;
}

}  // namespace twpa
