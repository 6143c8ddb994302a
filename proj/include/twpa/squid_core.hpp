#pragma once

// Single rf-SQUID unit cell: dc operating point, nonlinearity coefficients,
// flux-dependent inductance and the low-frequency line parameters.
//
// Cell topology (series branch between two ground-capacitor nodes):
//
//   o--[Lw]--+--------[Lm]--------+--o
//            |                    |
//            +--[Lp + Lj0L]--[X]--+        X: junction (Ic, Cj, Rshunt)
//
// The large via junction is carried as the linear inductance Lj0L.

#include <limits>

namespace twpa {

struct SquidParams {
  double ic = 0.9e-6;       ///< critical current of the small junction [A]
  double cj = 50e-15;       ///< junction capacitance [F]
  double lm = 60e-12;       ///< meander shunt inductance [H]
  double lp = 0.0;          ///< parasitic series inductance [H]
  double lj0l = 0.0;        ///< quasi-linear inductance of the via junction [H]
  double lw = 37e-12;       ///< inter-cell wire inductance [H]
  /// Junction shunt resistance [Ohm]; infinity means undamped.
  double rshunt = std::numeric_limits<double>::infinity();

  /// Linear inductance in series with the small junction.
  double parasitic() const { return lp + lj0l; }
  double loop_inductance() const { return lm + lp + lj0l; }
};

/// Throws std::invalid_argument if the parameters violate their invariants.
void validate(const SquidParams& p);

struct FluxPoint {
  double phi_ext = 0.0;  ///< external flux / reduced flux quantum [rad]
  double phi_dc = 0.0;   ///< dc junction phase [rad]
};

struct NonlinearCoeffs {
  double beta_l = 0.0;
  double alpha_p = 0.0;
  double beta = 0.0;   ///< second-order coefficient
  double gamma = 0.0;  ///< Kerr coefficient
};

struct LineParams {
  double l_sq = 0.0;            ///< [H]
  double l_cell = 0.0;          ///< [H]
  double z = 0.0;               ///< [Ohm]
  double k_lin_per_cell = 0.0;  ///< [rad/cell]
};

enum class InductanceModel { ideal, non_ideal };

/// Screening parameter Ic (Lm + Lp + Lj0L) / phi0.
double screening_parameter(const SquidParams& p);

/// Parasitic ratio (Lp + Lj0L) / (Lm + Lp + Lj0L).
double parasitic_ratio(const SquidParams& p);

/// Solves phi_dc + beta_l sin(phi_dc) = phi_ext. Requires 0 <= beta_l < 1 - 1e-9;
/// throws std::domain_error in the hysteretic regime.
double solve_phi_dc(double phi_ext, double beta_l);

/// Flux point for an external flux given in units of the flux quantum.
FluxPoint flux_point_from_phi0(const SquidParams& p, double flux_phi0);

/// Second- and third-order coefficients at the given dc phase. Throws
/// NumericalError when 1 + beta_l cos(phi_dc) <= 0.
NonlinearCoeffs nonlinear_coeffs(const SquidParams& p, double phi_dc);
NonlinearCoeffs nonlinear_coeffs_from_beta_l(double beta_l, double phi_dc);

/// rf-SQUID inductance at the dc phase (excludes Lw).
double squid_inductance(const SquidParams& p, double phi_dc,
                        InductanceModel model = InductanceModel::non_ideal);

/// Lw + L_SQ using the non-ideal model.
double cell_inductance(const SquidParams& p, double phi_dc);

/// Low-frequency impedance and per-cell wavenumber of an L-C ladder.
/// l_sq is carried through unchanged for reporting.
LineParams line_parameters(double l_cell, double cg, double freq_hz, double l_sq = 0.0);

}  // namespace twpa
