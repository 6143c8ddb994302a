#pragma once

// Closed-form three-wave-mixing gain: small-signal gain with optional phase
// mismatch, pump-depletion saturation through dn(u, k), and 1-dB
// compression points.

#include <optional>
#include <string_view>

namespace twpa {

struct PumpConfig {
  double f_p = 0.0;    ///< [Hz]
  double p_p = 0.0;    ///< incident power [W]
  double phi_p = 0.0;  ///< pump phase-oscillation amplitude [rad]
};

enum class MixingMode { three_wave, four_wave };
std::string_view mode_name(MixingMode m);

struct SaturationResult {
  double g0_db = 0.0;
  double p1db_dbm = 0.0;
  MixingMode mode = MixingMode::three_wave;
};

/// I_p = sqrt(2 P_p / Z), phi_p = L_SQ I_p / phi0.
double pump_phase_amplitude(double p_p, double z, double l_sq);

/// Per-cell exponential gain coefficient (1/4)|beta| k_p phi_p sqrt(1 - delta^2),
/// delta = |f_s - f_p/2| / (f_p/2). Zero for delta >= 1.
double gain_coefficient(double beta, double k_p_per_cell, double phi_p, double f_s, double f_p);

/// Signal power gain after n cells. Without a mismatch this is cosh^2(g n);
/// with delta_k [rad/cell] the coupled-mode form
///   |cosh(g' n) + i dk / (2 g') sinh(g' n)|^2,  g' = sqrt(g^2 - dk^2 / 4).
double small_signal_gain(double beta, double k_p_per_cell, double phi_p, double n,
                         double f_s, double f_p, std::optional<double> delta_k = {});

/// Same, from an already known coefficient g [1/cell].
double gain_from_coefficient(double g, double n, std::optional<double> delta_k = {});

/// Jacobi elliptic dn(u, k) for 0 <= k <= 1 by the descending Landen/AGM
/// scale. Throws std::domain_error for k outside [0, 1].
double jacobi_dn(double u, double k);

/// dn(u, k) given the complementary parameter m1 = 1 - k^2, which keeps full
/// precision when k is within rounding of 1.
double jacobi_dn_m1(double u, double m1);

enum class DepletionMethod { exact, approx };

/// Signal gain with pump depletion for input powers p_s, p_p [W] and the
/// small-signal exponent gN. exact: 1/dn^2(gN, k), k = 1/sqrt(1 + f_p P_s / (f_s P_p)).
double depleted_gain(double p_s, double p_p, double f_s, double f_p, double gn,
                     DepletionMethod method = DepletionMethod::exact);

/// Input 1-dB compression point: P_p - G0 - 6 dB (3WM) or - 9 dB (4WM).
SaturationResult compression_point(double p_p_dbm, double g0_db,
                                   MixingMode mode = MixingMode::three_wave);

}  // namespace twpa
