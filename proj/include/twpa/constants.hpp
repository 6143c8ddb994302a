#pragma once

#include <cmath>
#include <numbers>

namespace twpa {

// Exact SI values.
inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kBoltzmann = 1.380649e-23;      // J/K
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Magnetic flux quantum h/2e [Wb].
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElementaryCharge);
/// Reduced flux quantum hbar/2e [Wb].
inline constexpr double kReducedFluxQuantum = kFluxQuantum / kTwoPi;

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }
inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double ratio_to_db(double r) { return 10.0 * std::log10(r); }

}  // namespace twpa
