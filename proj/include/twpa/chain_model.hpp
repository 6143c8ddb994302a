#pragma once

// Linear wave propagation through the full amplifier chain: capacitance
// patterns, cascaded ABCD transmission, Bloch dispersion and stopbands.

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "twpa/squid_core.hpp"

namespace twpa {

using cplx = std::complex<double>;

/// Piecewise-constant ground capacitance repeated every `period` cells.
struct CapacitancePattern {
  std::vector<double> values;  ///< one capacitance per group [F]
  int group_len = 1;
  int period = 1;

  /// Capacitance of cell index n (0-based).
  double at(long n) const {
    return values[static_cast<std::size_t>((n % period) / group_len)];
  }
  double mean() const;
  bool is_uniform() const;
};

/// Default group sequence C1, C2, C1, C3 as indices into {c1, c2, c3}.
inline const std::vector<int> kDefaultOrdering = {0, 1, 0, 2};

CapacitancePattern build_pattern(double c1, double c2, double c3, int group_len,
                                 std::span<const int> ordering = kDefaultOrdering);

/// Pattern of a single repeated value.
CapacitancePattern uniform_pattern(double c, int group_len = 1);

struct ChainSpec {
  long n_cells = 2393;
  double pitch = 0.0;  ///< cell length [m], only used for reporting per-metre values
  SquidParams squid;
  FluxPoint flux;
  CapacitancePattern pattern;
  double z_term = 50.0;
  double loss_tangent = 0.0;
};

void validate(const ChainSpec& c);

/// Cell inductance at the chain's flux point (non-ideal rf-SQUID model).
double chain_cell_inductance(const ChainSpec& c);

/// Upper frequency of the transfer-matrix model: 0.9 / (pi sqrt(L_cell Cmean)).
double validity_cap_hz(double l_cell, double c_mean);

/// Linear ladder description with an explicit cell inductance.
struct LadderLine {
  long n_cells = 0;
  double l_cell = 0.0;
  CapacitancePattern pattern;
  double z_term = 50.0;
  double loss_tangent = 0.0;
};

LadderLine ladder_from_chain(const ChainSpec& c);

struct S21Spectrum {
  std::vector<double> freq;
  std::vector<cplx> s21;
  std::vector<cplx> s11;
  std::vector<bool> above_cap;  ///< true where freq exceeds the validity cap
  std::optional<double> flux_phi0;
  std::optional<double> power_dbm;

  std::vector<double> s21_db() const;
};

S21Spectrum s21_spectrum(const ChainSpec& chain, std::span<const double> freq);
S21Spectrum s21_spectrum(const LadderLine& line, std::span<const double> freq);

struct Stopband {
  double f_lo = 0.0;
  double f_hi = 0.0;
  double center() const { return 0.5 * (f_lo + f_hi); }
  double width() const { return f_hi - f_lo; }
};

struct DispersionResult {
  std::vector<double> freq;
  std::vector<cplx> k_bloch;     ///< per cell [rad/cell]; Im > 0 is attenuation
  std::vector<double> half_trace;  ///< Re (A + D) / 2 of the super-cell
  std::vector<Stopband> stopbands;
  int period = 1;

  /// Linear interpolation of k on the grid; throws std::out_of_range outside it.
  cplx k_at(double f) const;
  /// True when f lies inside one of the reported stopbands.
  bool in_stopband(double f) const;
};

DispersionResult bloch_dispersion(const ChainSpec& chain, std::span<const double> freq);
DispersionResult bloch_dispersion(const LadderLine& line, std::span<const double> freq);

enum class MixingProcess { three_wave, up_conversion, second_harmonic };

struct PhaseMismatch {
  double delta_k = 0.0;        ///< real part of the mismatch [rad/cell]
  bool evanescent = false;     ///< a participating tone lies in a stopband
  double attenuation = 0.0;    ///< summed Im k of the participating tones [1/cell]
};

PhaseMismatch phase_mismatch(const DispersionResult& d, double f_p, double f_s,
                             MixingProcess process);

/// Pump frequency in (f_lo, f_hi] minimising |k_p - k_s - k_i| for f_s = f_p/2.
double phase_matched_pump(const DispersionResult& d, double f_lo, double f_hi);

std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace twpa
