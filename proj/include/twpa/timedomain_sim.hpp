#pragma once

// Nonlinear time-domain engine: fixed-step RK4 integration of a single
// current-driven unit cell or the full ladder between resistive ports,
// followed by coherent single-bin Fourier extraction.
//
// All tones are snapped to integer multiples of f_base = 1 / record_time so
// every mixing product lands exactly on a bin of the extraction window.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twpa/chain_model.hpp"
#include "twpa/gain_analytics.hpp"
#include "twpa/squid_core.hpp"

namespace twpa {

enum class Port { input, output };

struct Tone {
  double freq = 0.0;       ///< [Hz], snapped to the base grid
  double amplitude = 0.0;  ///< unit cell: current amplitude [A]; chain: available power [W]
  double phase = 0.0;      ///< [rad], cosine reference
  Port port = Port::input;
};

struct DriveSpec {
  /// Bias current [A]. Unit cell: sets the flux as Lm * I_dc. Chain: when
  /// absent it is derived from the chain's flux point.
  std::optional<double> i_dc;
  std::vector<Tone> tones;
};

struct SimConfig {
  double dt = 0.0;             ///< 0: min(1/(200 f_max), plasma period / 50)
  double tol = 1e-6;           ///< steady state: relative change between windows
  double settle_time = 400e-9; ///< budget to reach steady state [s]
  double record_time = 10e-9;  ///< extraction window; f_base = 1/record_time [s]
  double ramp_time = 0.0;      ///< raised-cosine drive ramp; 0 means one window
  std::uint64_t seed = 0;      ///< reserved for stochastic options; the engine is deterministic
  bool keep_waveforms = false; ///< keep the last window of node voltages (chain)
  int fixed_windows = 0;       ///< chain: run exactly this many windows, no steady-state test
};

/// Uniformly sampled waveforms over one coherent window; t_k = t0 + k dt.
struct TimeSeries {
  double t0 = 0.0;
  double dt = 0.0;
  double f_base = 0.0;
  std::vector<double> v;  ///< voltage across the cell (Lw + SQUID) [V]
  std::vector<double> i;  ///< current through the cell [A]
};

struct UnitCellRecord {
  TimeSeries series;
  std::vector<double> v_sq;  ///< voltage across the SQUID alone [V]
  std::vector<double> phi;   ///< junction phase [rad]
  double phi_dc = 0.0;       ///< dc junction phase of the initial state
  double mean_phi = 0.0;     ///< window average of the junction phase
  int windows = 0;
  double last_change = 0.0;
};

/// Integrates one current-driven unit cell (Lw in series with the rf-SQUID)
/// to periodic steady state. Throws NumericalError when the window-to-window
/// change does not drop below cfg.tol within cfg.settle_time.
UnitCellRecord simulate_unit_cell(const SquidParams& squid, const DriveSpec& drive,
                                  const SimConfig& cfg);

/// Bias current that places the unit cell at the given external flux [Phi0].
double bias_current_for_flux(const SquidParams& squid, double flux_phi0);

struct ImpedanceResult {
  std::complex<double> z_cell;
  double l_cell = 0.0;  ///< Im Z / omega [H]
  double r_cell = 0.0;  ///< Re Z [Ohm]
  double power_dbm = 0.0;  ///< 0.5 |I|^2 Z0
};

/// Fundamental-bin impedance V/I at f. Throws std::invalid_argument when f is
/// not an integer multiple of the window's base frequency.
ImpedanceResult extract_impedance(const TimeSeries& s, double f, double z0 = 50.0);

/// Complex amplitude X of x(t) = Re(X exp(i 2 pi f t)) over the window.
std::complex<double> harmonic_amplitude(std::span<const double> x, double t0, double dt,
                                        double f, double f_base);

/// RMS power waves at both ports, one entry per extracted frequency.
struct PortWaves {
  double z0 = 50.0;
  std::vector<double> freq;
  std::vector<std::complex<double>> a1, b1, a2, b2;  ///< [sqrt(W)]

  std::size_t index_of(double f) const;  ///< throws std::out_of_range
};

struct ChainRecord {
  PortWaves waves;
  double f_base = 0.0;
  double dt = 0.0;
  int windows = 0;
  double last_change = 0.0;
  std::vector<Tone> tones;  ///< snapped drive
  /// Last window of node voltages, row-major [step][node], if requested.
  std::vector<double> node_v;
  std::size_t n_nodes = 0;
};

/// Integrates the N-cell ladder between two resistive ports (source
/// impedance = chain.z_term), biased through ideal bias tees. `extract` lists
/// the frequencies at which port waves are reported (snapped to the grid).
/// Throws NumericalError naming the first divergent cell on instability.
ChainRecord simulate_chain(const ChainSpec& chain, const DriveSpec& drive, const SimConfig& cfg,
                           std::span<const double> extract);

/// Nearest positive multiple of f_base.
double snap_frequency(double f, double f_base);

// ---- derived experiments ---------------------------------------------------

struct ProbeSettings {
  double probe_power = 1e-16;  ///< available probe power [W]
  double gate_db = 0.1;        ///< linearity gate under probe-amplitude halving
  /// Gains below this fraction of G_ss are not subject to the linearity gate.
  double gate_floor = 1e-4;
  int threads = 1;
};

struct ConversionGains {
  double f_s = 0.0;
  double f_p = 0.0;
  /// Keyed by mixing-product label (s, i, p+s, p+i, 2p+s, ...).
  std::map<std::string, double> forward;
  std::map<std::string, double> backward;
  std::map<std::string, double> freq;

  double g_ss() const { return forward.at("s"); }
};

/// Conversion-gain labels and frequencies n f_p + f_s and n f_p + f_i for
/// n = 0 .. orders.
std::vector<std::pair<std::string, double>> mixing_products(double f_p, double f_s, int orders);

/// G_{s,m} = |b2(f_s)|^2 / |a1(f_m)|^2 f_m/f_s and the backward counterpart
/// with the probe at the output port. The pump enters at the input port.
/// Throws NumericalError when a gain fails the linearity gate.
ConversionGains conversion_gains(const ChainSpec& chain, const PumpConfig& pump, double f_s,
                                 int orders, const SimConfig& cfg,
                                 const ProbeSettings& probe = {});

/// 1/2 (sum of forward sideband gains + sum of backward gains) / G_ss; the
/// forward signal and idler terms are excluded. Throws std::invalid_argument
/// if G_ss is missing or not positive.
double sideband_excess_noise(const ConversionGains& g);

struct PhaseSensitiveResult {
  std::vector<double> phase;
  std::vector<double> gain;  ///< power gain at f_p/2 (linear)
  double phase_preserving_gain = 0.0;  ///< at f_p/2 - f_base
};

/// Degenerate gain versus signal phase. The pump frequency is snapped to an
/// even multiple of f_base so that f_p/2 lies on the grid exactly.
PhaseSensitiveResult phase_sensitive_gain(const ChainSpec& chain, const PumpConfig& pump,
                                          std::span<const double> phase_grid,
                                          const SimConfig& cfg, const ProbeSettings& probe = {});

/// Forward signal gain |b2(f_s)|^2/|a1(f_s)|^2 with the pump at the input and
/// the pump-only response at f_s subtracted.
double signal_gain(const ChainSpec& chain, const PumpConfig& pump, double f_s,
                   const SimConfig& cfg, const ProbeSettings& probe = {});

}  // namespace twpa
