#pragma once

// Noise bookkeeping in photon units: thermal input noise, Y-factor fits of
// the two-mode and single-mode output-noise models, the system-noise stack,
// input-line calibration and the SNR improvement.

#include <span>
#include <vector>

namespace twpa {

struct NoiseRecord {
  double f = 0.0;         ///< [Hz]
  double t = 0.0;         ///< load temperature [K]
  double p_out_dbm = 0.0; ///< measured output noise power [dBm]
  double rbw = 0.0;       ///< resolution bandwidth [Hz]
};

using NoiseSweep = std::vector<NoiseRecord>;

/// Mean photon number of a thermal mode including vacuum: 0.5 coth(hf / 2 kB T).
double planck_noise(double f, double t);

/// P / (h f b).
double photons_from_power(double p, double f, double b);

struct Interval {
  double lo = 0.0, hi = 0.0;
};

struct NoiseFit {
  double f = 0.0;
  double g_sys_db = 0.0;
  double n_sys_exc = 0.0;   ///< [photons]
  double residual = 0.0;    ///< RMS residual [photons at the output]
  bool nonphysical = false; ///< n_sys_exc < 0
  Interval g_sys_db_range;  ///< worst-case corners of the calibration uncertainties
  Interval n_sys_exc_range;
};

struct NoiseUncertainty {
  double level_db = 0.1;   ///< analyzer level
  double temp_k = 3e-3;    ///< load thermometry
  double ratio_db = 1.0;   ///< idler/signal gain ratio
};

/// Per-frequency fit of N_out = G (N_s(T) + r N_i(T) + N_exc), r = G_si/G_ss
/// fixed, f_i = f_p - f_s. Records are grouped by exact frequency. Throws
/// std::invalid_argument for fewer than two temperatures and FitError for a
/// negative gain.
std::vector<NoiseFit> fit_two_mode(std::span<const NoiseRecord> sweep, double f_p,
                                   double gain_ratio_db = 0.0,
                                   const NoiseUncertainty& unc = {});

struct SingleModeFit {
  double f = 0.0;
  double g2_db = 0.0;
  double n2 = 0.0;        ///< [photons]
  double residual = 0.0;
};

/// Per-frequency fit of N_out = eta1 G2 (N_in + (1 - eta1)/eta1 N_vac + N2/eta1).
std::vector<SingleModeFit> fit_single_mode(std::span<const NoiseRecord> sweep, double eta1);

struct NoiseBreakdown {
  double quantum_limit = 1.0;
  double pre_twpa = 0.0;
  double twpa_excess = 0.0;
  double post_twpa = 0.0;
  double total = 0.0;
};

NoiseBreakdown system_noise_breakdown(double eta1, double n_t_exc, double n2, double g_ss_db);

/// IL = G2 - S21_roundtrip per frequency [dB].
std::vector<double> insertion_loss_calibration(std::span<const double> g2_db,
                                               std::span<const double> s21_roundtrip_db);

/// (N_in + (1 - eta_t)/eta_t N_vac + N2/eta_t) / (N_in + N_T + N2/G_ss).
double delta_snr(double n_in, double eta_t, double n2, double n_t, double g_ss_db);

/// Noiseless synthetic sweep of the two-mode model (one record per f, T).
NoiseSweep synthesize_two_mode(std::span<const double> freqs, std::span<const double> temps,
                               double f_p, double g_sys_db, double n_sys_exc,
                               double gain_ratio_db = 0.0, double rbw = 1e6);

/// Noiseless synthetic sweep of the single-mode model.
NoiseSweep synthesize_single_mode(std::span<const double> freqs, std::span<const double> temps,
                                  double eta1, double g2_db, double n2, double rbw = 1e6);

}  // namespace twpa
