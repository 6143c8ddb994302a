#pragma once

// Parameter extraction from transmission measurements: per-flux cell
// inductance from |S21| stopband shapes, and rf-SQUID circuit parameters
// from the resulting L_cell(flux) curve.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twpa/chain_model.hpp"

namespace twpa {

struct CellInductanceFit {
  std::optional<double> flux_phi0;
  bool converged = false;
  double l_cell = 0.0;    ///< [H]
  double residual = 0.0;  ///< RMS of background-corrected dB residual
  int iterations = 0;
  std::string error;      ///< empty on success
};

struct CellFitOptions {
  double floor_db = -60.0;  ///< |S21| is clipped at this level in model and data
  double dip_depth_db = 10.0;  ///< minimum dip depth below the median to seed a fit
  int max_iterations = 500;
  double rel_step_tol = 1e-8;
};

/// One fit per spectrum; a failed fit is reported in its record and does not
/// abort the others. `chain` supplies N, the capacitance pattern and Z0.
std::vector<CellInductanceFit> fit_cell_inductance(std::span<const S21Spectrum> spectra,
                                                   const ChainSpec& chain,
                                                   const CellFitOptions& opt = {});

/// Abscissa of L_cell data for the flux-model fit. With the bias current the
/// flux is Lm * I_dc and all four parameters are identifiable; with the flux
/// itself Lm only rescales the curve and must be supplied.
enum class FluxAbscissa { bias_current, flux_phi0 };

struct FluxModelData {
  FluxAbscissa abscissa = FluxAbscissa::bias_current;
  std::vector<double> x;       ///< I_dc [A] or external flux [Phi0]
  std::vector<double> l_cell;  ///< [H]
  double lm_nominal = 0.0;     ///< required for FluxAbscissa::flux_phi0 [H]
};

struct FluxModelFit {
  double ic = 0.0, lm = 0.0, lw = 0.0, lpar = 0.0;  ///< lpar = Lp + Lj0L
  /// Covariance in the order (ic, lm, lw, lpar); fixed parameters have zero rows.
  std::vector<double> covariance;
  double rms_residual = 0.0;  ///< [H]
  int iterations = 0;

  double sigma(int i) const;
};

struct FluxFitOptions {
  int max_iterations = 500;
  double rel_step_tol = 1e-8;
};

/// Levenberg-Marquardt fit of L_cell = Lw + non-ideal L_SQ(phi_dc) with
/// Ic, Lm, Lw and Lp + Lj0L free. Throws FitError on degenerate data or
/// non-convergence.
FluxModelFit fit_flux_model(const FluxModelData& data, const FluxFitOptions& opt = {});

/// Model curve for given parameters at the data abscissae.
std::vector<double> flux_model_curve(const FluxModelFit& p, FluxAbscissa abscissa,
                                     std::span<const double> x);

}  // namespace twpa
