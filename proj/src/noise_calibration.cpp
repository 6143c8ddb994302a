#include "twpa/noise_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "twpa/constants.hpp"
#include "twpa/error.hpp"

namespace twpa {

namespace {

constexpr double kVacuum = 0.5;

// Ordinary least squares y = s x + c.
struct Line {
  double slope = 0.0, intercept = 0.0, rms = 0.0;
};

Line fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("noise fit: input noise does not vary");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (l.slope * x[i] + l.intercept);
    ss += r * r;
  }
  l.rms = std::sqrt(ss / n);
  return l;
}

std::map<double, std::vector<NoiseRecord>> by_frequency(std::span<const NoiseRecord> sweep) {
  std::map<double, std::vector<NoiseRecord>> groups;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const NoiseRecord& r = sweep[i];
    if (!(r.f > 0.0) || !(r.t > 0.0) || !(r.rbw > 0.0)) {
      throw std::invalid_argument("noise sweep row " + std::to_string(i) +
                                  ": frequency, temperature and rbw must be positive");
    }
    groups[r.f].push_back(r);
  }
  for (const auto& [f, rows] : groups) {
    std::set<double> temps;
    for (const auto& r : rows) temps.insert(r.t);
    if (temps.size() < 2) {
      throw std::invalid_argument("noise sweep: frequency " + std::to_string(f) +
                                  " Hz has fewer than two load temperatures");
    }
  }
  return groups;
}

struct TwoModeSolution {
  double g = 0.0, n_exc = 0.0, rms = 0.0;
};

TwoModeSolution solve_two_mode(const std::vector<NoiseRecord>& rows, double f_p, double ratio,
                               double level_scale, double dt) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    const double f_i = f_p - r.f;
    if (!(f_i > 0.0)) throw std::invalid_argument("fit_two_mode: idler frequency f_p - f_s <= 0");
    const double t = r.t + dt;
    x.push_back(planck_noise(r.f, t) + ratio * planck_noise(f_i, t));
    y.push_back(photons_from_power(dbm_to_watt(r.p_out_dbm) * level_scale, r.f, r.rbw));
  }
  const Line l = fit_line(x, y);
  return {l.slope, l.intercept / l.slope, l.rms};
}

}  // namespace

double planck_noise(double f, double t) {
  if (!(f > 0.0)) throw std::invalid_argument("planck_noise: f must be positive");
  if (!(t >= 0.0)) throw std::invalid_argument("planck_noise: T must be >= 0");
  if (t == 0.0) return kVacuum;
  const double x = kPlanck * f / (2.0 * kBoltzmann * t);
  return 0.5 / std::tanh(x);
}

double photons_from_power(double p, double f, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("photons_from_power: bandwidth must be positive");
  if (!(f > 0.0)) throw std::invalid_argument("photons_from_power: f must be positive");
  return p / (kPlanck * f * b);
}

std::vector<NoiseFit> fit_two_mode(std::span<const NoiseRecord> sweep, double f_p,
                                   double gain_ratio_db, const NoiseUncertainty& unc) {
  std::vector<NoiseFit> out;
  for (const auto& [f, rows] : by_frequency(sweep)) {
    const TwoModeSolution s = solve_two_mode(rows, f_p, db_to_ratio(gain_ratio_db), 1.0, 0.0);
    if (!(s.g > 0.0)) {
      throw FitError("fit_two_mode: negative system gain at " + std::to_string(f) + " Hz");
    }
    NoiseFit fit;
    fit.f = f;
    fit.g_sys_db = ratio_to_db(s.g);
    fit.n_sys_exc = s.n_exc;
    fit.residual = s.rms;
    fit.nonphysical = s.n_exc < 0.0;
    fit.g_sys_db_range = {fit.g_sys_db, fit.g_sys_db};
    fit.n_sys_exc_range = {fit.n_sys_exc, fit.n_sys_exc};
    for (double sl : {-1.0, 1.0}) {
      for (double st : {-1.0, 1.0}) {
        for (double sr : {-1.0, 1.0}) {
          const TwoModeSolution c =
              solve_two_mode(rows, f_p, db_to_ratio(gain_ratio_db + sr * unc.ratio_db),
                             db_to_ratio(sl * unc.level_db), st * unc.temp_k);
          if (!(c.g > 0.0)) continue;
          const double gdb = ratio_to_db(c.g);
          fit.g_sys_db_range.lo = std::min(fit.g_sys_db_range.lo, gdb);
          fit.g_sys_db_range.hi = std::max(fit.g_sys_db_range.hi, gdb);
          fit.n_sys_exc_range.lo = std::min(fit.n_sys_exc_range.lo, c.n_exc);
          fit.n_sys_exc_range.hi = std::max(fit.n_sys_exc_range.hi, c.n_exc);
        }
      }
    }
    out.push_back(fit);
  }
  return out;
}

std::vector<SingleModeFit> fit_single_mode(std::span<const NoiseRecord> sweep, double eta1) {
  if (!(eta1 > 0.0 && eta1 <= 1.0)) throw std::invalid_argument("fit_single_mode: eta1 must be in (0, 1]");
  std::vector<SingleModeFit> out;
  for (const auto& [f, rows] : by_frequency(sweep)) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
      x.push_back(planck_noise(r.f, r.t));
      y.push_back(photons_from_power(dbm_to_watt(r.p_out_dbm), r.f, r.rbw));
    }
    const Line l = fit_line(x, y);
    // slope = eta1 G2, intercept = G2 ((1 - eta1) N_vac + N2)
    const double g2 = l.slope / eta1;
    if (!(g2 > 0.0)) throw FitError("fit_single_mode: negative gain at " + std::to_string(f) + " Hz");
    SingleModeFit fit;
    fit.f = f;
    fit.g2_db = ratio_to_db(g2);
    fit.n2 = l.intercept / g2 - (1.0 - eta1) * kVacuum;
    fit.residual = l.rms;
    out.push_back(fit);
  }
  return out;
}

NoiseBreakdown system_noise_breakdown(double eta1, double n_t_exc, double n2, double g_ss_db) {
  if (!(eta1 > 0.0 && eta1 <= 1.0)) throw std::invalid_argument("noise breakdown: eta1 must be in (0, 1]");
  NoiseBreakdown b;
  b.quantum_limit = 2.0 * kVacuum;
  b.pre_twpa = 2.0 * (1.0 - eta1) / eta1 * kVacuum;
  b.twpa_excess = n_t_exc / eta1;
  b.post_twpa = n2 / (eta1 * db_to_ratio(g_ss_db));
  b.total = b.quantum_limit + b.pre_twpa + b.twpa_excess + b.post_twpa;
  return b;
}

std::vector<double> insertion_loss_calibration(std::span<const double> g2_db,
                                               std::span<const double> s21_roundtrip_db) {
  if (g2_db.size() != s21_roundtrip_db.size()) {
    throw std::invalid_argument("insertion_loss_calibration: frequency grids differ (" +
                                std::to_string(g2_db.size()) + " vs " +
                                std::to_string(s21_roundtrip_db.size()) + " points)");
  }
  std::vector<double> il(g2_db.size());
  for (std::size_t i = 0; i < il.size(); ++i) il[i] = g2_db[i] - s21_roundtrip_db[i];
  return il;
}

double delta_snr(double n_in, double eta_t, double n2, double n_t, double g_ss_db) {
  if (!(eta_t > 0.0 && eta_t <= 1.0)) throw std::invalid_argument("delta_snr: eta_t must be in (0, 1]");
  if (!(n_t >= kVacuum)) throw std::invalid_argument("delta_snr: N_T must be >= 0.5");
  const double off = n_in + (1.0 - eta_t) / eta_t * kVacuum + n2 / eta_t;
  const double on = n_in + n_t + n2 / db_to_ratio(g_ss_db);
  return off / on;
}

NoiseSweep synthesize_two_mode(std::span<const double> freqs, std::span<const double> temps,
                               double f_p, double g_sys_db, double n_sys_exc,
                               double gain_ratio_db, double rbw) {
  NoiseSweep s;
  const double g = db_to_ratio(g_sys_db), r = db_to_ratio(gain_ratio_db);
  for (double f : freqs) {
    for (double t : temps) {
      const double n = g * (planck_noise(f, t) + r * planck_noise(f_p - f, t) + n_sys_exc);
      s.push_back({f, t, watt_to_dbm(n * kPlanck * f * rbw), rbw});
    }
  }
  return s;
}

NoiseSweep synthesize_single_mode(std::span<const double> freqs, std::span<const double> temps,
                                  double eta1, double g2_db, double n2, double rbw) {
  NoiseSweep s;
  const double g2 = db_to_ratio(g2_db);
  for (double f : freqs) {
    for (double t : temps) {
      const double n = eta1 * g2 * (planck_noise(f, t) + (1.0 - eta1) / eta1 * kVacuum + n2 / eta1);
      s.push_back({f, t, watt_to_dbm(n * kPlanck * f * rbw), rbw});
    }
  }
  return s;
}

}  // namespace twpa
