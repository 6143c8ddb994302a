#include "twpa/timedomain_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "twpa/constants.hpp"
#include "twpa/error.hpp"
#include "twpa/kernels/kernels.hpp"
#include "twpa/parallel.hpp"

namespace twpa {

namespace {

using cplx = std::complex<double>;
constexpr double kPhi0 = kReducedFluxQuantum;

// Raised-cosine turn-on.
struct Envelope {
  double ramp = 0.0;
  double value(double t) const {
    return t >= ramp ? 1.0 : 0.5 * (1.0 - std::cos(kPi * t / ramp));
  }
  double deriv(double t) const {
    return t >= ramp ? 0.0 : 0.5 * kPi / ramp * std::sin(kPi * t / ramp);
  }
};

struct Oscillator {
  double w, amp, phase;
};

// Sum of ramped cosines.
struct Source {
  std::vector<Oscillator> osc;
  Envelope env;

  double value(double t) const {
    if (osc.empty()) return 0.0;
    double s = 0.0;
    for (const auto& o : osc) s += o.amp * std::cos(o.w * t + o.phase);
    return env.value(t) * s;
  }
  double deriv(double t) const {
    if (osc.empty()) return 0.0;
    double s = 0.0, ds = 0.0;
    for (const auto& o : osc) {
      s += o.amp * std::cos(o.w * t + o.phase);
      ds -= o.amp * o.w * std::sin(o.w * t + o.phase);
    }
    return env.deriv(t) * s + env.value(t) * ds;
  }
};

// Single-bin DFT accumulator over a window of n samples for integer bins m.
class Projector {
 public:
  Projector(std::size_t n, std::vector<long> bins, std::size_t channels)
      : n_(n), bins_(std::move(bins)), channels_(channels),
        cos_(n), sin_(n), idx_(bins_.size()), acc_(channels * bins_.size()) {
    for (std::size_t k = 0; k < n; ++k) {
      const double a = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
      cos_[k] = std::cos(a);
      sin_[k] = std::sin(a);
    }
    reset();
  }

  void reset() {
    std::fill(idx_.begin(), idx_.end(), 0);
    std::fill(acc_.begin(), acc_.end(), cplx{});
  }

  // x holds one sample per channel at the next sample index.
  void add(const double* x) {
    for (std::size_t j = 0; j < bins_.size(); ++j) {
      const double c = cos_[idx_[j]], s = sin_[idx_[j]];
      for (std::size_t ch = 0; ch < channels_; ++ch) {
        acc_[ch * bins_.size() + j] += cplx(x[ch] * c, -x[ch] * s);
      }
      idx_[j] += static_cast<std::size_t>(bins_[j]) % n_;
      if (idx_[j] >= n_) idx_[j] -= n_;
    }
  }

  cplx amplitude(std::size_t ch, std::size_t j) const {
    return acc_[ch * bins_.size() + j] * (2.0 / static_cast<double>(n_));
  }

  std::vector<cplx> snapshot() const {
    std::vector<cplx> v(acc_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = acc_[i] * (2.0 / static_cast<double>(n_));
    return v;
  }

 private:
  std::size_t n_;
  std::vector<long> bins_;
  std::size_t channels_;
  std::vector<double> cos_, sin_;
  std::vector<std::size_t> idx_;
  std::vector<cplx> acc_;
};

// Largest per-bin change between two windows, relative to each bin's size
// with a floor tied to the largest bin so that numerically empty bins do not
// block convergence.
double window_change(const std::vector<cplx>& prev, const std::vector<cplx>& cur) {
  double scale = 0.0;
  for (const auto& x : cur) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0.0;
  double change = 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const double denom = std::max(std::abs(cur[i]), 1e-6 * scale);
    change = std::max(change, std::abs(cur[i] - prev[i]) / denom);
  }
  return change;
}

void check_config(const SimConfig& cfg) {
  if (!(cfg.record_time > 0.0)) throw std::invalid_argument("sim: record_time must be positive");
  if (!(cfg.settle_time >= 0.0)) throw std::invalid_argument("sim: settle_time must be >= 0");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("sim: tol must be positive");
  if (!(cfg.dt >= 0.0)) throw std::invalid_argument("sim: dt must be >= 0");
  if (!(cfg.ramp_time >= 0.0)) throw std::invalid_argument("sim: ramp_time must be >= 0");
}

long bin_of(double f, double f_base) {
  const double m = f / f_base;
  const double r = std::round(m);
  if (!(r >= 1.0) || std::abs(m - r) > 1e-6 * std::max(1.0, r)) {
    throw std::invalid_argument("frequency " + std::to_string(f) +
                                " Hz is not a multiple of the base frequency " +
                                std::to_string(f_base) + " Hz (window not coherent)");
  }
  return static_cast<long>(r);
}

std::vector<Tone> snap_tones(const std::vector<Tone>& tones, double f_base) {
  std::vector<Tone> out = tones;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i].freq > 0.0)) {
      throw std::invalid_argument("drive tone " + std::to_string(i) + ": frequency must be positive");
    }
    if (!(out[i].amplitude >= 0.0)) {
      throw std::invalid_argument("drive tone " + std::to_string(i) + ": amplitude must be >= 0");
    }
    out[i].freq = snap_frequency(out[i].freq, f_base);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (out[i].freq == out[j].freq && out[i].port == out[j].port) {
        throw std::invalid_argument("drive tones " + std::to_string(i) + " and " +
                                    std::to_string(j) + " coincide on the frequency grid");
      }
    }
  }
  return out;
}

// Steps per window for a target step, so that the window holds an integer
// number of steps.
std::size_t steps_per_window(double record, double dt_target) {
  const double n = std::ceil(record / dt_target - 1e-9);
  if (!(n >= 1.0) || n > 1e9) throw std::invalid_argument("sim: unreasonable step count per window");
  return static_cast<std::size_t>(n);
}

std::string describe_change(double change, int windows) {
  std::ostringstream os;
  os << "no periodic steady state: relative window change " << change << " after " << windows
     << " windows";
  return os.str();
}

}  // namespace

double snap_frequency(double f, double f_base) {
  if (!(f_base > 0.0)) throw std::invalid_argument("snap_frequency: f_base must be positive");
  return std::max(1.0, std::round(f / f_base)) * f_base;
}

double bias_current_for_flux(const SquidParams& squid, double flux_phi0) {
  if (!(squid.lm > 0.0)) throw std::invalid_argument("bias current: Lm must be positive");
  return flux_phi0 * kFluxQuantum / squid.lm;
}

std::complex<double> harmonic_amplitude(std::span<const double> x, double t0, double dt,
                                        double f, double f_base) {
  if (x.empty()) throw std::invalid_argument("harmonic_amplitude: empty window");
  const double window = dt * static_cast<double>(x.size());
  if (std::abs(window * f_base - 1.0) > 1e-9) {
    throw std::invalid_argument("harmonic_amplitude: window is not one base period");
  }
  const long m = bin_of(f, f_base);
  const std::size_t n = x.size();
  cplx acc;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = static_cast<std::size_t>((static_cast<unsigned long long>(m) * k) % n);
    const double a = kTwoPi * static_cast<double>(idx) / static_cast<double>(n);
    acc += x[k] * cplx(std::cos(a), -std::sin(a));
  }
  return acc * (2.0 / static_cast<double>(n)) * std::polar(1.0, -kTwoPi * f * t0);
}

ImpedanceResult extract_impedance(const TimeSeries& s, double f, double z0) {
  if (s.v.size() != s.i.size()) throw std::invalid_argument("extract_impedance: v and i lengths differ");
  const cplx v = harmonic_amplitude(s.v, s.t0, s.dt, f, s.f_base);
  const cplx i = harmonic_amplitude(s.i, s.t0, s.dt, f, s.f_base);
  if (std::abs(i) == 0.0) throw std::invalid_argument("extract_impedance: no current at f");
  ImpedanceResult r;
  r.z_cell = v / i;
  r.r_cell = r.z_cell.real();
  r.l_cell = r.z_cell.imag() / (kTwoPi * f);
  r.power_dbm = watt_to_dbm(0.5 * std::norm(i) * z0);
  return r;
}

// ---- unit cell ---------------------------------------------------------------

UnitCellRecord simulate_unit_cell(const SquidParams& sq, const DriveSpec& drive,
                                  const SimConfig& cfg) {
  validate(sq);
  check_config(cfg);
  if (!(sq.cj > 0.0)) throw std::invalid_argument("unit cell: time-domain engine requires cj > 0");
  if (!(sq.lm > 0.0)) throw std::invalid_argument("unit cell: time-domain engine requires lm > 0");
  const double f_base = 1.0 / cfg.record_time;
  const std::vector<Tone> tones = snap_tones(drive.tones, f_base);

  const double i_dc = drive.i_dc.value_or(0.0);
  const double lpar = sq.parasitic(), lm = sq.lm, lsum = lm + lpar;
  const double beta_l = screening_parameter(sq);
  const double phi_dc = solve_phi_dc(lm * i_dc / kPhi0, beta_l);

  double f_max = f_base;
  for (const auto& t : tones) f_max = std::max(f_max, t.freq);
  const double w_pl = std::sqrt((1.0 / lsum + sq.ic / kPhi0) / sq.cj);
  const double dt_target = cfg.dt > 0.0 ? cfg.dt : std::min(1.0 / (200.0 * f_max), kTwoPi / w_pl / 50.0);
  const std::size_t ns = steps_per_window(cfg.record_time, dt_target);
  const double dt = cfg.record_time / static_cast<double>(ns);

  Source src;
  src.env.ramp = cfg.ramp_time > 0.0 ? cfg.ramp_time : cfg.record_time;
  for (const auto& t : tones) src.osc.push_back({kTwoPi * t.freq, t.amplitude, t.phase});
  const int ramp_windows = static_cast<int>(std::ceil(src.env.ramp / cfg.record_time - 1e-9));
  const int max_windows = ramp_windows + static_cast<int>(std::ceil(cfg.settle_time / cfg.record_time)) + 1;

  const double damping = std::isfinite(sq.rshunt) ? 1.0 / (sq.rshunt * sq.cj) : 0.0;
  const double inv_cj = 1.0 / (sq.cj * kPhi0);
  const double mix = lm / lsum;
  // phi'' for state (phi, w) at time t
  auto accel = [&](double t, double phi, double w) {
    const double cur = i_dc + src.value(t);
    const double theta = (lpar * cur / kPhi0 + phi) * mix;
    const double ij = cur - kPhi0 * theta / lm;
    return (ij - sq.ic * std::sin(phi)) * inv_cj - damping * w;
  };

  std::vector<long> bins;
  for (const auto& t : tones) bins.push_back(bin_of(t.freq, f_base));
  Projector proj(ns, bins, 2);

  UnitCellRecord rec;
  rec.phi_dc = phi_dc;
  rec.series.dt = dt;
  rec.series.f_base = f_base;
  rec.series.v.resize(ns);
  rec.series.i.resize(ns);
  rec.v_sq.resize(ns);
  rec.phi.resize(ns);

  double phi = phi_dc, w = 0.0;
  std::vector<cplx> prev;
  bool converged = false;
  double change = std::numeric_limits<double>::infinity();
  int win = 0;
  for (; win < max_windows; ++win) {
    proj.reset();
    double phi_sum = 0.0;
    for (std::size_t k = 0; k < ns; ++k) {
      const double t = static_cast<double>(static_cast<std::size_t>(win) * ns + k) * dt;
      // sample at t
      const double cur = i_dc + src.value(t);
      const double dcur = src.deriv(t);
      const double theta_dot = (lpar * dcur / kPhi0 + w) * mix;
      const double vsq = kPhi0 * theta_dot;
      const double v = sq.lw * dcur + vsq;
      const double sample[2] = {v, cur};
      proj.add(sample);
      rec.series.v[k] = v;
      rec.series.i[k] = cur;
      rec.v_sq[k] = vsq;
      rec.phi[k] = phi;
      phi_sum += phi;
      // RK4 step
      const double k1p = w, k1w = accel(t, phi, w);
      const double k2p = w + 0.5 * dt * k1w, k2w = accel(t + 0.5 * dt, phi + 0.5 * dt * k1p, k2p);
      const double k3p = w + 0.5 * dt * k2w, k3w = accel(t + 0.5 * dt, phi + 0.5 * dt * k2p, k3p);
      const double k4p = w + dt * k3w, k4w = accel(t + dt, phi + dt * k3p, k4p);
      phi += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
      w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }
    if (!std::isfinite(phi) || std::abs(phi) > 1e6) {
      throw NumericalError("unit cell: junction phase diverged in window " + std::to_string(win));
    }
    rec.series.t0 = static_cast<double>(win) * cfg.record_time;
    rec.mean_phi = phi_sum / static_cast<double>(ns);
    std::vector<cplx> snap = proj.snapshot();
    if (win >= ramp_windows && !prev.empty()) {
      change = window_change(prev, snap);
      if (change < cfg.tol) { converged = true; ++win; break; }
    }
    prev = std::move(snap);
  }
  rec.windows = win;
  rec.last_change = change;
  // zero-amplitude tones carry nothing to converge on
  const bool driven = std::any_of(tones.begin(), tones.end(),
                                  [](const Tone& t) { return t.amplitude > 0.0; });
  if (!converged && driven) throw NumericalError("unit cell: " + describe_change(change, win));
  if (!driven) rec.last_change = 0.0;
  return rec;
}

// ---- chain -------------------------------------------------------------------

std::size_t PortWaves::index_of(double f) const {
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (std::abs(freq[i] - f) <= 1e-9 * std::max(1.0, f)) return i;
  }
  throw std::out_of_range("port waves: frequency " + std::to_string(f) + " Hz not extracted");
}

ChainRecord simulate_chain(const ChainSpec& chain, const DriveSpec& drive, const SimConfig& cfg,
                           std::span<const double> extract) {
  validate(chain);
  check_config(cfg);
  const SquidParams& sq = chain.squid;
  if (chain.n_cells < 1) throw std::invalid_argument("simulate_chain: need at least one cell");
  if (!(sq.cj > 0.0)) throw std::invalid_argument("simulate_chain: time-domain engine requires cj > 0");
  const double lw = sq.lw, lm = sq.lm, lpar = sq.parasitic();
  const double d = lw * lm + lw * lpar + lm * lpar;
  if (!(lm > 0.0) || !(d > 0.0)) {
    throw std::invalid_argument("simulate_chain: need lm > 0 and a non-zero series inductance");
  }
  const auto n = static_cast<std::size_t>(chain.n_cells);
  const double r = chain.z_term;
  const double f_base = 1.0 / cfg.record_time;
  const std::vector<Tone> tones = snap_tones(drive.tones, f_base);

  const double beta_l = screening_parameter(sq);
  const double i_dc = drive.i_dc.value_or(chain.flux.phi_ext * kPhi0 / lm);
  const double phi_dc = solve_phi_dc(lm * i_dc / kPhi0, beta_l);

  kernels::CellCoeffs kc{};
  kc.i_theta = kPhi0 * (lpar + lm) / d;
  kc.i_phi = kPhi0 * lm / d;
  kc.j_theta = kPhi0 * lm / d;
  kc.j_phi = kPhi0 * (lw + lm) / d;
  kc.ic = sq.ic;
  kc.inv_cj_phi0 = 1.0 / (sq.cj * kPhi0);
  kc.damping = std::isfinite(sq.rshunt) ? 1.0 / (sq.rshunt * sq.cj) : 0.0;

  std::vector<double> inv_c(n);
  double c_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = chain.pattern.at(static_cast<long>(i));
    c_min = std::min(c_min, c);
    inv_c[i] = 1.0 / (c * kPhi0);
  }

  // Extraction bins
  std::vector<double> f_ext;
  for (double f : extract) f_ext.push_back(snap_frequency(f, f_base));
  std::sort(f_ext.begin(), f_ext.end());
  f_ext.erase(std::unique(f_ext.begin(), f_ext.end()), f_ext.end());
  std::vector<long> bins;
  for (double f : f_ext) bins.push_back(bin_of(f, f_base));

  // Step: resolve the highest tone and the fastest linear mode.
  double f_max = f_base;
  for (const auto& t : tones) f_max = std::max(f_max, t.freq);
  for (double f : f_ext) f_max = std::max(f_max, f);
  const double w_pl = std::sqrt((kc.j_phi / kPhi0 + sq.ic / kPhi0) / sq.cj);
  const double alpha_p = parasitic_ratio(sq);
  const double l_min = lw + lm * (1.0 + alpha_p * beta_l) / (1.0 + beta_l);
  const double w_ladder = 2.0 / std::sqrt(l_min * c_min);
  const double w_port = r * kc.i_theta / kPhi0;
  double dt_target = std::min(1.0 / (200.0 * f_max), kTwoPi / w_pl / 50.0);
  dt_target = std::min({dt_target, kTwoPi / w_ladder / 50.0, 0.2 / w_port});
  if (cfg.dt > 0.0) dt_target = cfg.dt;
  const std::size_t ns = steps_per_window(cfg.record_time, dt_target);
  const double dt = cfg.record_time / static_cast<double>(ns);

  // Thevenin sources: V = sqrt(8 R P) for available power P.
  Source s1, s2;
  s1.env.ramp = s2.env.ramp = cfg.ramp_time > 0.0 ? cfg.ramp_time : cfg.record_time;
  for (const auto& t : tones) {
    const Oscillator o{kTwoPi * t.freq, std::sqrt(8.0 * r * t.amplitude), t.phase};
    (t.port == Port::input ? s1 : s2).osc.push_back(o);
  }
  const int ramp_windows = static_cast<int>(std::ceil(s1.env.ramp / cfg.record_time - 1e-9));
  const int max_windows = cfg.fixed_windows > 0
                              ? cfg.fixed_windows
                              : ramp_windows + static_cast<int>(std::ceil(cfg.settle_time / cfg.record_time)) + 1;

  // State: psi[0..n], vpsi[1..n], phi[1..n], vphi[1..n]
  const std::size_t dim = 1 + 4 * n;
  std::vector<double> y(dim, 0.0), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  const double theta0 = (i_dc * d / kPhi0 + lm * phi_dc) / (lm + lpar);
  for (std::size_t i = 0; i <= n; ++i) y[i] = static_cast<double>(n - i) * theta0;
  for (std::size_t i = 0; i < n; ++i) y[1 + 2 * n + i] = phi_dc;

  const kernels::KernelTable& kt = kernels::table();
  std::vector<double> cur(n + 1);

  auto rhs = [&](double t, const double* st, double* dst) {
    const double* psi = st;
    const double* vpsi = st + 1 + n;
    const double* phi = st + 1 + 2 * n;
    const double* vphi = st + 1 + 3 * n;
    kt.cell_currents(psi, phi, vphi, n, kc, cur.data(), dst + 1 + 3 * n);
    const double v_n = kPhi0 * vpsi[n - 1];
    cur[n] = i_dc + (v_n - s2.value(t)) / r;
    kt.node_accel(cur.data(), inv_c.data(), n, dst + 1 + n);
    // dst layout: dpsi[0..n] = (psi0', vpsi), dvpsi = node accel, dphi = vphi
    dst[0] = (s1.value(t) + r * (i_dc - cur[0])) / kPhi0;
    std::copy(vpsi, vpsi + n, dst + 1);
    std::copy(vphi, vphi + n, dst + 1 + 2 * n);
  };

  Projector proj(ns, bins, 2);
  ChainRecord rec;
  rec.f_base = f_base;
  rec.dt = dt;
  rec.tones = tones;
  if (cfg.keep_waveforms) {
    rec.n_nodes = n + 1;
    rec.node_v.resize(ns * (n + 1));
  }

  std::vector<cplx> prev;
  double change = std::numeric_limits<double>::infinity();
  bool converged = false;
  int win = 0;
  for (; win < max_windows; ++win) {
    proj.reset();
    for (std::size_t k = 0; k < ns; ++k) {
      const double t = static_cast<double>(static_cast<std::size_t>(win) * ns + k) * dt;
      // port voltages at t
      const double i1 = kc.i_theta * (y[0] - y[1]) - kc.i_phi * y[1 + 2 * n];
      const double v0 = s1.value(t) + r * (i_dc - i1);
      const double vn = kPhi0 * y[2 * n];
      const double sample[2] = {v0, vn};
      proj.add(sample);
      if (cfg.keep_waveforms) {
        double* row = rec.node_v.data() + k * (n + 1);
        row[0] = v0;
        for (std::size_t i = 1; i <= n; ++i) row[i] = kPhi0 * y[n + i];
      }
      rhs(t, y.data(), k1.data());
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
      rhs(t + 0.5 * dt, tmp.data(), k2.data());
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
      rhs(t + 0.5 * dt, tmp.data(), k3.data());
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + dt * k3[i];
      rhs(t + dt, tmp.data(), k4.data());
      for (std::size_t i = 0; i < dim; ++i) {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double p = y[1 + 2 * n + i];
      if (!std::isfinite(p) || std::abs(p) > 1e4) {
        throw NumericalError("simulate_chain: junction phase of cell " + std::to_string(i + 1) +
                             " diverged in window " + std::to_string(win));
      }
    }
    std::vector<cplx> snap = proj.snapshot();
    if (win >= ramp_windows && !prev.empty()) {
      change = window_change(prev, snap);
      if (cfg.fixed_windows == 0 && change < cfg.tol) { converged = true; ++win; break; }
    }
    prev = std::move(snap);
  }
  if (cfg.fixed_windows > 0) converged = true;
  rec.windows = win;
  rec.last_change = change;
  if (!converged) throw NumericalError("simulate_chain: " + describe_change(change, win));

  // Port waves from the last window.
  PortWaves& pw = rec.waves;
  pw.z0 = r;
  pw.freq = f_ext;
  const double norm = 1.0 / (2.0 * std::sqrt(r) * std::sqrt(2.0));  // RMS power waves
  for (std::size_t j = 0; j < f_ext.size(); ++j) {
    cplx vs1, vs2;
    for (const auto& t : tones) {
      if (t.freq != f_ext[j]) continue;
      const cplx ph = std::polar(std::sqrt(8.0 * r * t.amplitude), t.phase);
      (t.port == Port::input ? vs1 : vs2) += ph;
    }
    const cplx v0 = proj.amplitude(0, j), vn = proj.amplitude(1, j);
    pw.a1.push_back(vs1 * norm);
    pw.b1.push_back((2.0 * v0 - vs1) * norm);
    pw.a2.push_back(vs2 * norm);
    pw.b2.push_back((2.0 * vn - vs2) * norm);
  }
  return rec;
}

// ---- derived experiments -------------------------------------------------------

namespace {

struct ProbeRun {
  cplx b2;
  cplx a;
};

// Runs pump (+ optional probe) and returns the output wave at f_out and the
// incident probe wave.
ProbeRun run_probe(const ChainSpec& chain, const PumpConfig& pump, std::optional<Tone> probe,
                   double f_out, const SimConfig& cfg) {
  DriveSpec d;
  if (pump.p_p > 0.0) d.tones.push_back({pump.f_p, pump.p_p, 0.0, Port::input});
  std::vector<double> ext{f_out};
  if (probe) {
    d.tones.push_back(*probe);
    ext.push_back(probe->freq);
  }
  const ChainRecord rec = simulate_chain(chain, d, cfg, ext);
  ProbeRun out;
  out.b2 = rec.waves.b2[rec.waves.index_of(snap_frequency(f_out, rec.f_base))];
  if (probe) {
    const std::size_t j = rec.waves.index_of(snap_frequency(probe->freq, rec.f_base));
    out.a = probe->port == Port::input ? rec.waves.a1[j] : rec.waves.a2[j];
  }
  return out;
}

// Pump-only run with the same window count as a probed run, for subtraction.
SimConfig fixed_windows(const SimConfig& cfg, int windows) {
  SimConfig c = cfg;
  c.fixed_windows = windows;
  return c;
}

}  // namespace

std::vector<std::pair<std::string, double>> mixing_products(double f_p, double f_s, int orders) {
  if (orders < 0) throw std::invalid_argument("mixing_products: orders must be >= 0");
  if (!(f_s < f_p)) throw std::invalid_argument("mixing_products: requires f_s < f_p");
  std::vector<std::pair<std::string, double>> out;
  const double f_i = f_p - f_s;
  for (int k = 0; k <= orders; ++k) {
    const std::string pre = k == 0 ? "" : (k == 1 ? "p+" : std::to_string(k) + "p+");
    out.emplace_back(pre + "s", k * f_p + f_s);
    out.emplace_back(pre + "i", k * f_p + f_i);
  }
  return out;
}

double signal_gain(const ChainSpec& chain, const PumpConfig& pump, double f_s,
                   const SimConfig& cfg, const ProbeSettings& probe) {
  const double f_base = 1.0 / cfg.record_time;
  const Tone t{snap_frequency(f_s, f_base), probe.probe_power, 0.0, Port::input};
  DriveSpec d;
  if (pump.p_p > 0.0) d.tones.push_back({pump.f_p, pump.p_p, 0.0, Port::input});
  d.tones.push_back(t);
  const ChainRecord rec = simulate_chain(chain, d, cfg, std::vector<double>{t.freq});
  const std::size_t j = rec.waves.index_of(t.freq);
  cplx b2 = rec.waves.b2[j];
  if (pump.p_p > 0.0) {
    b2 -= run_probe(chain, pump, std::nullopt, t.freq, fixed_windows(cfg, rec.windows)).b2;
  }
  return std::norm(b2) / std::norm(rec.waves.a1[j]);
}

ConversionGains conversion_gains(const ChainSpec& chain, const PumpConfig& pump, double f_s,
                                 int orders, const SimConfig& cfg, const ProbeSettings& probe) {
  const double f_base = 1.0 / cfg.record_time;
  const double fs = snap_frequency(f_s, f_base);
  const double fp = snap_frequency(pump.f_p, f_base);
  PumpConfig pc = pump;
  pc.f_p = fp;
  const auto products = mixing_products(fp, fs, orders);

  struct Job {
    std::size_t product;
    Port port;
    double power;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < products.size(); ++m) {
    for (Port port : {Port::input, Port::output}) {
      jobs.push_back({m, port, probe.probe_power});
      jobs.push_back({m, port, 0.25 * probe.probe_power});
    }
  }

  // Reference window count from the forward signal run, then everything at
  // that fixed length so that the pump-only baseline subtracts exactly.
  const Tone ref_tone{fs, probe.probe_power, 0.0, Port::input};
  DriveSpec ref;
  if (pc.p_p > 0.0) ref.tones.push_back({fp, pc.p_p, 0.0, Port::input});
  ref.tones.push_back(ref_tone);
  const int windows = simulate_chain(chain, ref, cfg, std::vector<double>{fs}).windows;
  const SimConfig fixed = fixed_windows(cfg, windows);
  const cplx base = pc.p_p > 0.0 ? run_probe(chain, pc, std::nullopt, fs, fixed).b2 : cplx{};

  std::vector<double> gains(jobs.size());
  parallel_for(jobs.size(), probe.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const double fm = products[job.product].second;
    const Tone t{fm, job.power, 0.0, job.port};
    const ProbeRun run = run_probe(chain, pc, t, fs, fixed);
    gains[j] = std::norm(run.b2 - base) / std::norm(run.a) * fm / fs;
  });

  ConversionGains out;
  out.f_s = fs;
  out.f_p = fp;
  for (std::size_t j = 0; j < jobs.size(); j += 2) {
    const auto& [label, fm] = products[jobs[j].product];
    (jobs[j].port == Port::input ? out.forward : out.backward)[label] = gains[j];
    out.freq[label] = fm;
  }
  const double g_ss = out.g_ss();
  for (std::size_t j = 0; j < jobs.size(); j += 2) {
    const double g = gains[j], g_half = gains[j + 1];
    if (std::max(g, g_half) < probe.gate_floor * g_ss) continue;
    const double diff = std::abs(ratio_to_db(g) - ratio_to_db(g_half));
    if (!(diff < probe.gate_db)) {
      const auto& label = products[jobs[j].product].first;
      std::ostringstream os;
      os << "conversion gain " << label << (jobs[j].port == Port::input ? " (forward)" : " (backward)")
         << " changes by " << diff << " dB under probe-amplitude halving; lower the probe power";
      throw NumericalError(os.str());
    }
  }
  return out;
}

double sideband_excess_noise(const ConversionGains& g) {
  const auto it = g.forward.find("s");
  if (it == g.forward.end() || !(it->second > 0.0)) {
    throw std::invalid_argument("sideband_excess_noise: positive G_ss required");
  }
  const double g_ss = it->second;
  double sum = 0.0;
  for (const auto& [label, v] : g.forward) {
    if (label == "s" || label == "i") continue;
    sum += v;
  }
  for (const auto& [label, v] : g.backward) sum += v;
  return 0.5 * sum / g_ss;
}

PhaseSensitiveResult phase_sensitive_gain(const ChainSpec& chain, const PumpConfig& pump,
                                          std::span<const double> phase_grid,
                                          const SimConfig& cfg, const ProbeSettings& probe) {
  const double f_base = 1.0 / cfg.record_time;
  PumpConfig pc = pump;
  pc.f_p = 2.0 * snap_frequency(0.5 * pump.f_p, f_base);
  const double fs = 0.5 * pc.f_p;

  PhaseSensitiveResult out;
  out.phase.assign(phase_grid.begin(), phase_grid.end());
  out.gain.resize(phase_grid.size());
  out.phase_preserving_gain = signal_gain(chain, pc, fs - f_base, cfg, probe);

  DriveSpec ref;
  if (pc.p_p > 0.0) ref.tones.push_back({pc.f_p, pc.p_p, 0.0, Port::input});
  ref.tones.push_back({fs, probe.probe_power, 0.0, Port::input});
  const int windows = simulate_chain(chain, ref, cfg, std::vector<double>{fs}).windows;
  const SimConfig fixed = fixed_windows(cfg, windows);
  const cplx base = pc.p_p > 0.0 ? run_probe(chain, pc, std::nullopt, fs, fixed).b2 : cplx{};

  parallel_for(phase_grid.size(), probe.threads, [&](std::size_t j) {
    const Tone t{fs, probe.probe_power, phase_grid[j], Port::input};
    const ProbeRun run = run_probe(chain, pc, t, fs, fixed);
    out.gain[j] = std::norm(run.b2 - base) / std::norm(run.a);
  });
  return out;
}

}  // namespace twpa
