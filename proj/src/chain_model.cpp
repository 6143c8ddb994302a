#include "twpa/chain_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "twpa/constants.hpp"
#include "twpa/kernels/kernels.hpp"

namespace twpa {

double CapacitancePattern::mean() const {
  double s = 0.0;
  for (int n = 0; n < period; ++n) s += at(n);
  return s / period;
}

bool CapacitancePattern::is_uniform() const {
  return std::all_of(values.begin(), values.end(),
                     [&](double v) { return v == values.front(); });
}

CapacitancePattern build_pattern(double c1, double c2, double c3, int group_len,
                                 std::span<const int> ordering) {
  if (ordering.empty()) throw std::invalid_argument("build_pattern: empty ordering");
  if (group_len < 1) throw std::invalid_argument("build_pattern: group_len must be >= 1");
  const double c[3] = {c1, c2, c3};
  CapacitancePattern p;
  p.group_len = group_len;
  for (int idx : ordering) {
    if (idx < 0 || idx > 2) throw std::invalid_argument("build_pattern: ordering index out of range");
    if (!(c[idx] > 0.0)) throw std::invalid_argument("build_pattern: capacitances must be positive");
    p.values.push_back(c[idx]);
  }
  p.period = group_len * static_cast<int>(p.values.size());
  return p;
}

CapacitancePattern uniform_pattern(double c, int group_len) {
  if (!(c > 0.0)) throw std::invalid_argument("uniform_pattern: capacitance must be positive");
  CapacitancePattern p;
  p.values = {c};
  p.group_len = group_len;
  p.period = group_len;
  return p;
}

void validate(const ChainSpec& c) {
  if (c.n_cells < 0) throw std::invalid_argument("chain: n_cells must be >= 0");
  if (!(c.z_term > 0.0)) throw std::invalid_argument("chain: z_term must be positive");
  if (!(c.loss_tangent >= 0.0)) throw std::invalid_argument("chain: loss_tangent must be >= 0");
  if (c.pattern.values.empty() ||
      c.pattern.period != c.pattern.group_len * static_cast<int>(c.pattern.values.size())) {
    throw std::invalid_argument("chain: inconsistent capacitance pattern");
  }
  validate(c.squid);
}

double chain_cell_inductance(const ChainSpec& c) {
  return cell_inductance(c.squid, c.flux.phi_dc);
}

double validity_cap_hz(double l_cell, double c_mean) {
  return 0.9 / (kPi * std::sqrt(l_cell * c_mean));
}

LadderLine ladder_from_chain(const ChainSpec& c) {
  validate(c);
  LadderLine l;
  l.n_cells = c.n_cells;
  l.l_cell = chain_cell_inductance(c);
  l.pattern = c.pattern;
  l.z_term = c.z_term;
  l.loss_tangent = c.loss_tangent;
  return l;
}

std::vector<double> S21Spectrum::s21_db() const {
  std::vector<double> out(s21.size());
  for (std::size_t i = 0; i < s21.size(); ++i) out[i] = 20.0 * std::log10(std::abs(s21[i]));
  return out;
}

namespace {

struct Abcd {
  std::vector<double> ar, ai, br, bi, cr, ci, dr, di;
  explicit Abcd(std::size_t n) : ar(n), ai(n), br(n), bi(n), cr(n), ci(n), dr(n), di(n) {}
  kernels::AbcdBatch batch() {
    return {ar.data(), ai.data(), br.data(), bi.data(),
            cr.data(), ci.data(), dr.data(), di.data()};
  }
  cplx a(std::size_t i) const { return {ar[i], ai[i]}; }
  cplx b(std::size_t i) const { return {br[i], bi[i]}; }
  cplx c(std::size_t i) const { return {cr[i], ci[i]}; }
  cplx d(std::size_t i) const { return {dr[i], di[i]}; }
};

Abcd cascade(std::span<const double> freq, double l_cell, const std::vector<double>& caps,
             double loss_tan) {
  std::vector<double> omega(freq.size());
  std::transform(freq.begin(), freq.end(), omega.begin(), [](double f) { return kTwoPi * f; });
  Abcd m(freq.size());
  kernels::table().ladder_abcd(omega.data(), omega.size(), l_cell, caps.data(), caps.size(),
                               loss_tan, m.batch());
  return m;
}

std::vector<double> cell_caps(const CapacitancePattern& p, long n) {
  std::vector<double> caps(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) caps[static_cast<std::size_t>(i)] = p.at(i);
  return caps;
}

}  // namespace

S21Spectrum s21_spectrum(const LadderLine& line, std::span<const double> freq) {
  if (line.n_cells < 0) throw std::invalid_argument("s21_spectrum: negative cell count");
  if (!(line.l_cell > 0.0)) throw std::invalid_argument("s21_spectrum: L_cell must be positive");
  S21Spectrum out;
  out.freq.assign(freq.begin(), freq.end());
  const Abcd m = cascade(freq, line.l_cell, cell_caps(line.pattern, line.n_cells),
                         line.loss_tangent);
  const double z0 = line.z_term;
  const double cap = validity_cap_hz(line.l_cell, line.pattern.mean());
  out.s21.resize(freq.size());
  out.s11.resize(freq.size());
  out.above_cap.resize(freq.size());
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const cplx a = m.a(i), b = m.b(i) / z0, c = m.c(i) * z0, d = m.d(i);
    const cplx den = a + b + c + d;
    out.s21[i] = 2.0 / den;
    out.s11[i] = (a + b - c - d) / den;
    out.above_cap[i] = freq[i] > cap;
  }
  return out;
}

S21Spectrum s21_spectrum(const ChainSpec& chain, std::span<const double> freq) {
  return s21_spectrum(ladder_from_chain(chain), freq);
}

DispersionResult bloch_dispersion(const LadderLine& line, std::span<const double> freq) {
  const auto& pat = line.pattern;
  if (pat.values.empty() || pat.period < 1 ||
      pat.period != pat.group_len * static_cast<int>(pat.values.size())) {
    throw std::invalid_argument("bloch_dispersion: pattern is not periodic");
  }
  for (std::size_t i = 1; i < freq.size(); ++i) {
    if (!(freq[i] > freq[i - 1])) {
      throw std::invalid_argument("bloch_dispersion: frequency grid must be increasing");
    }
  }
  DispersionResult out;
  out.period = pat.period;
  out.freq.assign(freq.begin(), freq.end());
  const Abcd m = cascade(freq, line.l_cell, cell_caps(pat, pat.period), line.loss_tangent);

  const double period = pat.period;
  constexpr double kEdgeTol = 1e-12;
  out.k_bloch.resize(freq.size());
  out.half_trace.resize(freq.size());
  // Re(K P) is unwrapped to be continuous and non-decreasing: in passbands it
  // takes the smallest value 2 j pi +- acos(t) not below the previous one, in
  // stopbands it is pinned to the band-edge multiple of pi.
  double prev = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const cplx t = 0.5 * (m.a(i) + m.d(i));
    out.half_trace[i] = t.real();
    const double tr = t.real();
    const double floor_val = prev - 1e-9;
    double re = 0.0;
    double im = 0.0;
    if (tr > 1.0 + kEdgeTol || tr < -1.0 - kEdgeTol) {
      const double odd = tr < 0.0 ? 1.0 : 0.0;
      // multiples (2j + odd) pi
      double j = std::ceil((floor_val / kPi - odd) / 2.0);
      if (j < 0) j = 0;
      re = (2.0 * j + odd) * kPi;
      im = std::acosh(std::abs(tr));
    } else {
      const double base = std::acos(std::clamp(tr, -1.0, 1.0));
      // candidates 2 j pi + base and 2 j pi - base
      double best = 1e300;
      const double j0 = std::floor(floor_val / kTwoPi) - 1.0;
      for (double j = std::max(0.0, j0); j <= std::max(0.0, j0) + 3.0; j += 1.0) {
        for (double cand : {kTwoPi * j + base, kTwoPi * j - base}) {
          if (cand >= floor_val && cand < best) best = cand;
        }
      }
      re = best;
    }
    if (line.loss_tangent > 0.0) {
      // Lossy lines: attenuation from the complex arccos.
      im = std::abs(std::acos(t).imag());
    }
    prev = std::max(prev, re);
    out.k_bloch[i] = cplx(re / period, im / period);
  }

  // stopbands: maximal runs with |t| > 1; edges at the interpolated |t| = 1 crossing
  auto outside = [&](std::size_t i) { return std::abs(out.half_trace[i]) > 1.0 + kEdgeTol; };
  auto crossing = [&](std::size_t i0, std::size_t i1) {
    const double t0 = std::abs(out.half_trace[i0]), t1 = std::abs(out.half_trace[i1]);
    if (t1 == t0) return freq[i1];
    const double u = (1.0 - t0) / (t1 - t0);
    return freq[i0] + std::clamp(u, 0.0, 1.0) * (freq[i1] - freq[i0]);
  };
  std::size_t i = 0;
  while (i < freq.size()) {
    if (!outside(i)) { ++i; continue; }
    std::size_t j = i;
    while (j + 1 < freq.size() && outside(j + 1)) ++j;
    Stopband sb;
    sb.f_lo = i == 0 ? freq[0] : crossing(i - 1, i);
    sb.f_hi = j + 1 < freq.size() ? crossing(j, j + 1) : freq[j];
    out.stopbands.push_back(sb);
    i = j + 1;
  }
  return out;
}

DispersionResult bloch_dispersion(const ChainSpec& chain, std::span<const double> freq) {
  return bloch_dispersion(ladder_from_chain(chain), freq);
}

cplx DispersionResult::k_at(double f) const {
  if (freq.empty() || f < freq.front() || f > freq.back()) {
    throw std::out_of_range("dispersion: frequency " + std::to_string(f) +
                            " Hz outside the computed grid");
  }
  const auto it = std::upper_bound(freq.begin(), freq.end(), f);
  if (it == freq.end()) return k_bloch.back();
  const std::size_t i1 = static_cast<std::size_t>(it - freq.begin());
  if (i1 == 0) return k_bloch.front();
  const std::size_t i0 = i1 - 1;
  const double u = (f - freq[i0]) / (freq[i1] - freq[i0]);
  return k_bloch[i0] + u * (k_bloch[i1] - k_bloch[i0]);
}

bool DispersionResult::in_stopband(double f) const {
  return std::any_of(stopbands.begin(), stopbands.end(),
                     [&](const Stopband& s) { return f >= s.f_lo && f <= s.f_hi; });
}

PhaseMismatch phase_mismatch(const DispersionResult& d, double f_p, double f_s,
                             MixingProcess process) {
  struct Term { double f; double sign; };
  std::vector<Term> terms;
  switch (process) {
    case MixingProcess::three_wave:
      if (!(f_s < f_p)) throw std::invalid_argument("phase_mismatch: 3WM requires f_s < f_p");
      terms = {{f_p, 1.0}, {f_s, -1.0}, {f_p - f_s, -1.0}};
      break;
    case MixingProcess::up_conversion:
      terms = {{f_p + f_s, 1.0}, {f_p, -1.0}, {f_s, -1.0}};
      break;
    case MixingProcess::second_harmonic:
      terms = {{2.0 * f_p, 1.0}, {f_p, -2.0}};
      break;
  }
  PhaseMismatch pm;
  for (const Term& t : terms) {
    const cplx k = d.k_at(t.f);
    pm.delta_k += t.sign * k.real();
    pm.attenuation += std::abs(k.imag());
    if (d.in_stopband(t.f)) pm.evanescent = true;
  }
  return pm;
}

double phase_matched_pump(const DispersionResult& d, double f_lo, double f_hi) {
  double best_f = f_hi;
  double best = 1e300;
  for (double f : d.freq) {
    if (f <= f_lo || f > f_hi || d.in_stopband(f) || f / 2 < d.freq.front()) continue;
    const double dk = std::abs(phase_mismatch(d, f, f / 2, MixingProcess::three_wave).delta_k);
    if (dk < best) { best = dk; best_f = f; }
  }
  return best_f;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) { v[0] = a; return v; }
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / (n - 1);
  return v;
}

}  // namespace twpa
