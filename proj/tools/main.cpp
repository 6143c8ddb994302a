// twpa: batch front-end for design, analytic gain, time-domain simulation,
// parameter fits and noise calibration. Every command writes CSV tables to
// --out plus run_manifest.json; --plot adds one SVG per table.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twpa/chain_fit.hpp"
#include "twpa/chain_model.hpp"
#include "twpa/constants.hpp"
#include "twpa/error.hpp"
#include "twpa/gain_analytics.hpp"
#include "twpa/io/config.hpp"
#include "twpa/io/csv.hpp"
#include "twpa/io/svg.hpp"
#include "twpa/noise_calibration.hpp"
#include "twpa/squid_core.hpp"
#include "twpa/timedomain_sim.hpp"

#ifndef TWPA_VERSION
#define TWPA_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using twpa::io::CsvTable;
using twpa::io::format_double;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  bool plot = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

class Emitter {
 public:
  Emitter(const Globals& g, std::string command) : g_(g), command_(std::move(command)) {
    fs::create_directories(g_.out);
  }

  void table(const std::string& name, const CsvTable& t, const std::string& title) {
    const fs::path p = fs::path(g_.out) / (name + ".csv");
    twpa::io::write_csv(p, t);
    outputs_.push_back(p.filename().string());
    if (g_.plot) {
      const fs::path s = fs::path(g_.out) / (name + ".svg");
      twpa::io::write_svg(s.string(), t, title);
      outputs_.push_back(s.filename().string());
    }
  }

  void set_config(const std::string& source, const std::string& hash) {
    config_source_ = source;
    config_hash_ = hash;
  }

  void manifest(const nlohmann::ordered_json& extra = {}) const {
    nlohmann::ordered_json m;
    m["tool"] = "twpa";
    m["version"] = TWPA_VERSION;
    m["command"] = command_;
    m["config"] = config_source_;
    m["config_hash"] = config_hash_;
    m["seed"] = g_.seed;
    m["threads"] = g_.threads;
    m["compiler"] = std::string(__VERSION__);
    m["outputs"] = outputs_;
    if (!extra.is_null()) m["results"] = extra;
    std::ofstream f(fs::path(g_.out) / "run_manifest.json", std::ios::binary);
    if (!f) throw twpa::ConfigError("cannot write run_manifest.json in " + g_.out);
    f << m.dump(2) << '\n';
  }

 private:
  const Globals& g_;
  std::string command_;
  std::string config_source_;
  std::string config_hash_;
  std::vector<std::string> outputs_;
};

twpa::io::RunConfig load_config(const Globals& g, const std::vector<std::string>& sections,
                                Emitter& em) {
  if (g.config.empty()) throw twpa::ConfigError("--config is required for this command");
  const auto ini = twpa::io::load_ini(g.config);
  auto cfg = twpa::io::build_config(ini, sections);
  em.set_config(g.config, cfg.hash);
  return cfg;
}

std::vector<double> sweep_grid(const twpa::io::SweepSection& s) {
  return twpa::linspace(s.f_start_hz, s.f_stop_hz, static_cast<std::size_t>(s.n_points));
}

std::string num(double v) { return format_double(v); }

// ---- design ----------------------------------------------------------------

void run_design(const Globals& g) {
  Emitter em(g, "design");
  const auto cfg = load_config(g, {"squid", "chain", "flux", "sweep"}, em);
  const auto freq = sweep_grid(cfg.sweep);
  const auto d = twpa::bloch_dispersion(cfg.chain, freq);
  const auto s = twpa::s21_spectrum(cfg.chain, freq);

  CsvTable disp{{"freq_hz", "k_re_rad_per_cell", "k_im_per_cell", "half_trace"}, {}};
  for (std::size_t i = 0; i < freq.size(); ++i) {
    disp.add_row({num(freq[i]), num(d.k_bloch[i].real()), num(d.k_bloch[i].imag()),
                  num(d.half_trace[i])});
  }
  em.table("dispersion", disp, "Bloch wavenumber");

  CsvTable sb{{"index", "f_lo_hz", "f_hi_hz", "center_hz", "width_hz"}, {}};
  for (std::size_t i = 0; i < d.stopbands.size(); ++i) {
    const auto& b = d.stopbands[i];
    sb.add_row({std::to_string(i + 1), num(b.f_lo), num(b.f_hi), num(b.center()), num(b.width())});
    std::printf("stopband %zu: %.4f - %.4f GHz\n", i + 1, b.f_lo * 1e-9, b.f_hi * 1e-9);
  }
  em.table("stopbands", sb, "Stopbands");

  CsvTable t{{"freq_hz", "s21_db", "s21_phase_rad", "s11_db"}, {}};
  for (std::size_t i = 0; i < freq.size(); ++i) {
    t.add_row({num(freq[i]), num(20.0 * std::log10(std::abs(s.s21[i]))), num(std::arg(s.s21[i])),
               num(20.0 * std::log10(std::abs(s.s11[i])))});
  }
  em.table("s21", t, "Transmission");

  nlohmann::ordered_json r;
  r["l_cell_h"] = twpa::chain_cell_inductance(cfg.chain);
  r["stopbands"] = d.stopbands.size();
  em.manifest(r);
}

// ---- gain ------------------------------------------------------------------

void run_gain(const Globals& g) {
  Emitter em(g, "gain");
  const auto cfg = load_config(g, {"squid", "chain", "flux", "pump", "sweep"}, em);
  const double fp = cfg.pump.fp_hz;
  const double n = static_cast<double>(cfg.chain.n_cells);

  const double l_sq = twpa::squid_inductance(cfg.squid, cfg.chain.flux.phi_dc);
  const auto coeffs = twpa::nonlinear_coeffs(cfg.squid, cfg.chain.flux.phi_dc);
  const double kp = twpa::line_parameters(twpa::chain_cell_inductance(cfg.chain),
                                          cfg.chain.pattern.mean(), fp, l_sq)
                        .k_lin_per_cell;

  // Band-centre exponent: imposed through pump.g0_db, otherwise from the circuit.
  double gn0 = 0.0;
  if (cfg.pump.g0_db) {
    if (!(*cfg.pump.g0_db > 0.0)) throw twpa::ConfigError("pump.g0_db must be positive");
    gn0 = std::acosh(std::sqrt(twpa::db_to_ratio(*cfg.pump.g0_db)));
  } else {
    const double phi_p =
        twpa::pump_phase_amplitude(twpa::dbm_to_watt(cfg.pump.pp_dbm), cfg.chain.z_term, l_sq);
    gn0 = twpa::gain_coefficient(coeffs.beta, kp, phi_p, 0.5 * fp, fp) * n;
  }

  CsvTable t{{"freq_hz", "gain_db", "p1db_dbm"}, {}};
  for (double f : sweep_grid(cfg.sweep)) {
    if (!(f < fp)) continue;
    const double delta = std::abs(f - 0.5 * fp) / (0.5 * fp);
    const double gain = twpa::gain_from_coefficient(gn0 / n * std::sqrt(1.0 - delta * delta), n);
    const double gdb = twpa::ratio_to_db(gain);
    const std::string p1 =
        gdb > 0.0 ? num(twpa::compression_point(cfg.pump.pp_dbm, gdb).p1db_dbm) : std::string();
    t.add_row({num(f), num(gdb), p1});
  }
  em.table("gain", t, "Small-signal gain");

  const double g0 = twpa::ratio_to_db(std::pow(std::cosh(gn0), 2));
  std::printf("G0 = %.3f dB at %.4f GHz, P1dB = %.3f dBm\n", g0, 0.5 * fp * 1e-9,
              twpa::compression_point(cfg.pump.pp_dbm, g0).p1db_dbm);
  nlohmann::ordered_json r;
  r["g0_db"] = g0;
  r["gn"] = gn0;
  r["k_p_rad_per_cell"] = kp;
  r["beta"] = coeffs.beta;
  em.manifest(r);
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
  int phase_points = 24;
  bool waveforms = false;
};

void run_simulate(const Globals& g, const SimulateOptions& o) {
  Emitter em(g, "simulate");
  auto cfg = load_config(g, {"squid", "chain", "flux", "pump", "sim"}, em);
  twpa::ChainSpec chain = cfg.chain;
  if (cfg.sim.n_cells_override > 0) chain.n_cells = cfg.sim.n_cells_override;

  twpa::SimConfig sc;
  sc.tol = cfg.sim.tol;
  sc.settle_time = cfg.sim.settle_s;
  sc.record_time = cfg.sim.record_s;
  sc.ramp_time = cfg.sim.ramp_s;
  sc.seed = g.seed;
  twpa::PumpConfig pump;
  pump.f_p = cfg.pump.fp_hz;
  pump.p_p = twpa::dbm_to_watt(cfg.pump.pp_dbm);
  twpa::ProbeSettings probe;
  probe.probe_power = twpa::dbm_to_watt(cfg.sim.probe_dbm);
  probe.threads = g.threads;

  const double f_base = 1.0 / sc.record_time;
  const double f_s = cfg.sim.fs_hz > 0.0
                         ? twpa::snap_frequency(cfg.sim.fs_hz, f_base)
                         : twpa::snap_frequency(0.5 * pump.f_p, f_base) - f_base;

  const auto cg = twpa::conversion_gains(chain, pump, f_s, cfg.sim.orders, sc, probe);
  const double gss = cg.g_ss();
  CsvTable t{{"freq_hz", "quantity", "value"}, {}};
  double worst_margin = INFINITY;
  for (const auto& [label, v] : cg.forward) {
    t.add_row({num(cg.freq.at(label)), "forward_" + label + "_db", num(twpa::ratio_to_db(v))});
    if (label != "s" && label != "i") worst_margin = std::min(worst_margin, twpa::ratio_to_db(gss / v));
  }
  for (const auto& [label, v] : cg.backward) {
    t.add_row({num(cg.freq.at(label)), "backward_" + label + "_db", num(twpa::ratio_to_db(v))});
    worst_margin = std::min(worst_margin, twpa::ratio_to_db(gss / v));
  }
  const double n_exc = twpa::sideband_excess_noise(cg);
  t.add_row({num(f_s), "sideband_excess_noise", num(n_exc)});
  em.table("conversion_gains", t, "Conversion gains");
  std::printf("G_ss = %.3f dB at %.4f GHz; worst sideband margin %.2f dB; N_exc,sb = %.4g\n",
              twpa::ratio_to_db(gss), f_s * 1e-9, worst_margin, n_exc);

  nlohmann::ordered_json r;
  r["n_cells"] = chain.n_cells;
  r["f_s_hz"] = f_s;
  r["g_ss_db"] = twpa::ratio_to_db(gss);
  r["worst_sideband_margin_db"] = worst_margin;
  r["sideband_excess_noise"] = n_exc;

  if (o.phase_points > 0) {
    std::vector<double> phases;
    for (int i = 0; i < o.phase_points; ++i) phases.push_back(twpa::kTwoPi * i / o.phase_points);
    const auto ps = twpa::phase_sensitive_gain(chain, pump, phases, sc, probe);
    CsvTable p{{"phase_rad", "gain_db"}, {}};
    double gmax = 0.0;
    for (std::size_t i = 0; i < ps.phase.size(); ++i) {
      p.add_row({num(ps.phase[i]), num(twpa::ratio_to_db(ps.gain[i]))});
      gmax = std::max(gmax, ps.gain[i]);
    }
    em.table("phase_sensitive", p, "Degenerate gain versus signal phase");
    r["phase_sensitive_max_db"] = twpa::ratio_to_db(gmax);
    r["phase_preserving_db"] = twpa::ratio_to_db(ps.phase_preserving_gain);
    std::printf("phase-sensitive max %.3f dB, phase-preserving %.3f dB\n",
                twpa::ratio_to_db(gmax), twpa::ratio_to_db(ps.phase_preserving_gain));
  }

  if (o.waveforms) {
    twpa::DriveSpec drive;
    drive.tones.push_back({pump.f_p, pump.p_p, 0.0, twpa::Port::input});
    drive.tones.push_back({f_s, probe.probe_power, 0.0, twpa::Port::input});
    sc.keep_waveforms = true;
    const double f_ext[] = {f_s};
    const auto rec = twpa::simulate_chain(chain, drive, sc, f_ext);
    const std::size_t steps = rec.n_nodes ? rec.node_v.size() / rec.n_nodes : 0;
    CsvTable w{{"t_s", "node_index", "v_volts"}, {}};
    for (std::size_t k = 0; k < steps; ++k) {
      for (std::size_t j = 0; j < rec.n_nodes; ++j) {
        w.add_row({num(static_cast<double>(k) * rec.dt), std::to_string(j),
                   num(rec.node_v[k * rec.n_nodes + j])});
      }
    }
    // Too dense to plot usefully; CSV only.
    const Globals no_plot{g.config, g.out, false, g.seed, g.threads};
    Emitter(no_plot, "simulate").table("waveforms", w, "");
  }
  em.manifest(r);
}

// ---- fit-s21 ---------------------------------------------------------------

void run_fit_s21(const Globals& g, const std::string& data) {
  Emitter em(g, "fit-s21");
  const auto cfg = load_config(g, {"squid", "chain", "flux"}, em);
  const CsvTable in = twpa::io::read_csv(data);
  const auto f = in.numbers("freq_hz");
  const auto db = in.numbers("s21_db");
  const auto ph = in.numbers("s21_phase_rad");
  const bool has_flux = in.has_column("flux_phi0");
  const bool has_power = in.has_column("power_dbm");
  const auto flux = has_flux ? in.numbers("flux_phi0") : std::vector<double>(f.size(), 0.0);
  const auto power = has_power ? in.numbers("power_dbm") : std::vector<double>(f.size(), 0.0);

  // One spectrum per (flux, power) pair, in order of first appearance.
  std::vector<twpa::S21Spectrum> spectra;
  std::map<std::pair<double, double>, std::size_t> index;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto key = std::make_pair(flux[i], power[i]);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, spectra.size()).first;
      spectra.emplace_back();
      if (has_flux) spectra.back().flux_phi0 = flux[i];
      if (has_power) spectra.back().power_dbm = power[i];
    }
    auto& s = spectra[it->second];
    s.freq.push_back(f[i]);
    s.s21.push_back(std::polar(std::pow(10.0, db[i] / 20.0), ph[i]));
  }

  const auto fits = twpa::fit_cell_inductance(spectra, cfg.chain);
  CsvTable t{{"flux_phi0", "power_dbm", "l_cell_h", "residual_db", "iterations", "converged"}, {}};
  std::size_t ok = 0;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& r = fits[i];
    t.add_row({has_flux ? num(*spectra[i].flux_phi0) : "", has_power ? num(*spectra[i].power_dbm) : "",
               num(r.l_cell), num(r.residual), std::to_string(r.iterations),
               r.converged ? "1" : "0"});
    if (r.converged) ++ok;
    else std::fprintf(stderr, "spectrum %zu: %s\n", i + 1, r.error.c_str());
  }
  em.table("lcell_fit", t, "Fitted cell inductance");
  nlohmann::ordered_json r;
  r["spectra"] = fits.size();
  r["converged"] = ok;
  em.manifest(r);
  if (ok == 0) throw twpa::FitError("fit-s21: no spectrum converged (" + data + ")");
}

// ---- fit-flux --------------------------------------------------------------

void run_fit_flux(const Globals& g, const std::string& data, std::optional<double> lm) {
  Emitter em(g, "fit-flux");
  const CsvTable in = twpa::io::read_csv(data);
  twpa::FluxModelData d;
  if (in.has_column("bias_a")) {
    d.abscissa = twpa::FluxAbscissa::bias_current;
    d.x = in.numbers("bias_a");
  } else if (in.has_column("flux_phi0")) {
    d.abscissa = twpa::FluxAbscissa::flux_phi0;
    d.x = in.numbers("flux_phi0");
    if (!lm && !g.config.empty()) lm = load_config(g, {"squid"}, em).squid.lm;
    if (!lm) throw twpa::ConfigError(data + ": flux_phi0 abscissa needs --lm or squid.lm_h");
    d.lm_nominal = *lm;
  } else {
    throw twpa::ConfigError(data + ": needs a bias_a or flux_phi0 column");
  }
  d.l_cell = in.numbers("l_cell_h");

  const auto fit = twpa::fit_flux_model(d);
  CsvTable p{{"parameter", "value", "sigma"}, {}};
  const char* names[] = {"ic_a", "lm_h", "lw_h", "lpar_h"};
  const double vals[] = {fit.ic, fit.lm, fit.lw, fit.lpar};
  for (int i = 0; i < 4; ++i) p.add_row({names[i], num(vals[i]), num(fit.sigma(i))});
  em.table("flux_fit", p, "Flux-model parameters");

  const auto model = twpa::flux_model_curve(fit, d.abscissa, d.x);
  CsvTable c = twpa::io::numeric_table(
      {d.abscissa == twpa::FluxAbscissa::bias_current ? "bias_a" : "flux_phi0", "l_cell_h", "model_h"},
      {d.x, d.l_cell, model});
  em.table("flux_fit_curve", c, "Cell inductance versus flux");
  std::printf("Ic = %.4g A, Lm = %.4g H, Lw = %.4g H, Lp+Lj0L = %.4g H (rms %.3g H)\n", fit.ic,
              fit.lm, fit.lw, fit.lpar, fit.rms_residual);
  nlohmann::ordered_json r;
  r["rms_residual_h"] = fit.rms_residual;
  r["iterations"] = fit.iterations;
  em.manifest(r);
}

// ---- fit-noise -------------------------------------------------------------

struct NoiseOptions {
  std::string data;
  std::string mode = "two-mode";
  std::optional<double> fp;
  double gain_ratio_db = 0.0;
  double eta1 = 1.0;
  std::optional<double> n2;
  std::optional<double> gss_db;
};

twpa::NoiseSweep read_noise(const std::string& path) {
  const CsvTable in = twpa::io::read_csv(path);
  const auto f = in.numbers("freq_hz");
  const auto t = in.numbers("temp_k");
  const auto p = in.numbers("pout_dbm");
  const auto b = in.numbers("rbw_hz");
  twpa::NoiseSweep s;
  for (std::size_t i = 0; i < f.size(); ++i) s.push_back({f[i], t[i], p[i], b[i]});
  return s;
}

void run_fit_noise(const Globals& g, NoiseOptions o) {
  Emitter em(g, "fit-noise");
  const auto sweep = read_noise(o.data);
  nlohmann::ordered_json r;
  if (o.mode == "single-mode") {
    const auto fits = twpa::fit_single_mode(sweep, o.eta1);
    CsvTable t{{"freq_hz", "g2_db", "n2", "residual"}, {}};
    for (const auto& f : fits) t.add_row({num(f.f), num(f.g2_db), num(f.n2), num(f.residual)});
    em.table("noise_fit", t, "Single-mode noise fit");
    r["frequencies"] = fits.size();
  } else if (o.mode == "two-mode") {
    if (!o.fp && !g.config.empty()) o.fp = load_config(g, {"pump"}, em).pump.fp_hz;
    if (!o.fp) throw twpa::ConfigError("two-mode fit needs --fp or pump.fp_hz");
    const auto fits = twpa::fit_two_mode(sweep, *o.fp, o.gain_ratio_db);
    CsvTable t{{"freq_hz", "g_sys_db", "n_sys_exc", "residual", "nonphysical", "g_sys_db_lo",
                "g_sys_db_hi", "n_sys_exc_lo", "n_sys_exc_hi"},
               {}};
    for (const auto& f : fits) {
      t.add_row({num(f.f), num(f.g_sys_db), num(f.n_sys_exc), num(f.residual),
                 f.nonphysical ? "1" : "0", num(f.g_sys_db_range.lo), num(f.g_sys_db_range.hi),
                 num(f.n_sys_exc_range.lo), num(f.n_sys_exc_range.hi)});
      if (f.nonphysical) std::fprintf(stderr, "%.6g Hz: negative excess noise\n", f.f);
    }
    em.table("noise_fit", t, "Two-mode noise fit");
    r["frequencies"] = fits.size();

    // Decomposition of the fitted system noise 1 + N_sys,exc: the TWPA share is
    // what remains after the input-loss and post-amplifier terms.
    if (o.n2 && o.gss_db) {
      CsvTable b{{"freq_hz", "quantum_limit", "pre_twpa", "twpa_excess", "post_twpa", "total"}, {}};
      for (const auto& f : fits) {
        const auto base = twpa::system_noise_breakdown(o.eta1, 0.0, *o.n2, *o.gss_db);
        const double nt_exc = std::max(0.0, o.eta1 * (f.n_sys_exc - base.pre_twpa - base.post_twpa));
        const auto x = twpa::system_noise_breakdown(o.eta1, nt_exc, *o.n2, *o.gss_db);
        b.add_row({num(f.f), num(x.quantum_limit), num(x.pre_twpa), num(x.twpa_excess),
                   num(x.post_twpa), num(x.total)});
      }
      em.table("breakdown", b, "System noise breakdown");
    }
  } else {
    throw twpa::ConfigError("--mode must be two-mode or single-mode, got " + o.mode);
  }
  em.manifest(r);
}

// ---- calibrate -------------------------------------------------------------

void run_calibrate(const Globals& g, const std::string& g2_path, const std::string& s21_path) {
  Emitter em(g, "calibrate");
  const CsvTable a = twpa::io::read_csv(g2_path);
  const CsvTable b = twpa::io::read_csv(s21_path);
  const auto fa = a.numbers("freq_hz");
  const auto fb = b.numbers("freq_hz");
  if (fa.size() != fb.size()) {
    throw twpa::ConfigError(g2_path + " and " + s21_path + " have different row counts");
  }
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (std::abs(fa[i] - fb[i]) > 1e-9 * std::abs(fa[i])) {
      throw twpa::ConfigError(s21_path + " row " + std::to_string(i + 1) +
                              ": frequency differs from " + g2_path);
    }
  }
  const auto il = twpa::insertion_loss_calibration(a.numbers("g2_db"), b.numbers("s21_db"));
  em.table("insertion_loss", twpa::io::numeric_table({"freq_hz", "il_db"}, {fa, il}),
           "Input-line insertion loss");
  em.manifest();
}

// ---- snr -------------------------------------------------------------------

struct SnrOptions {
  double n_in = 0.5, eta_t = 1.0, n2 = 10.0, nt = 0.5;
  double gss_start = 0.0, gss_stop = 30.0, gss_step = 1.0;
};

void run_snr(const Globals& g, const SnrOptions& o) {
  Emitter em(g, "snr");
  if (!(o.gss_step > 0.0) || o.gss_stop < o.gss_start) {
    throw twpa::ConfigError("snr: need --gss-step > 0 and --gss-stop >= --gss-start");
  }
  CsvTable t{{"g_ss_db", "delta_snr", "delta_snr_db"}, {}};
  const int n = static_cast<int>(std::floor((o.gss_stop - o.gss_start) / o.gss_step + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) {
    const double gdb = o.gss_start + i * o.gss_step;
    const double d = twpa::delta_snr(o.n_in, o.eta_t, o.n2, o.nt, gdb);
    t.add_row({num(gdb), num(d), num(twpa::ratio_to_db(d))});
  }
  em.table("snr", t, "SNR improvement");
  em.manifest();
}

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const twpa::ConfigError& x) {
    std::fprintf(stderr, "config error: %s\n", x.what());
    return 2;
  } catch (const twpa::FitError& x) {
    std::fprintf(stderr, "fit error: %s\n", x.what());
    return 3;
  } catch (const twpa::NumericalError& x) {
    std::fprintf(stderr, "numerical error: %s\n", x.what());
    return 4;
  } catch (const std::invalid_argument& x) {
    std::fprintf(stderr, "invalid input: %s\n", x.what());
    return 2;
  } catch (const std::domain_error& x) {
    std::fprintf(stderr, "invalid input: %s\n", x.what());
    return 2;
  } catch (const std::out_of_range& x) {
    std::fprintf(stderr, "invalid input: %s\n", x.what());
    return 2;
  } catch (const fs::filesystem_error& x) {
    std::fprintf(stderr, "file error: %s\n", x.what());
    return 2;
  } catch (const std::exception& x) {
    std::fprintf(stderr, "error: %s\n", x.what());
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twpa " TWPA_VERSION " - rf-SQUID traveling-wave parametric amplifier toolkit"};
  app.footer("\n" + twpa::io::schema_help());
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config, "INI configuration file, or 'paper_defaults'");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_flag("--plot", g.plot, "also write one SVG chart per CSV");
  app.add_option("--seed", g.seed, "random seed (recorded; the engines are deterministic)");
  app.add_option("--threads", g.threads, "worker threads for parallel sweeps")
      ->check(CLI::PositiveNumber);

  std::function<void()> action;

  auto* design = app.add_subcommand("design", "dispersion, stopbands and linear transmission");
  design->callback([&] { action = [&] { run_design(g); }; });

  auto* gain = app.add_subcommand("gain", "analytic gain profile and 1-dB compression point");
  gain->callback([&] { action = [&] { run_gain(g); }; });

  SimulateOptions so;
  auto* sim = app.add_subcommand("simulate", "time-domain chain: conversion gains, sideband noise, phase scan");
  sim->add_option("--phase-points", so.phase_points, "phase-sensitive scan points (0 skips)")
      ->capture_default_str();
  sim->add_flag("--waveforms", so.waveforms, "dump the last window of node voltages");
  sim->callback([&] { action = [&] { run_simulate(g, so); }; });

  std::string s21_data;
  auto* fs21 = app.add_subcommand("fit-s21", "cell inductance from |S21| spectra");
  fs21->add_option("--data", s21_data, "CSV freq_hz,s21_db,s21_phase_rad[,flux_phi0][,power_dbm]")
      ->required();
  fs21->callback([&] { action = [&] { run_fit_s21(g, s21_data); }; });

  std::string flux_data;
  std::optional<double> lm;
  auto* fflux = app.add_subcommand("fit-flux", "rf-SQUID parameters from L_cell versus flux");
  fflux->add_option("--data", flux_data, "CSV (bias_a | flux_phi0),l_cell_h")->required();
  fflux->add_option("--lm", lm, "nominal Lm [H] for a flux_phi0 abscissa");
  fflux->callback([&] { action = [&] { run_fit_flux(g, flux_data, lm); }; });

  NoiseOptions no;
  auto* fnoise = app.add_subcommand("fit-noise", "Y-factor noise fits");
  fnoise->add_option("--data", no.data, "CSV freq_hz,temp_k,pout_dbm,rbw_hz")->required();
  fnoise->add_option("--mode", no.mode, "two-mode | single-mode")->capture_default_str();
  fnoise->add_option("--fp", no.fp, "pump frequency [Hz] (two-mode; default pump.fp_hz)");
  fnoise->add_option("--gain-ratio-db", no.gain_ratio_db, "idler/signal gain ratio [dB]");
  fnoise->add_option("--eta1", no.eta1, "input-line transmission")->capture_default_str();
  fnoise->add_option("--n2", no.n2, "post-amplifier noise [photons] (breakdown)");
  fnoise->add_option("--gss-db", no.gss_db, "TWPA signal gain [dB] (breakdown)");
  fnoise->callback([&] { action = [&] { run_fit_noise(g, no); }; });

  std::string g2_path, rt_path;
  auto* cal = app.add_subcommand("calibrate", "input-line insertion loss");
  cal->add_option("--g2", g2_path, "CSV freq_hz,g2_db")->required();
  cal->add_option("--s21", rt_path, "CSV freq_hz,s21_db (round trip)")->required();
  cal->callback([&] { action = [&] { run_calibrate(g, g2_path, rt_path); }; });

  SnrOptions sn;
  auto* snr = app.add_subcommand("snr", "SNR improvement versus TWPA gain");
  snr->add_option("--n-in", sn.n_in, "input noise [photons]")->capture_default_str();
  snr->add_option("--eta-t", sn.eta_t, "TWPA transmission when off")->capture_default_str();
  snr->add_option("--n2", sn.n2, "post-amplifier noise [photons]")->capture_default_str();
  snr->add_option("--nt", sn.nt, "TWPA noise [photons]")->capture_default_str();
  snr->add_option("--gss-start", sn.gss_start, "first gain [dB]")->capture_default_str();
  snr->add_option("--gss-stop", sn.gss_stop, "last gain [dB]")->capture_default_str();
  snr->add_option("--gss-step", sn.gss_step, "gain step [dB]")->capture_default_str();
  snr->callback([&] { action = [&] { run_snr(g, sn); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    action();
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return 0;
}
