#include "twpa/chain_fit.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "twpa/constants.hpp"
#include "twpa/error.hpp"

namespace twpa {

namespace {

// ---- cell inductance from |S21| ------------------------------------------

std::vector<double> clipped_db(const S21Spectrum& s, double floor_db) {
  std::vector<double> db = s.s21_db();
  for (double& v : db) v = std::max(v, floor_db);
  return db;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

// Centre of the contiguous region around the deepest point that lies more than
// half the dip depth below the median. Returns nullopt without a clear dip.
std::optional<double> dip_center(std::span<const double> f, std::span<const double> db,
                                 double min_depth) {
  if (f.size() < 3) return std::nullopt;
  const double med = median({db.begin(), db.end()});
  const auto it = std::min_element(db.begin(), db.end());
  if (med - *it < min_depth) return std::nullopt;
  const double thr = 0.5 * (med + *it);
  std::size_t lo = static_cast<std::size_t>(it - db.begin()), hi = lo;
  while (lo > 0 && db[lo - 1] < thr) --lo;
  while (hi + 1 < db.size() && db[hi + 1] < thr) ++hi;
  return 0.5 * (f[lo] + f[hi]);
}

// Least-squares residual after removing a quadratic background in frequency.
class BackgroundResidual {
 public:
  explicit BackgroundResidual(std::span<const double> f) : n_(f.size()) {
    const double a = f.front(), b = f.back();
    const double mid = 0.5 * (a + b), half = std::max(0.5 * (b - a), 1.0);
    Eigen::MatrixXd v(n_, 3);
    for (std::size_t i = 0; i < n_; ++i) {
      const double x = (f[i] - mid) / half;
      v(i, 0) = 1.0;
      v(i, 1) = x;
      v(i, 2) = x * x;
    }
    qr_.compute(v);
    basis_ = v;
  }

  double rms(const Eigen::VectorXd& r) const {
    const Eigen::VectorXd c = qr_.solve(r);
    return std::sqrt((r - basis_ * c).squaredNorm() / static_cast<double>(n_));
  }

 private:
  std::size_t n_;
  Eigen::MatrixXd basis_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

// Derivative-free simplex minimisation in one variable.
struct SimplexResult {
  double x = 0.0, fx = 0.0;
  int iterations = 0;
  bool converged = false;
};

template <class F>
SimplexResult simplex_1d(F&& cost, double x0, double step, int max_it, double tol) {
  double xa = x0, xb = x0 + step;
  double fa = cost(xa), fb = cost(xb);
  SimplexResult r;
  for (int it = 0; it < max_it; ++it) {
    if (fb < fa) { std::swap(xa, xb); std::swap(fa, fb); }  // xa best
    r.iterations = it + 1;
    if (std::abs(xb - xa) <= tol * std::abs(xa)) { r.converged = true; break; }
    const double xr = xa + (xa - xb);
    const double fr = cost(xr);
    if (fr < fa) {
      const double xe = xa + 2.0 * (xa - xb);
      const double fe = cost(xe);
      if (fe < fr) { xb = xe; fb = fe; } else { xb = xr; fb = fr; }
    } else if (fr < fb) {
      xb = xr; fb = fr;
    } else {
      const double xc = xa + 0.5 * (xb - xa);
      const double fc = cost(xc);
      if (fc < fb) { xb = xc; fb = fc; }
      else { xb = xa + 0.5 * (xb - xa); fb = cost(xb); }
    }
  }
  if (fb < fa) { std::swap(xa, xb); std::swap(fa, fb); }
  r.x = xa;
  r.fx = fa;
  return r;
}

double first_stopband_center(const LadderLine& line) {
  const double cap = validity_cap_hz(line.l_cell, line.pattern.mean());
  const auto grid = linspace(cap * 1e-3, cap, 6000);
  const DispersionResult d = bloch_dispersion(line, grid);
  if (d.stopbands.empty()) return 0.0;
  return d.stopbands.front().center();
}

CellInductanceFit fit_one(const S21Spectrum& s, const LadderLine& tmpl,
                          const CellFitOptions& opt) {
  CellInductanceFit out;
  out.flux_phi0 = s.flux_phi0;
  // only points the model is valid for
  std::vector<double> f, data;
  const std::vector<double> db = clipped_db(s, opt.floor_db);
  const double cap = validity_cap_hz(tmpl.l_cell, tmpl.pattern.mean());
  for (std::size_t i = 0; i < s.freq.size(); ++i) {
    if (s.freq[i] <= cap) {
      f.push_back(s.freq[i]);
      data.push_back(db[i]);
    }
  }
  const auto fd = dip_center(f, data, opt.dip_depth_db);
  if (!fd) {
    out.error = "no stopband dip in the frequency window; L_cell is not identifiable";
    return out;
  }
  const double ft = first_stopband_center(tmpl);
  if (!(ft > 0.0)) {
    out.error = "template chain has no stopband below its validity cap";
    return out;
  }
  // all frequencies of a fixed capacitance pattern scale as 1/sqrt(L)
  const double l0 = tmpl.l_cell * (ft / *fd) * (ft / *fd);

  const BackgroundResidual bg(f);
  const Eigen::Map<const Eigen::VectorXd> dv(data.data(), static_cast<Eigen::Index>(data.size()));
  auto cost = [&](double x) {
    if (!(x > 0.0)) return 1e300;
    LadderLine line = tmpl;
    line.l_cell = l0 * x;
    const S21Spectrum m = s21_spectrum(line, f);
    Eigen::VectorXd r(dv.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double mdb = std::max(20.0 * std::log10(std::abs(m.s21[static_cast<std::size_t>(i)])),
                                  opt.floor_db);
      r(i) = dv(i) - mdb;
    }
    return bg.rms(r);
  };
  const SimplexResult r = simplex_1d(cost, 1.0, 0.02, opt.max_iterations, opt.rel_step_tol);
  out.iterations = r.iterations;
  out.l_cell = l0 * r.x;
  out.residual = r.fx;
  out.converged = r.converged;
  if (!r.converged) {
    out.error = "simplex did not converge within " + std::to_string(opt.max_iterations) +
                " iterations";
  }
  return out;
}

// ---- flux model ------------------------------------------------------------

// Scaled parameter vector: Ic [uA], Lm, Lw, Lpar [pH].
constexpr double kIcScale = 1e-6;
constexpr double kLScale = 1e-12;

struct Params {
  double ic, lm, lw, lpar;
};

double model_point(const Params& p, FluxAbscissa ab, double x) {
  const double lm = std::abs(p.lm), lpar = std::abs(p.lpar);
  const double phi_ext = ab == FluxAbscissa::bias_current ? lm * x / kReducedFluxQuantum
                                                          : kTwoPi * x;
  const double beta_l = std::min(std::abs(p.ic) * (lm + lpar) / kReducedFluxQuantum, 0.995);
  const double alpha = lm + lpar > 0.0 ? lpar / (lm + lpar) : 0.0;
  const double c = std::cos(solve_phi_dc(phi_ext, beta_l));
  return p.lw + lm * (1.0 + alpha * beta_l * c) / (1.0 + beta_l * c);
}

struct FluxFunctor : Eigen::DenseFunctor<double> {
  const FluxModelData* data;
  bool lm_free;

  FluxFunctor(const FluxModelData& d, bool free_lm)
      : Eigen::DenseFunctor<double>(free_lm ? 4 : 3, static_cast<int>(d.x.size())),
        data(&d), lm_free(free_lm) {}

  Params unpack(const InputType& v) const {
    Params p{};
    p.ic = v(0) * kIcScale;
    int k = 1;
    p.lm = lm_free ? v(k++) * kLScale : data->lm_nominal;
    p.lw = v(k++) * kLScale;
    p.lpar = v(k) * kLScale;
    return p;
  }

  int operator()(const InputType& v, ValueType& r) const {
    const Params p = unpack(v);
    for (std::size_t i = 0; i < data->x.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) =
          (model_point(p, data->abscissa, data->x[i]) - data->l_cell[i]) / kLScale;
    }
    return 0;
  }
};

// Linear least squares of L = A + B / (1 + bL cos phi_dc) for fixed bL and Lm.
struct LinearSeed {
  double a = 0.0, b = 0.0, beta_l = 0.0, lm = 0.0, sse = 1e300;
};

LinearSeed linear_seed(const FluxModelData& d, double lm, double beta_l) {
  const auto n = static_cast<Eigen::Index>(d.x.size());
  Eigen::MatrixXd m(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = d.x[static_cast<std::size_t>(i)];
    const double phi_ext = d.abscissa == FluxAbscissa::bias_current
                               ? lm * x / kReducedFluxQuantum : kTwoPi * x;
    m(i, 0) = 1.0;
    m(i, 1) = 1.0 / (1.0 + beta_l * std::cos(solve_phi_dc(phi_ext, beta_l)));
    y(i) = d.l_cell[static_cast<std::size_t>(i)] / kLScale;
  }
  const Eigen::Vector2d c = m.colPivHouseholderQr().solve(y);
  LinearSeed s;
  s.a = c(0) * kLScale;
  s.b = c(1) * kLScale;
  s.beta_l = beta_l;
  s.lm = lm;
  s.sse = (m * c - y).squaredNorm();
  return s;
}

}  // namespace

std::vector<CellInductanceFit> fit_cell_inductance(std::span<const S21Spectrum> spectra,
                                                   const ChainSpec& chain,
                                                   const CellFitOptions& opt) {
  if (spectra.empty()) throw std::invalid_argument("fit_cell_inductance: no spectra");
  const LadderLine tmpl = ladder_from_chain(chain);
  std::vector<CellInductanceFit> out;
  out.reserve(spectra.size());
  for (const S21Spectrum& s : spectra) out.push_back(fit_one(s, tmpl, opt));
  return out;
}

double FluxModelFit::sigma(int i) const {
  return std::sqrt(std::max(0.0, covariance.at(static_cast<std::size_t>(i * 4 + i))));
}

std::vector<double> flux_model_curve(const FluxModelFit& f, FluxAbscissa abscissa,
                                     std::span<const double> x) {
  const Params p{f.ic, f.lm, f.lw, f.lpar};
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = model_point(p, abscissa, x[i]);
  return out;
}

FluxModelFit fit_flux_model(const FluxModelData& d, const FluxFitOptions& opt) {
  if (d.x.size() != d.l_cell.size()) {
    throw std::invalid_argument("fit_flux_model: abscissa and L_cell lengths differ");
  }
  if (d.x.size() < 8) throw std::invalid_argument("fit_flux_model: need at least 8 points");
  const bool lm_free = d.abscissa == FluxAbscissa::bias_current;
  const auto [xmin, xmax] = std::minmax_element(d.x.begin(), d.x.end());
  if (!lm_free) {
    if (!(d.lm_nominal > 0.0)) {
      throw std::invalid_argument("fit_flux_model: flux abscissa requires a nominal Lm");
    }
    if (*xmax - *xmin < 0.5) {
      throw std::invalid_argument("fit_flux_model: flux points must span half a flux quantum");
    }
  }
  const auto [lmin, lmax] = std::minmax_element(d.l_cell.begin(), d.l_cell.end());
  const double lmean = 0.5 * (*lmin + *lmax);
  if (!(*lmax - *lmin > 1e-6 * lmean)) {
    throw FitError("fit_flux_model: L_cell shows no flux modulation");
  }

  // Seed: grid over (Lm, beta_L) with the linear parameters solved exactly.
  std::vector<double> lm_grid;
  if (lm_free) {
    // flux period in current Phi0/Lm between span/20 and 4 spans
    const double span = *xmax - *xmin;
    for (int i = 0; i < 400; ++i) {
      const double period = span / 20.0 * std::pow(80.0, i / 399.0);
      lm_grid.push_back(kFluxQuantum / period);
    }
  } else {
    lm_grid.push_back(d.lm_nominal);
  }
  LinearSeed best;
  for (double lm : lm_grid) {
    for (int j = 1; j <= 48; ++j) {
      const LinearSeed s = linear_seed(d, lm, 0.98 * j / 48.0);
      if (s.sse < best.sse && s.b > 0.0) best = s;
    }
  }
  if (!(best.sse < 1e300)) throw FitError("fit_flux_model: no admissible starting point");
  // B = Lm^2 / (Lm + Lpar), A = Lw + Lm alpha_p
  const double lm0 = best.lm;
  const double lpar0 = std::max(lm0 * lm0 / best.b - lm0, 0.01 * lm0);
  const double alpha0 = lpar0 / (lm0 + lpar0);
  const double lw0 = std::max(best.a - lm0 * alpha0, 0.01 * lm0);
  const double ic0 = best.beta_l * kReducedFluxQuantum / (lm0 + lpar0);

  FluxFunctor functor(d, lm_free);
  Eigen::NumericalDiff<FluxFunctor, Eigen::Central> numdiff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<FluxFunctor, Eigen::Central>> lm(numdiff);
  lm.setXtol(opt.rel_step_tol);
  lm.setFtol(1e-14);
  lm.setGtol(0.0);
  lm.setMaxfev(opt.max_iterations);

  Eigen::VectorXd v(lm_free ? 4 : 3);
  int k = 0;
  v(k++) = ic0 / kIcScale;
  if (lm_free) v(k++) = lm0 / kLScale;
  v(k++) = lw0 / kLScale;
  v(k) = lpar0 / kLScale;

  const auto status = lm.minimize(v);
  using Eigen::LevenbergMarquardtSpace::Status;
  if (status == Status::TooManyFunctionEvaluation) {
    throw FitError("fit_flux_model: no convergence within " +
                   std::to_string(opt.max_iterations) + " iterations");
  }
  if (status == Status::ImproperInputParameters || !v.allFinite()) {
    throw FitError("fit_flux_model: least-squares solver failed");
  }

  const Params p = functor.unpack(v);
  FluxModelFit out;
  out.ic = std::abs(p.ic);
  out.lm = std::abs(p.lm);
  out.lw = p.lw;
  out.lpar = std::abs(p.lpar);
  out.iterations = static_cast<int>(lm.iterations());

  Eigen::VectorXd r(functor.values());
  functor(v, r);
  out.rms_residual = std::sqrt(r.squaredNorm() / r.size()) * kLScale;

  // covariance s^2 (J^T J)^-1 mapped back to SI units
  Eigen::MatrixXd jac(functor.values(), functor.inputs());
  numdiff.df(v, jac);
  const int dof = std::max(1, functor.values() - functor.inputs());
  const double s2 = r.squaredNorm() / dof;
  const Eigen::MatrixXd cov = s2 * (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
  const std::vector<int> slot = lm_free ? std::vector<int>{0, 1, 2, 3} : std::vector<int>{0, 2, 3};
  const double scale[4] = {kIcScale, kLScale, kLScale, kLScale};
  out.covariance.assign(16, 0.0);
  for (int a = 0; a < cov.rows(); ++a) {
    for (int b = 0; b < cov.cols(); ++b) {
      const int ia = slot[static_cast<std::size_t>(a)], ib = slot[static_cast<std::size_t>(b)];
      out.covariance[static_cast<std::size_t>(ia * 4 + ib)] = cov(a, b) * scale[ia] * scale[ib];
    }
  }
  return out;
}

}  // namespace twpa
