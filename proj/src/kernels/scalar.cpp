// Reference implementations. These define the results the vector variants
// are tested against.

#include <cmath>

#include "twpa/kernels/kernels.hpp"

namespace twpa::kernels::detail {

namespace {

void ladder_abcd(const double* omega, std::size_t n_freq, double l_cell,
                 const double* caps, std::size_t n_cells, double loss_tan,
                 AbcdBatch out) {
  for (std::size_t f = 0; f < n_freq; ++f) {
    const double w = omega[f];
    const double zi = w * l_cell;  // Z = i zi
    double ar = 1, ai = 0, br = 0, bi = 0, cr = 0, ci = 0, dr = 1, di = 0;
    for (std::size_t n = 0; n < n_cells; ++n) {
      // Y = w C (tan d + i)
      const double yr = w * caps[n] * loss_tan;
      const double yi = w * caps[n];
      // Z*Y = i zi (yr + i yi) = -zi yi + i zi yr
      const double pr = 1.0 - zi * yi;
      const double pi = zi * yr;
      // [a b; c d] * [1+ZY  Z; Y  1]
      const double nar = ar * pr - ai * pi + br * yr - bi * yi;
      const double nai = ar * pi + ai * pr + br * yi + bi * yr;
      const double nbr = br - ai * zi;
      const double nbi = bi + ar * zi;
      const double ncr = cr * pr - ci * pi + dr * yr - di * yi;
      const double nci = cr * pi + ci * pr + dr * yi + di * yr;
      const double ndr = dr - ci * zi;
      const double ndi = di + cr * zi;
      ar = nar; ai = nai; br = nbr; bi = nbi;
      cr = ncr; ci = nci; dr = ndr; di = ndi;
    }
    out.a_re[f] = ar; out.a_im[f] = ai;
    out.b_re[f] = br; out.b_im[f] = bi;
    out.c_re[f] = cr; out.c_im[f] = ci;
    out.d_re[f] = dr; out.d_im[f] = di;
  }
}

void cell_currents(const double* psi, const double* phi, const double* vphi,
                   std::size_t n, const CellCoeffs& k, double* cur, double* acc_phi) {
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = psi[i] - psi[i + 1];
    cur[i] = k.i_theta * theta - k.i_phi * phi[i];
    const double ij = k.j_theta * theta - k.j_phi * phi[i];
    acc_phi[i] = (ij - k.ic * std::sin(phi[i])) * k.inv_cj_phi0 - k.damping * vphi[i];
  }
}

void node_accel(const double* cur, const double* inv_c, std::size_t n, double* acc) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = (cur[i] - cur[i + 1]) * inv_c[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{&ladder_abcd, &cell_currents, &node_accel};
  return t;
}

}  // namespace twpa::kernels::detail
