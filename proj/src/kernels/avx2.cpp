// AVX2/FMA variants. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a CPU feature check.

#include <immintrin.h>

#include <cmath>

#include "twpa/kernels/kernels.hpp"

namespace twpa::kernels::detail {

namespace {

// sin(x) for |x| up to a few thousand: two-part Cody-Waite reduction by pi/2
// followed by minimax polynomials on [-pi/4, pi/4].
inline __m256d sin_pd(__m256d x) {
  const __m256d two_over_pi = _mm256_set1_pd(0.63661977236758134308);
  const __m256d pio2_hi = _mm256_set1_pd(1.57079632673412561417e+00);
  const __m256d pio2_lo = _mm256_set1_pd(6.07710050650619224932e-11);

  const __m256d q = _mm256_round_pd(_mm256_mul_pd(x, two_over_pi),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(q, pio2_hi, x);
  r = _mm256_fnmadd_pd(q, pio2_lo, r);
  const __m256d z = _mm256_mul_pd(r, r);

  __m256d ps = _mm256_set1_pd(1.58962301576546568060e-10);
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-2.50507477628578072866e-8));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(2.75573136213857245213e-6));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.98412698295895385996e-4));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(8.33333333332211858878e-3));
  ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(-1.66666666666666307295e-1));
  const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(r, z), ps, r);

  __m256d pc = _mm256_set1_pd(-1.13585365213876817300e-11);
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(2.08757008419747316778e-9));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-2.75573141792967388112e-7));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(2.48015872888517045348e-5));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(-1.38888888888730564116e-3));
  pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(4.16666666666665929218e-2));
  const __m256d c = _mm256_fmadd_pd(_mm256_mul_pd(z, z), pc,
                                    _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z,
                                                     _mm256_set1_pd(1.0)));

  // quadrant: 0 -> s, 1 -> c, 2 -> -s, 3 -> -c
  const __m128i qi = _mm256_cvtpd_epi32(q);
  const __m256i q64 = _mm256_cvtepi32_epi64(qi);
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d use_cos =
      _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q64, one), one));
  const __m256d negate =
      _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_and_si256(q64, two), 62));
  const __m256d v = _mm256_blendv_pd(s, c, use_cos);
  return _mm256_xor_pd(v, negate);
}

void ladder_abcd(const double* omega, std::size_t n_freq, double l_cell,
                 const double* caps, std::size_t n_cells, double loss_tan,
                 AbcdBatch out) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d tan_d = _mm256_set1_pd(loss_tan);
  const __m256d lc = _mm256_set1_pd(l_cell);
  std::size_t f = 0;
  for (; f + 4 <= n_freq; f += 4) {
    const __m256d w = _mm256_loadu_pd(omega + f);
    const __m256d zi = _mm256_mul_pd(w, lc);
    __m256d ar = one, ai = _mm256_setzero_pd();
    __m256d br = _mm256_setzero_pd(), bi = _mm256_setzero_pd();
    __m256d cr = _mm256_setzero_pd(), ci = _mm256_setzero_pd();
    __m256d dr = one, di = _mm256_setzero_pd();
    for (std::size_t n = 0; n < n_cells; ++n) {
      const __m256d yi = _mm256_mul_pd(w, _mm256_set1_pd(caps[n]));
      const __m256d yr = _mm256_mul_pd(yi, tan_d);
      const __m256d pr = _mm256_fnmadd_pd(zi, yi, one);
      const __m256d pi = _mm256_mul_pd(zi, yr);

      __m256d nar = _mm256_mul_pd(ar, pr);
      nar = _mm256_fnmadd_pd(ai, pi, nar);
      nar = _mm256_fmadd_pd(br, yr, nar);
      nar = _mm256_fnmadd_pd(bi, yi, nar);
      __m256d nai = _mm256_mul_pd(ar, pi);
      nai = _mm256_fmadd_pd(ai, pr, nai);
      nai = _mm256_fmadd_pd(br, yi, nai);
      nai = _mm256_fmadd_pd(bi, yr, nai);
      const __m256d nbr = _mm256_fnmadd_pd(ai, zi, br);
      const __m256d nbi = _mm256_fmadd_pd(ar, zi, bi);

      __m256d ncr = _mm256_mul_pd(cr, pr);
      ncr = _mm256_fnmadd_pd(ci, pi, ncr);
      ncr = _mm256_fmadd_pd(dr, yr, ncr);
      ncr = _mm256_fnmadd_pd(di, yi, ncr);
      __m256d nci = _mm256_mul_pd(cr, pi);
      nci = _mm256_fmadd_pd(ci, pr, nci);
      nci = _mm256_fmadd_pd(dr, yi, nci);
      nci = _mm256_fmadd_pd(di, yr, nci);
      const __m256d ndr = _mm256_fnmadd_pd(ci, zi, dr);
      const __m256d ndi = _mm256_fmadd_pd(cr, zi, di);

      ar = nar; ai = nai; br = nbr; bi = nbi;
      cr = ncr; ci = nci; dr = ndr; di = ndi;
    }
    _mm256_storeu_pd(out.a_re + f, ar); _mm256_storeu_pd(out.a_im + f, ai);
    _mm256_storeu_pd(out.b_re + f, br); _mm256_storeu_pd(out.b_im + f, bi);
    _mm256_storeu_pd(out.c_re + f, cr); _mm256_storeu_pd(out.c_im + f, ci);
    _mm256_storeu_pd(out.d_re + f, dr); _mm256_storeu_pd(out.d_im + f, di);
  }
  if (f < n_freq) {
    AbcdBatch tail{out.a_re + f, out.a_im + f, out.b_re + f, out.b_im + f,
                   out.c_re + f, out.c_im + f, out.d_re + f, out.d_im + f};
    scalar_table().ladder_abcd(omega + f, n_freq - f, l_cell, caps, n_cells, loss_tan, tail);
  }
}

void cell_currents(const double* psi, const double* phi, const double* vphi,
                   std::size_t n, const CellCoeffs& k, double* cur, double* acc_phi) {
  const __m256d it = _mm256_set1_pd(k.i_theta), ip = _mm256_set1_pd(k.i_phi);
  const __m256d jt = _mm256_set1_pd(k.j_theta), jp = _mm256_set1_pd(k.j_phi);
  const __m256d ic = _mm256_set1_pd(k.ic), inv = _mm256_set1_pd(k.inv_cj_phi0);
  const __m256d damp = _mm256_set1_pd(k.damping);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d theta = _mm256_sub_pd(_mm256_loadu_pd(psi + i), _mm256_loadu_pd(psi + i + 1));
    const __m256d p = _mm256_loadu_pd(phi + i);
    _mm256_storeu_pd(cur + i, _mm256_fmsub_pd(it, theta, _mm256_mul_pd(ip, p)));
    const __m256d ij = _mm256_fmsub_pd(jt, theta, _mm256_mul_pd(jp, p));
    const __m256d drive = _mm256_fnmadd_pd(ic, sin_pd(p), ij);
    _mm256_storeu_pd(acc_phi + i,
                     _mm256_fnmadd_pd(damp, _mm256_loadu_pd(vphi + i), _mm256_mul_pd(drive, inv)));
  }
  if (i < n) {
    scalar_table().cell_currents(psi + i, phi + i, vphi + i, n - i, k, cur + i, acc_phi + i);
  }
}

void node_accel(const double* cur, const double* inv_c, std::size_t n, double* acc) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(cur + i), _mm256_loadu_pd(cur + i + 1));
    _mm256_storeu_pd(acc + i, _mm256_mul_pd(d, _mm256_loadu_pd(inv_c + i)));
  }
  for (; i < n; ++i) acc[i] = (cur[i] - cur[i + 1]) * inv_c[i];
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{&ladder_abcd, &cell_currents, &node_accel};
  return t;
}

}  // namespace twpa::kernels::detail
