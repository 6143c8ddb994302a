#pragma once

// Data-parallel inner loops. Each kernel has a portable scalar reference
// implementation and an AVX2/FMA variant; the variant is picked once at
// runtime from the CPU feature flags. Set TWPA_KERNELS=scalar in the
// environment to force the reference path.

#include <cstddef>
#include <string_view>

namespace twpa::kernels {

enum class Backend { scalar, avx2 };

/// Structure-of-arrays batch of 2x2 complex ABCD matrices, one per frequency.
struct AbcdBatch {
  double* a_re; double* a_im;
  double* b_re; double* b_im;
  double* c_re; double* c_im;
  double* d_re; double* d_im;
};

/// Coefficients of the linear inductive network in one cell. With theta the
/// phase across the cell and phi the junction phase:
///   cell current      I  = i_theta * theta - i_phi * phi
///   junction current  IJ = j_theta * theta - j_phi * phi
struct CellCoeffs {
  double i_theta, i_phi;
  double j_theta, j_phi;
  double ic;           ///< junction critical current [A]
  double inv_cj_phi0;  ///< 1 / (Cj phi0)
  double damping;      ///< 1 / (Rshunt Cj), zero when undamped
};

struct KernelTable {
  /// Cascades n_cells ladder cells (series i w L, shunt i w C_n (1 - i tan d))
  /// for each of n_freq angular frequencies. `out` must hold n_freq entries.
  void (*ladder_abcd)(const double* omega, std::size_t n_freq, double l_cell,
                      const double* caps, std::size_t n_cells, double loss_tan,
                      AbcdBatch out);

  /// Per-cell currents and junction accelerations. psi has n+1 node phases,
  /// phi/vphi the n junction phases and phase velocities.
  void (*cell_currents)(const double* psi, const double* phi, const double* vphi,
                        std::size_t n, const CellCoeffs& k, double* cur,
                        double* acc_phi);

  /// Node accelerations: acc[i] = (cur[i] - cur[i+1]) * inv_c[i], i < n.
  /// cur has n+1 entries; cur[n] is the current leaving the last node.
  void (*node_accel)(const double* cur, const double* inv_c, std::size_t n,
                     double* acc);
};

bool avx2_supported();
Backend active_backend();
std::string_view backend_name(Backend b);

/// Kernels of the active backend.
const KernelTable& table();
/// Kernels of a specific backend; throws if it is unavailable on this CPU.
const KernelTable& table(Backend b);

/// Overrides the runtime choice (tests and benchmarks).
void set_backend(Backend b);

namespace detail {
const KernelTable& scalar_table();
#if defined(TWPA_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace twpa::kernels
