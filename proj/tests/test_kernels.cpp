#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "twpa/kernels/kernels.hpp"

using namespace twpa::kernels;

namespace {

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

struct Batch {
  std::vector<double> v[8];
  explicit Batch(std::size_t n) {
    for (auto& x : v) x.assign(n, 0.0);
  }
  AbcdBatch view() {
    return {v[0].data(), v[1].data(), v[2].data(), v[3].data(),
            v[4].data(), v[5].data(), v[6].data(), v[7].data()};
  }
};

}  // namespace

TEST_CASE("backend selection") {
  CHECK(backend_name(Backend::scalar) == "scalar");
  CHECK(backend_name(Backend::avx2) == "avx2");
  const Backend before = active_backend();
  set_backend(Backend::scalar);
  CHECK(active_backend() == Backend::scalar);
  CHECK(&table() == &table(Backend::scalar));
  set_backend(before);
  if (!avx2_supported()) CHECK_THROWS(table(Backend::avx2));
}

TEST_CASE("ladder cascade: AVX2 matches the scalar reference") {
  if (!avx2_supported()) return;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> f(1e9, 60e9), c(5e-15, 80e-15);
  // Odd lengths exercise the vector tail.
  for (std::size_t n_freq : {1u, 3u, 4u, 7u, 130u}) {
    std::vector<double> omega(n_freq);
    for (auto& w : omega) w = 2 * M_PI * f(rng);
    std::vector<double> caps(240);
    for (auto& x : caps) x = c(rng);
    for (double tan_d : {0.0, 1e-3}) {
      Batch s(n_freq), a(n_freq);
      table(Backend::scalar).ladder_abcd(omega.data(), n_freq, 95e-12, caps.data(), caps.size(),
                                         tan_d, s.view());
      table(Backend::avx2).ladder_abcd(omega.data(), n_freq, 95e-12, caps.data(), caps.size(),
                                       tan_d, a.view());
      for (std::size_t i = 0; i < n_freq; ++i) {
        // Norm of the matrix in port units (B in Ohm, C in Siemens, Z0 = 50 Ohm).
        double norm = 1.0;
        for (int k = 0; k < 8; ++k) {
          const double unit = k == 2 || k == 3 ? 50.0 : k == 4 || k == 5 ? 1.0 / 50.0 : 1.0;
          norm += std::abs(s.v[k][i]) / unit;
        }
        for (int k = 0; k < 8; ++k) {
          const double unit = k == 2 || k == 3 ? 50.0 : k == 4 || k == 5 ? 1.0 / 50.0 : 1.0;
          CHECK(std::abs(s.v[k][i] - a.v[k][i]) / unit < 1e-10 * norm);
        }
      }
    }
  }
}

TEST_CASE("cell currents and node accelerations: AVX2 matches the scalar reference") {
  if (!avx2_supported()) return;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  CellCoeffs k{1.3e-5, 0.7e-5, 0.9e-5, 1.1e-5, 0.9e-6, 9.7e24, 1e10};
  for (std::size_t n : {1u, 4u, 5u, 241u}) {
    std::vector<double> psi(n + 1), phi(n), vphi(n), inv_c(n);
    for (auto& x : psi) x = u(rng);
    for (auto& x : phi) x = u(rng);
    for (auto& x : vphi) x = 1e11 * u(rng);
    for (auto& x : inv_c) x = 1e13 * (4.0 + u(rng));
    std::vector<double> cs(n + 1, 0.0), ca(n + 1, 0.0), as(n), aa(n);
    table(Backend::scalar).cell_currents(psi.data(), phi.data(), vphi.data(), n, k, cs.data(), as.data());
    table(Backend::avx2).cell_currents(psi.data(), phi.data(), vphi.data(), n, k, ca.data(), aa.data());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(rel_diff(cs[i], ca[i]) < 1e-12);
      // sin() is evaluated by a polynomial in the vector path.
      CHECK(std::abs(as[i] - aa[i]) < 1e-12 * (std::abs(as[i]) + k.ic * k.inv_cj_phi0));
    }
    std::vector<double> ns(n), na(n);
    table(Backend::scalar).node_accel(cs.data(), inv_c.data(), n, ns.data());
    table(Backend::avx2).node_accel(cs.data(), inv_c.data(), n, na.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_diff(ns[i], na[i]) < 1e-14);
  }
}
