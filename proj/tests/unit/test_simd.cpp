#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "waggle/error.hpp"
#include "waggle/simd/kernels.hpp"

using namespace waggle;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> U(-3, 3);
  std::vector<double> v(n);
  for (auto& x : v) x = U(rng);
  return v;
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar kernels against plain loops") {
    const auto& k = simd::scalar_kernels();
    std::mt19937_64 rng(5);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
      const auto u = random_vec(rng, n), e = random_vec(rng, n), ed = random_vec(rng, n), s = random_vec(rng, n);
      std::vector<double> out(n);
      k.ilc_update(u.data(), e.data(), ed.data(), s.data(), 0.31, 0.01, 0.02, out.data(), n);
      double ssd = 0.0, mx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(out[i] == ((u[i] + 0.31 * e[i]) + 0.01 * ed[i]) + 0.02 * s[i]);
        ssd += (u[i] - e[i]) * (u[i] - e[i]);
        mx = std::max(mx, std::abs(u[i]));
      }
      CHECK(k.sum_sq_diff(u.data(), e.data(), n) == doctest::Approx(ssd).epsilon(1e-14));
      CHECK(k.max_abs(u.data(), n) == mx);
    }
  }

  TEST_CASE("vector kernels agree with the scalar reference") {
    const simd::KernelTable* v = simd::avx2_kernels();
    if (v == nullptr) {
      MESSAGE("AVX2 unavailable; vector path not exercised");
      return;
    }
    const auto& r = simd::scalar_kernels();
    std::mt19937_64 rng(9);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 8u, 13u, 100u, 4097u}) {
      const auto u = random_vec(rng, n), e = random_vec(rng, n), ed = random_vec(rng, n), s = random_vec(rng, n);
      std::vector<double> a(n), b(n);
      r.ilc_update(u.data(), e.data(), ed.data(), s.data(), 0.45, 0.02, 0.03, a.data(), n);
      v->ilc_update(u.data(), e.data(), ed.data(), s.data(), 0.45, 0.02, 0.03, b.data(), n);
      CHECK(a == b);

      std::vector<double> acc_a(n, 1.0), acc_b(n, 1.0);
      r.accumulate_squares(acc_a.data(), u.data(), n);
      v->accumulate_squares(acc_b.data(), u.data(), n);
      CHECK(acc_a == acc_b);

      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(-0.01 * static_cast<double>(i));
      CHECK(r.weighted_sqrt_max(acc_a.data(), w.data(), n) == v->weighted_sqrt_max(acc_a.data(), w.data(), n));
      CHECK(r.max_abs(u.data(), n) == v->max_abs(u.data(), n));
      const double sa = r.sum_sq_diff(u.data(), e.data(), n);
      const double sb = v->sum_sq_diff(u.data(), e.data(), n);
      CHECK(std::abs(sa - sb) <= 1e-12 * std::max(1.0, sa));
    }
  }

  TEST_CASE("span front-ends check lengths") {
    std::vector<double> a(4), b(5), out(4);
    CHECK_THROWS_AS(simd::sum_sq_diff(a, b), AlignmentError);
    CHECK_THROWS_AS(simd::ilc_update(a, a, a, b, 1, 1, 1, out), AlignmentError);
    CHECK_THROWS_AS(simd::accumulate_squares(out, b), AlignmentError);
    CHECK(simd::max_abs(std::vector<double>{}) == 0.0);
  }

  TEST_CASE("active table is one of the known variants") {
    const auto name = simd::active_kernels().name;
    CHECK((name == "scalar" || name == "avx2"));
  }
}
