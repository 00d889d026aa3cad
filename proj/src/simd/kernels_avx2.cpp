#include <cmath>

#include "waggle/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define WAGGLE_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define WAGGLE_HAVE_AVX2_BUILD 0
#endif

namespace waggle::simd {

#if WAGGLE_HAVE_AVX2_BUILD

namespace {

#define WAGGLE_AVX2 __attribute__((target("avx2")))

WAGGLE_AVX2 inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return std::fmax(_mm_cvtsd_f64(m), _mm_cvtsd_f64(_mm_unpackhi_pd(m, m)));
}

WAGGLE_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

WAGGLE_AVX2 void ilc_update_avx2(const double* u, const double* e, const double* ed, const double* s,
                                 double kp, double kv, double ks, double* out, std::size_t n) {
  const __m256d vkp = _mm256_set1_pd(kp);
  const __m256d vkv = _mm256_set1_pd(kv);
  const __m256d vks = _mm256_set1_pd(ks);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_add_pd(_mm256_loadu_pd(u + i), _mm256_mul_pd(vkp, _mm256_loadu_pd(e + i)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vkv, _mm256_loadu_pd(ed + i)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vks, _mm256_loadu_pd(s + i)));
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) out[i] = ((u[i] + kp * e[i]) + kv * ed[i]) + ks * s[i];
}

WAGGLE_AVX2 double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d, d));
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

WAGGLE_AVX2 double max_abs_avx2(const double* a, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_andnot_pd(sign, _mm256_loadu_pd(a + i)));
  double out = hmax(m);
  for (; i < n; ++i) out = std::fmax(out, std::fabs(a[i]));
  return out;
}

WAGGLE_AVX2 void accumulate_squares_avx2(double* acc, const double* a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(v, v)));
  }
  for (; i < n; ++i) acc[i] += a[i] * a[i];
}

WAGGLE_AVX2 double weighted_sqrt_max_avx2(const double* sq, const double* w, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_sqrt_pd(_mm256_loadu_pd(sq + i));
    m = _mm256_max_pd(m, _mm256_mul_pd(_mm256_loadu_pd(w + i), r));
  }
  double out = hmax(m);
  for (; i < n; ++i) out = std::fmax(out, w[i] * std::sqrt(sq[i]));
  return out;
}

#undef WAGGLE_AVX2

}  // namespace

const KernelTable* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelTable table{"avx2",       ilc_update_avx2,         sum_sq_diff_avx2,
                                 max_abs_avx2, accumulate_squares_avx2, weighted_sqrt_max_avx2};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace waggle::simd
