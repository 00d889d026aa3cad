#include <cmath>

#include "waggle/simd/kernels.hpp"

namespace waggle::simd {

namespace {

void ilc_update_scalar(const double* u, const double* e, const double* ed, const double* s, double kp,
                       double kv, double ks, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = ((u[i] + kp * e[i]) + kv * ed[i]) + ks * s[i];
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double max_abs_scalar(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(a[i]));
  return m;
}

void accumulate_squares_scalar(double* acc, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a[i] * a[i];
}

double weighted_sqrt_max_scalar(const double* sq, const double* w, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, w[i] * std::sqrt(sq[i]));
  return m;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",           ilc_update_scalar,       sum_sq_diff_scalar,
                                 max_abs_scalar,     accumulate_squares_scalar, weighted_sqrt_max_scalar};
  return table;
}

}  // namespace waggle::simd
