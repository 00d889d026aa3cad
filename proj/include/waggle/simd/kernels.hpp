#pragma once

// Data-parallel inner loops shared by the controller, metric and bound code.
//
// Every kernel exists as a scalar reference and, on x86-64, an AVX2 variant.
// The active table is picked once at first use from the CPU feature bits;
// setting WAGGLE_SIMD=scalar in the environment forces the reference path.
//
// Elementwise kernels (ilc_update, accumulate_squares) and the max reductions
// are bit-identical across variants: no FMA, same operation order. The sum
// reduction (sum_sq_diff) reassociates, so variants agree to rounding only.

#include <cstddef>
#include <span>
#include <string_view>

namespace waggle::simd {

struct KernelTable {
  std::string_view name;

  /// out[i] = ((u[i] + kp*e[i]) + kv*ed[i]) + ks*s[i]
  void (*ilc_update)(const double* u, const double* e, const double* ed, const double* s, double kp,
                     double kv, double ks, double* out, std::size_t n);
  /// sum of (a[i] - b[i])^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  /// max |a[i]|, 0 for n == 0
  double (*max_abs)(const double* a, std::size_t n);
  /// acc[i] += a[i]*a[i]
  void (*accumulate_squares)(double* acc, const double* a, std::size_t n);
  /// max w[i]*sqrt(sq[i]), 0 for n == 0
  double (*weighted_sqrt_max)(const double* sq, const double* w, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_kernels();
const KernelTable& active_kernels();

// Span front-ends over the active table. Length mismatches throw AlignmentError.
void ilc_update(std::span<const double> u, std::span<const double> e, std::span<const double> ed,
                std::span<const double> s, double kp, double kv, double ks, std::span<double> out);
double sum_sq_diff(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);
void accumulate_squares(std::span<double> acc, std::span<const double> a);
double weighted_sqrt_max(std::span<const double> sq, std::span<const double> w);

}  // namespace waggle::simd
