#include <cstdlib>
#include <string_view>

#include "waggle/error.hpp"
#include "waggle/simd/kernels.hpp"

namespace waggle::simd {

namespace {

const KernelTable& select() {
  const char* forced = std::getenv("WAGGLE_SIMD");
  if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw AlignmentError(std::string(what) + ": length mismatch");
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = select();
  return table;
}

void ilc_update(std::span<const double> u, std::span<const double> e, std::span<const double> ed,
                std::span<const double> s, double kp, double kv, double ks, std::span<double> out) {
  const std::size_t n = u.size();
  require_same(n, e.size(), "ilc_update");
  require_same(n, ed.size(), "ilc_update");
  require_same(n, s.size(), "ilc_update");
  require_same(n, out.size(), "ilc_update");
  active_kernels().ilc_update(u.data(), e.data(), ed.data(), s.data(), kp, kv, ks, out.data(), n);
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size(), "sum_sq_diff");
  return active_kernels().sum_sq_diff(a.data(), b.data(), a.size());
}

double max_abs(std::span<const double> a) { return active_kernels().max_abs(a.data(), a.size()); }

void accumulate_squares(std::span<double> acc, std::span<const double> a) {
  require_same(acc.size(), a.size(), "accumulate_squares");
  active_kernels().accumulate_squares(acc.data(), a.data(), a.size());
}

double weighted_sqrt_max(std::span<const double> sq, std::span<const double> w) {
  require_same(sq.size(), w.size(), "weighted_sqrt_max");
  return active_kernels().weighted_sqrt_max(sq.data(), w.data(), sq.size());
}

}  // namespace waggle::simd
