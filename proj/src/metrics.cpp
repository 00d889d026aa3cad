#include "waggle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "waggle/config.hpp"
#include "waggle/error.hpp"
#include "waggle/simd/kernels.hpp"

namespace waggle {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

namespace {

void require_aligned(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw AlignmentError("trajectories differ in length");
  if (a.dt() != b.dt()) throw AlignmentError("trajectories differ in sample period");
}

PhaseSeries axis_phase(std::span<const double> p, std::span<const double> v, double dt, Axis axis,
                       const Vec2& center) {
  const double c0 = axis == Axis::x ? center.x() : center.y();
  const std::size_t n = p.size();

  std::vector<double> up, down;
  for (std::size_t j = 1; j < n; ++j) {
    const double a = p[j - 1] - c0;
    const double b = p[j] - c0;
    if (a < 0.0 && b >= 0.0) up.push_back((static_cast<double>(j - 1) + a / (a - b)) * dt);
    if (a > 0.0 && b <= 0.0) down.push_back((static_cast<double>(j - 1) + a / (a - b)) * dt);
  }

  double sum = 0.0;
  std::size_t count = 0;
  for (const auto* list : {&up, &down})
    for (std::size_t i = 1; i < list->size(); ++i) {
      sum += (*list)[i] - (*list)[i - 1];
      ++count;
    }

  double period = 0.0;
  if (count > 0) {
    period = sum / static_cast<double>(count);
  } else if (up.size() + down.size() >= 2) {
    // One crossing each way: a half period apart.
    period = 2.0 * std::fabs(up.front() - down.front());
  } else {
    throw DegenerateMotionError("no repeated zero crossings on the " + std::string(axis == Axis::x ? "x" : "y") +
                                " axis");
  }
  if (!(period > 0.0)) throw DegenerateMotionError("zero oscillation period");

  PhaseSeries out;
  out.axis = axis;
  out.center = center;
  out.omega_hat = 2.0 * std::numbers::pi / period;
  out.short_record = static_cast<double>(n - 1) * dt < 2.0 * period;
  out.phases.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.phases[j] = wrap_angle(std::atan2(v[j] / out.omega_hat, p[j] - c0));
  return out;
}

double mean_of(std::span<const double> s) {
  double acc = 0.0;
  for (double v : s) acc += v;
  return acc / static_cast<double>(s.size());
}

}  // namespace

double rmse(const Trajectory& a, const Trajectory& b) {
  require_aligned(a, b);
  if (a.empty()) throw InsufficientDataError("rmse of empty trajectories");
  const double ss = simd::sum_sq_diff(a.x(), b.x()) + simd::sum_sq_diff(a.y(), b.y());
  return std::sqrt(ss / static_cast<double>(a.size()));
}

std::array<PhaseSeries, 2> estimate_phase(const Trajectory& traj) {
  if (traj.size() < 2) throw InsufficientDataError("phase estimation needs at least 2 samples");
  const Vec2 center{mean_of(traj.x()), mean_of(traj.y())};
  return {axis_phase(traj.x(), traj.vx(), traj.dt(), Axis::x, center),
          axis_phase(traj.y(), traj.vy(), traj.dt(), Axis::y, center)};
}

double circular_variance(std::span<const double> delta_phi) {
  if (delta_phi.empty()) throw InsufficientDataError("circular variance of an empty series");
  double re = 0.0, im = 0.0;
  for (double a : delta_phi) {
    re += std::cos(a);
    im += std::sin(a);
  }
  const double n = static_cast<double>(delta_phi.size());
  return std::min(1.0, std::hypot(re / n, im / n));
}

std::vector<double> relative_phase(const Trajectory& leader, const Trajectory& follower) {
  require_aligned(leader, follower);
  const auto pl = estimate_phase(leader);
  const auto pf = estimate_phase(follower);
  std::vector<double> out(leader.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = wrap_angle((pl[0].phases[j] - pf[0].phases[j]) + (pl[1].phases[j] - pf[1].phases[j]));
  return out;
}

double svm(const Trajectory& traj) {
  if (traj.empty()) throw InsufficientDataError("svm of an empty trajectory");
  return simd::max_abs(traj.x()) * simd::max_abs(traj.y());
}

double error_rate_vs_benchmark(double value, double benchmark) {
  if (benchmark == 0.0 || !std::isfinite(benchmark)) throw ConfigError("undefined benchmark (zero or non-finite)");
  return std::fabs(value - benchmark) / std::fabs(benchmark);
}

double radar_area(const RadarInput& input) {
  const std::size_t m = input.radii.size();
  if (m < 3) throw ConfigError("radar chart needs at least 3 axes");
  if (!input.labels.empty() && input.labels.size() != m) throw ConfigError("radar labels and radii differ in count");
  for (double r : input.radii)
    if (!std::isfinite(r) || r < 0.0) throw ConfigError("radar radii must be finite and non-negative");
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) acc += input.radii[i] * input.radii[(i + 1) % m];
  return 0.5 * acc * std::sin(2.0 * std::numbers::pi / static_cast<double>(m));
}

MetricsReport compute_metrics(const Trajectory& leader, const Trajectory& follower) {
  require_aligned(leader, follower);
  MetricsReport r;
  r.n = leader.size();
  if (r.n == 0) return r;
  const double nd = static_cast<double>(r.n);
  const double ssx = simd::sum_sq_diff(leader.x(), follower.x());
  const double ssy = simd::sum_sq_diff(leader.y(), follower.y());
  r.rmse = std::sqrt((ssx + ssy) / nd);
  r.rmse_x = std::sqrt(ssx / nd);
  r.rmse_y = std::sqrt(ssy / nd);
  r.max_abs_x = simd::max_abs(follower.x());
  r.max_abs_y = simd::max_abs(follower.y());
  r.svm = r.max_abs_x * r.max_abs_y;
  try {
    r.cv = circular_variance(relative_phase(leader, follower));
    r.cv_valid = true;
  } catch (const DegenerateMotionError&) {
    r.cv = 0.0;
    r.cv_valid = false;
  } catch (const InsufficientDataError&) {
    r.cv = 0.0;
    r.cv_valid = false;
  }
  return r;
}

double windowed_cv(const Trajectory& leader, const Trajectory& follower, double periods) {
  require_aligned(leader, follower);
  if (leader.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::size_t first = 0;
  try {
    const auto ph = estimate_phase(leader);
    const double period = 2.0 * std::numbers::pi / ph[0].omega_hat;
    const auto span = static_cast<std::size_t>(std::ceil(periods * period / leader.dt()));
    if (span + 1 < leader.size()) first = leader.size() - (span + 1);
  } catch (const DegenerateMotionError&) {
    first = 0;
  }
  try {
    const std::size_t count = leader.size() - first;
    return circular_variance(relative_phase(leader.slice(first, count), follower.slice(first, count)));
  } catch (const DegenerateMotionError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::string to_key_value(const MetricsReport& r) {
  std::string s;
  s += "rmse=" + format_double(r.rmse) + "\n";
  s += "cv=" + format_double(r.cv) + "\n";
  s += "svm=" + format_double(r.svm) + "\n";
  s += "n=" + std::to_string(r.n) + "\n";
  s += "rmse_x=" + format_double(r.rmse_x) + "\n";
  s += "rmse_y=" + format_double(r.rmse_y) + "\n";
  s += "max_abs_x=" + format_double(r.max_abs_x) + "\n";
  s += "max_abs_y=" + format_double(r.max_abs_y) + "\n";
  s += std::string("cv_valid=") + (r.cv_valid ? "1" : "0") + "\n";
  return s;
}

std::string metrics_csv_header() { return "rmse,cv,svm,n"; }

std::string to_csv_row(const MetricsReport& r) {
  return format_double(r.rmse) + "," + format_double(r.cv) + "," + format_double(r.svm) + "," + std::to_string(r.n);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw InsufficientDataError("mean of an empty sample");
  MeanStd out;
  out.mean = mean_of(values);
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace waggle
