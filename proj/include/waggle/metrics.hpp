#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "waggle/trajectory.hpp"

namespace waggle {

enum class Axis { x, y };

/// Per-sample oscillation phase of one axis.
struct PhaseSeries {
  std::vector<double> phases;  ///< wrapped to (-pi, pi]
  Axis axis = Axis::x;
  Vec2 center = Vec2::Zero();  ///< mean position used for centering
  double omega_hat = 0.0;      ///< rad/s from the mean same-direction crossing interval
  bool short_record = false;   ///< fewer than two estimated periods of motion
};

struct MetricsReport {
  double rmse = 0.0;
  double cv = 0.0;
  double svm = 0.0;  ///< of the follower
  std::size_t n = 0;
  double rmse_x = 0.0;
  double rmse_y = 0.0;
  double max_abs_x = 0.0;
  double max_abs_y = 0.0;
  bool cv_valid = false;  ///< false when phase extraction found degenerate motion

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct RadarInput {
  std::vector<std::string> labels;
  std::vector<double> radii;
};

/// Maps an angle onto (-pi, pi].
double wrap_angle(double a);

double rmse(const Trajectory& a, const Trajectory& b);

/// Phase by atan2(v/omega_hat, p - center) on each axis.
std::array<PhaseSeries, 2> estimate_phase(const Trajectory& traj);

/// Modulus of the mean unit phasor of the angles.
double circular_variance(std::span<const double> delta_phi);

/// Per-step relative phase summed over both axes, wrapped once.
std::vector<double> relative_phase(const Trajectory& leader, const Trajectory& follower);

/// max|x| * max|y|
double svm(const Trajectory& traj);

/// |value - benchmark| / |benchmark|
double error_rate_vs_benchmark(double value, double benchmark);

/// Area of the polygon with vertex i at radius r_i and angle 2*pi*i/m.
double radar_area(const RadarInput& input);

MetricsReport compute_metrics(const Trajectory& leader, const Trajectory& follower);

/// Circular variance over the trailing `periods` leader periods (whole record
/// when the period cannot be estimated yet or the record is shorter).
/// Returns NaN on degenerate motion.
double windowed_cv(const Trajectory& leader, const Trajectory& follower, double periods);

/// `rmse=..` lines followed by per-axis extras.
std::string to_key_value(const MetricsReport& r);
std::string metrics_csv_header();
std::string to_csv_row(const MetricsReport& r);

/// Sample mean and standard deviation (n-1 divisor; 0 for a single value).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace waggle
