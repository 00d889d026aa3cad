#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>

#include "waggle/trajectory.hpp"

namespace waggle {

enum class FilterMode { centered, causal };

struct FilterSpec {
  int window = 5;
  FilterMode mode = FilterMode::centered;

  void validate() const;
};

/// Windowed mean over every channel. Centered windows shrink symmetrically at
/// the ends; causal windows average the trailing samples only.
Trajectory moving_average(const Trajectory& series, const FilterSpec& spec);

/// Rewrites the velocity channels from positions: central differences inside,
/// first-order one-sided differences at both ends.
Trajectory estimate_velocity(const Trajectory& positions);

/// Linear interpolation of positions onto a dt_new grid starting at t0, then
/// velocity re-estimation. The last grid point snaps to the final sample when
/// it lands on it to within 1e-9 of a step.
Trajectory resample(const Trajectory& series, double dt_new);

/// Writes the `t,x,y,vx,vy` format with shortest round-trip decimals.
void save_csv(const Trajectory& traj, const std::filesystem::path& path);
std::string to_csv(const Trajectory& traj);

/// Reads `t,x,y,vx,vy` or `t,x,y`; a file without velocity columns gets
/// difference-method velocities.
Trajectory load_csv(const std::filesystem::path& path);
Trajectory parse_csv(const std::string& text);

/// `<root>/<dyad>/<role>/<trial>.csv`
std::filesystem::path corpus_path(const std::filesystem::path& root, const std::string& dyad,
                                  const std::string& role, const std::string& trial);

/// Streaming causal filter + backward-difference velocity for live input.
/// Feeding the samples of a uniform series reproduces the batch causal
/// moving_average positions bit-for-bit.
class CausalSmoother {
 public:
  explicit CausalSmoother(int window = 5);

  /// Returns the smoothed position and a velocity from the previous smoothed
  /// sample (zero for the first sample).
  PlanarSample push(double t, const Vec2& position);

  std::size_t count() const noexcept { return count_; }

 private:
  int window_;
  std::deque<Vec2> history_;
  std::optional<Vec2> last_smoothed_;
  double last_t_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace waggle
