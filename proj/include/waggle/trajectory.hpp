#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace waggle {

using Vec2 = Eigen::Vector2d;

struct PlanarSample {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// Uniformly sampled planar motion. Sample j sits at t0 + j*dt; timestamps are
/// never stored. Channels are kept as separate arrays so kernels can stream them.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(double dt, double t0 = 0.0);

  double dt() const noexcept { return dt_; }
  double t0() const noexcept { return t0_; }
  std::size_t size() const noexcept { return x_.size(); }
  bool empty() const noexcept { return x_.empty(); }
  double time(std::size_t j) const noexcept { return t0_ + static_cast<double>(j) * dt_; }
  /// Time span covered by the samples, (n-1)*dt.
  double duration() const noexcept;

  void reserve(std::size_t n);
  void resize(std::size_t n);
  void push_back(const PlanarSample& s);
  void push_back(double x, double y, double vx, double vy);

  PlanarSample operator[](std::size_t j) const;
  Vec2 position(std::size_t j) const { return {x_[j], y_[j]}; }
  Vec2 velocity(std::size_t j) const { return {vx_[j], vy_[j]}; }
  void set(std::size_t j, const PlanarSample& s);

  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> y() const noexcept { return y_; }
  std::span<const double> vx() const noexcept { return vx_; }
  std::span<const double> vy() const noexcept { return vy_; }
  std::span<double> x() noexcept { return x_; }
  std::span<double> y() noexcept { return y_; }
  std::span<double> vx() noexcept { return vx_; }
  std::span<double> vy() noexcept { return vy_; }

  /// Samples [first, first+count) as a new trajectory starting at time(first).
  Trajectory slice(std::size_t first, std::size_t count) const;

  /// Exact equality of grid and every channel value.
  friend bool operator==(const Trajectory& a, const Trajectory& b);

 private:
  double dt_ = 1.0;
  double t0_ = 0.0;
  std::vector<double> x_, y_, vx_, vy_;
};

/// Number of grid points for horizon T at step dt, endpoints inclusive.
std::size_t sample_count(double T, double dt);

}  // namespace waggle
