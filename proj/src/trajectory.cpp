#include "waggle/trajectory.hpp"

#include <cmath>

#include "waggle/error.hpp"

namespace waggle {

Trajectory::Trajectory(double dt, double t0) : dt_(dt), t0_(t0) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("trajectory dt must be positive and finite");
  if (!std::isfinite(t0)) throw ConfigError("trajectory t0 must be finite");
}

double Trajectory::duration() const noexcept {
  return x_.empty() ? 0.0 : static_cast<double>(x_.size() - 1) * dt_;
}

void Trajectory::reserve(std::size_t n) {
  x_.reserve(n);
  y_.reserve(n);
  vx_.reserve(n);
  vy_.reserve(n);
}

void Trajectory::resize(std::size_t n) {
  x_.resize(n, 0.0);
  y_.resize(n, 0.0);
  vx_.resize(n, 0.0);
  vy_.resize(n, 0.0);
}

void Trajectory::push_back(const PlanarSample& s) {
  push_back(s.position.x(), s.position.y(), s.velocity.x(), s.velocity.y());
}

void Trajectory::push_back(double x, double y, double vx, double vy) {
  x_.push_back(x);
  y_.push_back(y);
  vx_.push_back(vx);
  vy_.push_back(vy);
}

PlanarSample Trajectory::operator[](std::size_t j) const {
  return {position(j), velocity(j)};
}

void Trajectory::set(std::size_t j, const PlanarSample& s) {
  x_[j] = s.position.x();
  y_[j] = s.position.y();
  vx_[j] = s.velocity.x();
  vy_[j] = s.velocity.y();
}

Trajectory Trajectory::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw AlignmentError("trajectory slice out of range");
  Trajectory out(dt_, time(first));
  out.reserve(count);
  for (std::size_t j = first; j < first + count; ++j) out.push_back(x_[j], y_[j], vx_[j], vy_[j]);
  return out;
}

bool operator==(const Trajectory& a, const Trajectory& b) {
  return a.dt_ == b.dt_ && a.t0_ == b.t0_ && a.x_ == b.x_ && a.y_ == b.y_ && a.vx_ == b.vx_ &&
         a.vy_ == b.vy_;
}

std::size_t sample_count(double T, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("horizon must be finite and non-negative");
  // The relative nudge absorbs representation error in T/dt (e.g. 1/0.01).
  const double steps = std::floor(T / dt * (1.0 + 1e-12) + 1e-9);
  return static_cast<std::size_t>(steps) + 1;
}

}  // namespace waggle
