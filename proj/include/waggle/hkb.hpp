#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "waggle/config.hpp"
#include "waggle/trajectory.hpp"

namespace waggle {

/// Oscillator parameters for one planar end effector; both axes share them.
struct HkbParams {
  double alpha = 0.01;
  double beta = 0.01;
  double gamma = 0.01;
  double omega = 0.02;

  void validate() const;
  friend bool operator==(const HkbParams&, const HkbParams&) = default;
};

/// (x-position, x-velocity, y-position, y-velocity).
using State4 = Eigen::Vector4d;
/// Per-axis forcing (acceleration units).
using ControlInput = Eigen::Vector2d;
using Matrix4 = Eigen::Matrix4d;
using InputMatrix = Eigen::Matrix<double, 4, 2>;
using OutputMatrix = Eigen::Matrix<double, 2, 4>;

enum class OutputVariant {
  position,  ///< y = (x1, x3)
  velocity,  ///< y = (x2, x4)
};

InputMatrix input_matrix();
OutputMatrix output_matrix(OutputVariant variant = OutputVariant::position);

/// Unforced vector field H(x, xi).
State4 drift(const State4& x, const HkbParams& xi);

/// Analytic dH/dx. The damping entry carries +gamma, the true derivative.
Matrix4 jacobian(const State4& x, const HkbParams& xi);

/// One classical RK4 step of xdot = H(x) + B u with u held over the step.
/// `t` only labels a DivergenceError.
State4 step(const State4& x, const HkbParams& xi, const ControlInput& u, double dt, double t = 0.0);

/// Component-wise clamp to [-u_max, u_max].
ControlInput saturate(const ControlInput& u, double u_max);

/// Integrates from x0 over [0, T]; sample_count(T, dt) samples, controls[j]
/// applied over [t_j, t_j+1). Output positions are (x1, x3), velocities (x2, x4).
Trajectory simulate(const State4& x0, const HkbParams& xi, std::span<const ControlInput> controls,
                    double dt, double T);

/// Unforced integration.
Trajectory simulate_free(const State4& x0, const HkbParams& xi, double dt, double T);

State4 state_from_sample(const PlanarSample& s);
PlanarSample sample_from_state(const State4& x);

/// Reads alpha, beta, gamma, omega (defaults where absent).
HkbParams hkb_params_from(const KeyValueConfig& cfg);

bool all_finite(const State4& x);

}  // namespace waggle
