#pragma once

#include <Eigen/Core>
#include <span>

#include "waggle/hkb.hpp"

namespace waggle {

/// Receding-horizon tracking weights: stage cost |y - r|^2_Q + |u|^2_R.
struct OpcWeights {
  Eigen::Matrix2d Q = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d R = 0.1 * Eigen::Matrix2d::Identity();
};

/// x_{i+1} = A x_i + B u_i + c, exact zero-order-hold form of the dynamics
/// linearized at a point.
struct AffineModel {
  Matrix4 A;
  InputMatrix B;
  State4 c;
};

AffineModel discretize_linearization(const State4& x_lin, const HkbParams& xi, double dt);
AffineModel discretize_zoh(const Matrix4& A_c, const InputMatrix& B_c, const State4& c_c, double dt);

/// First input of the finite-horizon LQ tracking problem on the dynamics
/// linearized at x. `reference[i]` is the target output at step i+1; the
/// horizon is reference.size(). ConfigError when the Riccati recursion meets a
/// non-positive-definite input Hessian.
ControlInput optimal_tracking_baseline(const State4& x, const HkbParams& xi, std::span<const Vec2> reference,
                                       const OpcWeights& weights, double dt,
                                       OutputVariant output = OutputVariant::position);

}  // namespace waggle
