#pragma once

#include <cstddef>
#include <limits>
#include <optional>

#include "waggle/controllers.hpp"
#include "waggle/hkb.hpp"

namespace waggle {

struct OnlineConfig {
  double eps_th = 0.05;       ///< error-rate threshold
  double T = 30.0;            ///< nominal duration; bound computations only
  int max_inner_iters = 10;   ///< refinement cap per tick
  double eps_floor = 1e-3;    ///< error-rate denominator floor

  void validate() const;
};

/// Everything that stays fixed while a session ticks.
struct OnlineContext {
  OnlineConfig cfg;
  IlcGains gains;
  HkbParams xi;
  double dt = 1.0 / 60.0;
  FeatureChannel feature_channel = FeatureChannel::position;
  double u_max = std::numeric_limits<double>::infinity();
  /// Wall-clock budget per step; exceeding it flags an overrun.
  double budget_s = std::numeric_limits<double>::infinity();
};

struct HpObservation {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

struct OnlineState {
  State4 x = State4::Zero();
  ControlInput u_held = ControlInput::Zero();
  int k = 0;
  std::size_t tick = 0;

  double time(double dt) const { return static_cast<double>(tick) * dt; }
};

struct OnlineDiagnostics {
  double eps = std::numeric_limits<double>::quiet_NaN();  ///< NaN until an HP sample exists
  int inner_iters = 0;
  bool refined = false;
  bool overrun = false;
  double elapsed_s = 0.0;
};

struct OnlineStepResult {
  ControlInput u;
  OnlineState next;
  OnlineDiagnostics diag;
};

/// One tick of the threshold-gated learning loop.
///
/// While the error rate exceeds eps_th the tick's control is rebuilt from the
/// feedforward sample by repeated law increments on the latest measured
/// (e, edot, s), at most max_inner_iters times; the plant is not re-simulated
/// between increments. Otherwise the held control is reused. Either way the
/// plant then advances one step and the inner counter resets.
OnlineStepResult online_step(const OnlineState& state, const std::optional<HpObservation>& hp,
                             const std::optional<Vec2>& feature, const ControlInput& feedforward,
                             const OnlineContext& ctx);

}  // namespace waggle
