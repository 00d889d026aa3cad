#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "waggle/online.hpp"
#include "waggle/opc.hpp"

namespace waggle {

enum class ControllerKind { ilc, pdc, opc };

/// "ilc" | "pdc" | "opc"; ConfigError otherwise.
ControllerKind parse_controller(std::string_view name);
std::string_view to_string(ControllerKind kind);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::ilc;
  OnlineContext ctx;
  OpcWeights opc;
  int opc_horizon = 20;
  void validate() const;
};

/// One tick of the selected strategy.
///
/// ilc: the threshold-gated learning step.
/// pdc: u = kp*e + kv*edot on the latest HP sample.
/// opc: first input of the LQ tracking problem against the HP sample
///      extrapolated linearly over the horizon.
/// Without an HP sample every strategy applies the held control.
OnlineStepResult controller_step(const ControllerSpec& spec, const OnlineState& state,
                                 const std::optional<HpObservation>& hp, const std::optional<Vec2>& feature,
                                 const ControlInput& feedforward);

struct ClosedLoopRun {
  Trajectory vp;
  std::vector<OnlineDiagnostics> diag;  ///< one per step taken, vp.size() - 1 entries
};

/// Plays `leader` (already on the tick grid, dt = spec.ctx.dt) against the
/// virtual player from x0. VP sample j is the state before the j-th step; the
/// controller at tick j sees leader sample j. `feature` and `feedforward`,
/// when non-empty, are indexed by tick and cycled.
ClosedLoopRun run_closed_loop(const ControllerSpec& spec, const Trajectory& leader, const State4& x0,
                              const std::optional<Series2>& feature = std::nullopt,
                              std::span<const ControlInput> feedforward = {});

}  // namespace waggle
