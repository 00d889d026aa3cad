#include "waggle/closed_loop.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "waggle/error.hpp"

namespace waggle {

ControllerKind parse_controller(std::string_view name) {
  if (name == "ilc") return ControllerKind::ilc;
  if (name == "pdc") return ControllerKind::pdc;
  if (name == "opc") return ControllerKind::opc;
  throw ConfigError("unknown controller '" + std::string(name) + "' (expected ilc, pdc or opc)");
}

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::ilc: return "ilc";
    case ControllerKind::pdc: return "pdc";
    case ControllerKind::opc: return "opc";
  }
  return "ilc";
}

void ControllerSpec::validate() const {
  ctx.cfg.validate();
  ctx.gains.validate();
  ctx.xi.validate();
  if (!(ctx.dt > 0.0) || !std::isfinite(ctx.dt)) throw ConfigError("tick period must be positive");
  if (!(ctx.u_max >= 0.0)) throw ConfigError("u_max must be non-negative");
  if (opc_horizon < 1) throw ConfigError("OPC horizon must be at least one step");
}

namespace {

OnlineStepResult direct_step(const ControllerSpec& spec, const OnlineState& state,
                             const std::optional<HpObservation>& hp) {
  const auto start = std::chrono::steady_clock::now();
  const OnlineContext& ctx = spec.ctx;
  OnlineStepResult out{state.u_held, state, {}};
  if (hp) {
    const Vec2 p_k{state.x[0], state.x[2]};
    const Vec2 v_k{state.x[1], state.x[3]};
    out.diag.eps = error_rate(hp->position, p_k, ctx.cfg.eps_floor);
    ControlInput u;
    if (spec.kind == ControllerKind::pdc) {
      u = pd_control(hp->position - p_k, hp->velocity - v_k, ctx.gains);
    } else {
      std::vector<Vec2> ref(static_cast<std::size_t>(spec.opc_horizon));
      for (std::size_t i = 0; i < ref.size(); ++i)
        ref[i] = hp->position + hp->velocity * (static_cast<double>(i + 1) * ctx.dt);
      u = optimal_tracking_baseline(state.x, ctx.xi, ref, spec.opc, ctx.dt);
    }
    out.u = std::isfinite(ctx.u_max) ? saturate(u, ctx.u_max) : u;
  }
  out.next.x = step(state.x, ctx.xi, out.u, ctx.dt, state.time(ctx.dt));
  out.next.u_held = out.u;
  out.next.k = 0;
  out.next.tick = state.tick + 1;
  out.diag.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.diag.overrun = out.diag.elapsed_s > ctx.budget_s;
  return out;
}

}  // namespace

OnlineStepResult controller_step(const ControllerSpec& spec, const OnlineState& state,
                                 const std::optional<HpObservation>& hp, const std::optional<Vec2>& feature,
                                 const ControlInput& feedforward) {
  if (spec.kind == ControllerKind::ilc) return online_step(state, hp, feature, feedforward, spec.ctx);
  return direct_step(spec, state, hp);
}

ClosedLoopRun run_closed_loop(const ControllerSpec& spec, const Trajectory& leader, const State4& x0,
                              const std::optional<Series2>& feature, std::span<const ControlInput> feedforward) {
  spec.validate();
  if (leader.dt() != spec.ctx.dt) throw AlignmentError("leader not sampled at the tick period");
  if (feature && feature->size() == 0) throw AlignmentError("empty feature signal");

  ClosedLoopRun run{Trajectory(leader.dt(), leader.t0()), {}};
  run.vp.reserve(leader.size());
  if (leader.size() > 0) run.diag.reserve(leader.size() - 1);

  OnlineState state;
  state.x = x0;
  for (std::size_t j = 0; j < leader.size(); ++j) {
    run.vp.push_back(sample_from_state(state.x));
    if (j + 1 == leader.size()) break;
    const PlanarSample s = leader[j];
    const HpObservation hp{s.position, s.velocity};
    std::optional<Vec2> v;
    if (feature) v = feature->at(j % feature->size());
    const ControlInput ff = feedforward.empty() ? ControlInput::Zero() : feedforward[j % feedforward.size()];
    OnlineStepResult r = controller_step(spec, state, hp, v, ff);
    run.diag.push_back(r.diag);
    state = r.next;
  }
  return run;
}

}  // namespace waggle
