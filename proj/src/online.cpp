#include "waggle/online.hpp"

#include <chrono>
#include <cmath>

#include "waggle/error.hpp"

namespace waggle {

void OnlineConfig::validate() const {
  if (!(eps_th > 0.0)) throw ConfigError("eps_th must be positive");
  if (max_inner_iters < 1) throw ConfigError("max_inner_iters must be >= 1");
  if (!(eps_floor > 0.0)) throw ConfigError("eps_floor must be positive");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
}

OnlineStepResult online_step(const OnlineState& state, const std::optional<HpObservation>& hp,
                             const std::optional<Vec2>& feature, const ControlInput& feedforward,
                             const OnlineContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  OnlineStepResult out{state.u_held, state, {}};

  if (hp) {
    const Vec2 p_k{state.x[0], state.x[2]};
    const Vec2 v_k{state.x[1], state.x[3]};
    const double eps = error_rate(hp->position, p_k, ctx.cfg.eps_floor);
    out.diag.eps = eps;

    int k = 0;
    ControlInput u = feedforward;
    // Without re-simulation eps is frozen within the tick, so the loop runs to
    // the cap whenever it is entered.
    while (eps > ctx.cfg.eps_th && k < ctx.cfg.max_inner_iters) {
      const Vec2 e = hp->position - p_k;
      const Vec2 edot = hp->velocity - v_k;
      Vec2 s = Vec2::Zero();
      if (feature) s = *feature - (ctx.feature_channel == FeatureChannel::position ? p_k : v_k);
      u = u + ctx.gains.kp * e + ctx.gains.kv * edot + ctx.gains.ks * s;
      ++k;
    }
    if (k > 0) {
      out.u = std::isfinite(ctx.u_max) ? saturate(u, ctx.u_max) : u;
      out.diag.refined = true;
    }
    out.diag.inner_iters = k;
  }

  const double t = state.time(ctx.dt);
  out.next.x = step(state.x, ctx.xi, out.u, ctx.dt, t);
  out.next.u_held = out.u;
  out.next.k = 0;
  out.next.tick = state.tick + 1;

  out.diag.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.diag.overrun = out.diag.elapsed_s > ctx.budget_s;
  return out;
}

}  // namespace waggle
