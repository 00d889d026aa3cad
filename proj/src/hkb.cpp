#include "waggle/hkb.hpp"

#include <algorithm>
#include <cmath>

#include "waggle/error.hpp"

namespace waggle {

void HkbParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma) || !std::isfinite(omega))
    throw ConfigError("HKB parameters must be finite");
  if (!(omega > 0.0)) throw ConfigError("omega must be positive");
}

InputMatrix input_matrix() {
  InputMatrix b = InputMatrix::Zero();
  b(1, 0) = 1.0;
  b(3, 1) = 1.0;
  return b;
}

OutputMatrix output_matrix(OutputVariant variant) {
  OutputMatrix c = OutputMatrix::Zero();
  if (variant == OutputVariant::position) {
    c(0, 0) = 1.0;
    c(1, 2) = 1.0;
  } else {
    c(0, 1) = 1.0;
    c(1, 3) = 1.0;
  }
  return c;
}

bool all_finite(const State4& x) { return x.allFinite(); }

namespace {

// Per-axis acceleration of the unforced oscillator.
inline double axis_accel(double p, double v, const HkbParams& xi) {
  return -(xi.alpha * v * v + xi.beta * p * p - xi.gamma) * v - xi.omega * xi.omega * p;
}

inline State4 field(const State4& x, const HkbParams& xi, const ControlInput& u) {
  return {x[1], axis_accel(x[0], x[1], xi) + u[0], x[3], axis_accel(x[2], x[3], xi) + u[1]};
}

}  // namespace

State4 drift(const State4& x, const HkbParams& xi) {
  if (!all_finite(x)) throw InvalidStateError("drift: non-finite state");
  return field(x, xi, ControlInput::Zero());
}

Matrix4 jacobian(const State4& x, const HkbParams& xi) {
  if (!all_finite(x)) throw InvalidStateError("jacobian: non-finite state");
  Matrix4 j = Matrix4::Zero();
  const double w2 = xi.omega * xi.omega;
  for (int axis = 0; axis < 2; ++axis) {
    const int r = 2 * axis;
    const double p = x[r];
    const double v = x[r + 1];
    j(r, r + 1) = 1.0;
    j(r + 1, r) = -2.0 * xi.beta * p * v - w2;
    j(r + 1, r + 1) = -3.0 * xi.alpha * v * v - xi.beta * p * p + xi.gamma;
  }
  return j;
}

State4 step(const State4& x, const HkbParams& xi, const ControlInput& u, double dt, double t) {
  if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
  if (!all_finite(x) || !u.allFinite()) throw InvalidStateError("step: non-finite state or input");
  const State4 k1 = field(x, xi, u);
  const State4 k2 = field(x + 0.5 * dt * k1, xi, u);
  const State4 k3 = field(x + 0.5 * dt * k2, xi, u);
  const State4 k4 = field(x + dt * k3, xi, u);
  State4 next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(next)) throw DivergenceError(t + dt);
  return next;
}

ControlInput saturate(const ControlInput& u, double u_max) {
  if (!(u_max >= 0.0)) throw ConfigError("u_max must be non-negative");
  return {std::clamp(u[0], -u_max, u_max), std::clamp(u[1], -u_max, u_max)};
}

State4 state_from_sample(const PlanarSample& s) {
  return {s.position.x(), s.velocity.x(), s.position.y(), s.velocity.y()};
}

PlanarSample sample_from_state(const State4& x) { return {{x[0], x[2]}, {x[1], x[3]}}; }

Trajectory simulate(const State4& x0, const HkbParams& xi, std::span<const ControlInput> controls,
                    double dt, double T) {
  xi.validate();
  if (!all_finite(x0)) throw InvalidStateError("simulate: non-finite initial state");
  const std::size_t n = sample_count(T, dt);
  if (controls.size() + 1 < n) throw AlignmentError("simulate: control sequence shorter than horizon");

  Trajectory out(dt);
  out.reserve(n);
  State4 x = x0;
  out.push_back(sample_from_state(x));
  for (std::size_t j = 0; j + 1 < n; ++j) {
    x = step(x, xi, controls[j], dt, out.time(j));
    out.push_back(sample_from_state(x));
  }
  return out;
}

Trajectory simulate_free(const State4& x0, const HkbParams& xi, double dt, double T) {
  const std::vector<ControlInput> zeros(sample_count(T, dt), ControlInput::Zero());
  return simulate(x0, xi, zeros, dt, T);
}

HkbParams hkb_params_from(const KeyValueConfig& cfg) {
  HkbParams p;
  p.alpha = cfg.get_double("alpha", p.alpha);
  p.beta = cfg.get_double("beta", p.beta);
  p.gamma = cfg.get_double("gamma", p.gamma);
  p.omega = cfg.get_double("omega", p.omega);
  p.validate();
  return p;
}

}  // namespace waggle
