#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "waggle/error.hpp"
#include "waggle/hkb.hpp"

using namespace waggle;

namespace {

// Independent evaluation of the per-axis oscillator, written out longhand.
State4 drift_oracle(const State4& s, double a, double b, double g, double w) {
  auto axis = [&](double p, double v) { return -(a * v * v + b * p * p - g) * v - w * w * p; };
  return {s[1], axis(s[0], s[1]), s[3], axis(s[2], s[3])};
}

Matrix4 fd_jacobian(const State4& x, const HkbParams& xi, double h) {
  Matrix4 J;
  for (int c = 0; c < 4; ++c) {
    State4 xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    J.col(c) = (drift(xp, xi) - drift(xm, xi)) / (2.0 * h);
  }
  return J;
}

}  // namespace

TEST_SUITE("hkb") {
  TEST_CASE("drift at hand-evaluated points") {
    const HkbParams xi;
    CHECK(drift(State4::Zero(), xi) == State4::Zero());
    const State4 d = drift(State4(1, 0, 0, 0), xi);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(-0.0004).epsilon(1e-15));
    CHECK(d[2] == 0.0);
    CHECK(d[3] == 0.0);
    const State4 d2 = drift(State4(0, 1, 0, 0), HkbParams{1, 1, 1, 1});
    CHECK(d2 == State4(1, 0, 0, 0));
  }

  TEST_CASE("drift agrees with a longhand oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-2, 2);
    const HkbParams xi{0.3, 0.7, 0.2, 1.3};
    for (int i = 0; i < 50; ++i) {
      const State4 s(U(rng), U(rng), U(rng), U(rng));
      CHECK((drift(s, xi) - drift_oracle(s, 0.3, 0.7, 0.2, 1.3)).norm() < 1e-14);
    }
  }

  TEST_CASE("non-finite state is rejected") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(drift(State4(nan, 0, 0, 0), HkbParams{}), InvalidStateError);
    CHECK_THROWS_AS(jacobian(State4(0, 0, INFINITY, 0), HkbParams{}), InvalidStateError);
  }

  TEST_CASE("params validation") {
    CHECK_NOTHROW(HkbParams{}.validate());
    CHECK_THROWS_AS((HkbParams{0.01, 0.01, 0.01, 0.0}.validate()), ConfigError);
    CHECK_THROWS_AS((HkbParams{NAN, 0.01, 0.01, 0.02}.validate()), ConfigError);
  }

  TEST_CASE("origin Jacobian blocks") {
    const Matrix4 J = jacobian(State4::Zero(), HkbParams{});
    Matrix4 expect = Matrix4::Zero();
    expect(0, 1) = 1;
    expect(1, 0) = -0.0004;
    expect(1, 1) = 0.01;
    expect(2, 3) = 1;
    expect(3, 2) = -0.0004;
    expect(3, 3) = 0.01;
    CHECK((J - expect).norm() < 1e-15);
  }

  TEST_CASE("Jacobian has no cross-axis entries and matches finite differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2, 2);
    const HkbParams xi;
    for (int i = 0; i < 100; ++i) {
      const State4 x(U(rng), U(rng), U(rng), U(rng));
      const Matrix4 J = jacobian(x, xi);
      for (int r : {0, 1})
        for (int c : {2, 3}) {
          CHECK(J(r, c) == 0.0);
          CHECK(J(c, r) == 0.0);
        }
      const Matrix4 F = fd_jacobian(x, xi, 1e-5);
      CHECK((J - F).norm() / J.norm() < 1e-6);
    }
  }

  TEST_CASE("equilibrium is preserved exactly") {
    const HkbParams xi;
    for (double dt : {1e-3, 0.01, 0.5})
      CHECK(step(State4::Zero(), xi, ControlInput::Zero(), dt) == State4::Zero());
    const Trajectory t = simulate_free(State4::Zero(), xi, 0.01, 5.0);
    for (std::size_t j = 0; j < t.size(); ++j) CHECK(state_from_sample(t[j]) == State4::Zero());
  }

  TEST_CASE("sample count convention") {
    CHECK(sample_count(1.0, 0.01) == 101);
    CHECK(simulate_free(State4(0.1, 0, 0, 0), HkbParams{}, 0.01, 1.0).size() == 101);
    CHECK(sample_count(0.0, 0.01) == 1);
  }

  TEST_CASE("control enters the velocity rows to first order") {
    const HkbParams xi;
    const double dt = 1e-6;
    const State4 x(0.3, -0.2, 0.1, 0.4);
    const ControlInput u(0.7, 0.0);
    const State4 rk = step(x, xi, u, dt);
    const State4 euler = x + dt * (drift(x, xi) + input_matrix() * u);
    CHECK((rk - euler).norm() < 1e-10);
    CHECK((rk - step(x, xi, ControlInput::Zero(), dt))[1] == doctest::Approx(0.7 * dt).epsilon(1e-6));
  }

  TEST_CASE("RK4 empirical order on the fixed scenario") {
    const HkbParams xi;
    const State4 x0(0.1, 0, 0.1, 0);
    auto endpoint = [&](double dt) {
      const Trajectory t = simulate_free(x0, xi, dt, 10.0);
      return state_from_sample(t[t.size() - 1]);
    };
    const State4 ref = endpoint(1e-3);
    // Coarse steps keep the error well above the reference's own rounding.
    const double e1 = (endpoint(1.0) - ref).norm();
    const double e2 = (endpoint(0.5) - ref).norm();
    const double order = std::log2(e1 / e2);
    CHECK(order >= 3.5);
    CHECK(order <= 4.5);
  }

  TEST_CASE("axis decoupling") {
    const HkbParams xi;
    std::vector<ControlInput> u(sample_count(20.0, 0.01), ControlInput(0.05, 0.0));
    const Trajectory t = simulate(State4(0.4, 0.1, 0, 0), xi, u, 0.01, 20.0);
    for (std::size_t j = 0; j < t.size(); ++j) {
      CHECK(t.y()[j] == 0.0);
      CHECK(t.vy()[j] == 0.0);
    }
  }

  TEST_CASE("unforced orbits stay bounded") {
    // Recorded constant: 50 unit-ball starts peaked at 8.07, the transient from
    // an initial velocity near 1 before the quadratic damping absorbs it.
    const HkbParams xi;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N;
    for (int i = 0; i < 3; ++i) {
      State4 x0(N(rng), N(rng), N(rng), N(rng));
      x0 *= 0.9 / x0.norm();
      const Trajectory t = simulate_free(x0, xi, 0.01, 300.0);
      double sup = 0.0;
      for (std::size_t j = 0; j < t.size(); ++j) sup = std::max(sup, state_from_sample(t[j]).norm());
      CHECK(std::isfinite(sup));
      CHECK(sup < 10.0);
    }
  }

  TEST_CASE("divergence carries the failing time") {
    // Cubic damping at this amplitude makes the explicit step unstable at once.
    const HkbParams xi{1.0, 1.0, 0.01, 0.02};
    try {
      (void)simulate_free(State4(1e80, 1e80, 0, 0), xi, 0.1, 10.0);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(e.time() >= 0.0);
      CHECK(e.time() <= 10.0);
    }
  }

  TEST_CASE("saturation clamps componentwise") {
    CHECK(saturate(ControlInput(3, -4), 1.0) == ControlInput(1, -1));
    CHECK(saturate(ControlInput(0.5, -0.2), INFINITY) == ControlInput(0.5, -0.2));
  }

  TEST_CASE("params from key-value config") {
    const HkbParams xi = hkb_params_from(KeyValueConfig::parse("alpha = 0.5\nomega = 2\n"));
    CHECK(xi.alpha == 0.5);
    CHECK(xi.beta == 0.01);
    CHECK(xi.omega == 2.0);
  }
}
