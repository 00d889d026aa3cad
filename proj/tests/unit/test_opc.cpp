#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "waggle/error.hpp"
#include "waggle/opc.hpp"

using namespace waggle;

namespace {

// Batch least squares over the stacked inputs: the predicted outputs are
// affine in (u_0..u_{N-1}), so the optimum solves one normal equation.
ControlInput batch_first_input(const AffineModel& m, const State4& x0, const std::vector<Vec2>& ref,
                               const OpcWeights& w, const OutputMatrix& C) {
  const int N = static_cast<int>(ref.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * N, 2 * N);
  Eigen::VectorXd f(2 * N);
  State4 free = x0;
  std::vector<Matrix4> powers{Matrix4::Identity()};
  for (int i = 1; i <= N; ++i) powers.push_back(m.A * powers.back());
  for (int i = 0; i < N; ++i) {
    free = m.A * free + m.c;
    f.segment<2>(2 * i) = C * free - ref[i];
    for (int j = 0; j <= i; ++j) G.block<2, 2>(2 * i, 2 * j) = C * powers[i - j] * m.B;
  }
  Eigen::MatrixXd Qb = Eigen::MatrixXd::Zero(2 * N, 2 * N), Rb = Qb;
  for (int i = 0; i < N; ++i) {
    Qb.block<2, 2>(2 * i, 2 * i) = w.Q;
    Rb.block<2, 2>(2 * i, 2 * i) = w.R;
  }
  const Eigen::MatrixXd H = G.transpose() * Qb * G + Rb;
  const Eigen::VectorXd u = H.ldlt().solve(-G.transpose() * Qb * f);
  return u.head<2>();
}

}  // namespace

TEST_SUITE("opc") {
  TEST_CASE("discretization of a linear oscillator agrees with fine integration") {
    const HkbParams xi{0.0, 0.0, 0.0, 0.7};
    const double dt = 0.05;
    const State4 x(0.3, -0.1, 0.2, 0.4);
    const ControlInput u(0.5, -0.25);
    const AffineModel m = discretize_linearization(x, xi, dt);
    State4 fine = x;
    for (int i = 0; i < 100; ++i) fine = step(fine, xi, u, dt / 100.0);
    CHECK((m.A * x + m.B * u + m.c - fine).norm() < 1e-12);
  }

  TEST_CASE("double integrator matches a batch least-squares solve") {
    // alpha = beta = gamma = 0 and omega -> 0 leaves two decoupled double integrators.
    const HkbParams xi{0.0, 0.0, 0.0, 1e-9};
    const double dt = 0.1;
    const AffineModel m = discretize_linearization(State4::Zero(), xi, dt);
    Eigen::Matrix2d A_di;
    A_di << 1, dt, 0, 1;
    CHECK((m.A.block<2, 2>(0, 0) - A_di).norm() < 1e-12);
    CHECK(m.B(0, 0) == doctest::Approx(dt * dt / 2).epsilon(1e-9));
    CHECK(m.B(1, 0) == doctest::Approx(dt).epsilon(1e-9));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    OpcWeights w;
    w.Q = Eigen::Vector2d(2.0, 0.5).asDiagonal();
    w.R = Eigen::Vector2d(0.1, 0.3).asDiagonal();
    for (int trial = 0; trial < 5; ++trial) {
      const State4 x(U(rng), U(rng), U(rng), U(rng));
      std::vector<Vec2> ref(15);
      for (auto& r : ref) r = Vec2(U(rng), U(rng));
      const ControlInput got = optimal_tracking_baseline(x, xi, ref, w, dt);
      const ControlInput want = batch_first_input(discretize_linearization(x, xi, dt), x, ref, w, output_matrix());
      CHECK((got - want).norm() < 1e-8 * std::max(1.0, want.norm()));
    }
  }

  TEST_CASE("nonlinear plant matches the batch solve on its linearization") {
    const HkbParams xi;
    const double dt = 1.0 / 60.0;
    const State4 x(0.4, 0.2, -0.3, 0.1);
    std::vector<Vec2> ref(20);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = Vec2(0.5 + 0.01 * i, -0.3);
    const OpcWeights w;
    for (OutputVariant out : {OutputVariant::position, OutputVariant::velocity}) {
      const ControlInput got = optimal_tracking_baseline(x, xi, ref, w, dt, out);
      const ControlInput want = batch_first_input(discretize_linearization(x, xi, dt), x, ref, w, output_matrix(out));
      CHECK((got - want).norm() < 1e-8 * std::max(1.0, want.norm()));
    }
  }

  TEST_CASE("horizon one is a one-step least-squares problem") {
    const HkbParams xi;
    const double dt = 0.05;
    const State4 x(0.1, 0.3, -0.2, 0.0);
    const Vec2 r(0.2, -0.1);
    OpcWeights w;
    w.R = 0.01 * Eigen::Matrix2d::Identity();
    const AffineModel m = discretize_linearization(x, xi, dt);
    const OutputMatrix C = output_matrix();
    const Eigen::Matrix<double, 2, 2> CB = C * m.B;
    const ControlInput closed =
        (CB.transpose() * w.Q * CB + w.R).inverse() * CB.transpose() * w.Q * (r - C * (m.A * x + m.c));
    const std::vector<Vec2> ref{r};
    CHECK((optimal_tracking_baseline(x, xi, ref, w, dt) - closed).norm() < 1e-12);
  }

  TEST_CASE("expensive input on the reference gives no effort") {
    const HkbParams xi;
    const State4 x(0.3, 0.0, 0.2, 0.0);
    std::vector<Vec2> ref(20, Vec2(0.3, 0.2));
    OpcWeights w;
    w.R = 1e8 * Eigen::Matrix2d::Identity();
    CHECK(optimal_tracking_baseline(x, xi, ref, w, 1.0 / 60.0).norm() < 1e-6);
  }

  TEST_CASE("invalid weights") {
    const HkbParams xi;
    std::vector<Vec2> ref(5, Vec2::Zero());
    OpcWeights w;
    w.Q << 1, 0, 0, -1;
    CHECK_THROWS_AS(optimal_tracking_baseline(State4::Zero(), xi, ref, w, 0.01), ConfigError);
    w = {};
    w.R = -Eigen::Matrix2d::Identity();
    CHECK_THROWS_AS(optimal_tracking_baseline(State4::Zero(), xi, ref, w, 0.01), ConfigError);
    CHECK_THROWS_AS(optimal_tracking_baseline(State4::Zero(), xi, std::vector<Vec2>{}, OpcWeights{}, 0.01),
                    ConfigError);
  }
}
