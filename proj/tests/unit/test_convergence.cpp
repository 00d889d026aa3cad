#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "waggle/controllers.hpp"
#include "waggle/convergence.hpp"
#include "waggle/error.hpp"

using namespace waggle;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Direct scan: weight, root of the summed squares, running maximum.
double scan_lambda_norm(const std::vector<std::vector<double>>& ch, double lambda, double dt) {
  double best = 0.0;
  for (std::size_t j = 0; j < ch.front().size(); ++j) {
    double sq = 0.0;
    for (const auto& c : ch) sq += c[j] * c[j];
    best = std::max(best, std::exp(-lambda * (static_cast<double>(j) * dt)) * std::sqrt(sq));
  }
  return best;
}

}  // namespace

TEST_SUITE("convergence") {
  TEST_CASE("Lipschitz constant at the origin") {
    StateEnvelope env;
    env.states.push_back(State4::Zero());
    const double expect = std::sqrt(2.0 * (1.0 + std::pow(0.02, 4) + 0.01 * 0.01));
    CHECK(lipschitz_constant(env, HkbParams{}) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(expect == doctest::Approx(1.41435).epsilon(1e-4));
    CHECK_THROWS_AS(lipschitz_constant(StateEnvelope{}, HkbParams{}), ConfigError);
  }

  TEST_CASE("enlarging the envelope never lowers the constant") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    StateEnvelope env;
    double prev = 0.0;
    for (int i = 0; i < 200; ++i) {
      env.states.emplace_back(U(rng), U(rng), U(rng), U(rng));
      const double c = lipschitz_constant(env, HkbParams{});
      CHECK(c >= prev);
      prev = c;
    }
  }

  TEST_CASE("trajectory envelope against a dense grid over the unit box") {
    const HkbParams xi;
    std::vector<Trajectory> runs{simulate_free(State4(0.5, 0.0, -0.5, 0.0), xi, 0.05, 400.0)};
    const double traj = lipschitz_constant(StateEnvelope::from_trajectories(runs), xi);
    const double grid = lipschitz_constant(StateEnvelope::box(1.0, 9), xi);
    MESSAGE("trajectory envelope " << traj << ", grid " << grid);
    // Within the unit box the Jacobian varies by parts in 1e2 only.
    CHECK(std::abs(traj - grid) / grid < 0.05);
  }

  TEST_CASE("lambda norm examples") {
    const double dt = 0.01;
    const std::size_t n = 500;
    std::vector<double> c1(n, 3.0), c2(n, 4.0);
    CHECK(lambda_norm({c1, c2}, 1.0, dt) == doctest::Approx(5.0).epsilon(1e-15));

    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = std::exp(0.7 * (static_cast<double>(j) * dt));
    CHECK(lambda_norm({g}, 0.7, dt) == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 20; ++i) {
      std::vector<std::vector<double>> ch(3, std::vector<double>(257));
      for (auto& c : ch)
        for (auto& v : c) v = U(rng);
      const double got = lambda_norm({ch[0], ch[1], ch[2]}, 0.3, 0.02);
      CHECK(std::abs(got - scan_lambda_norm(ch, 0.3, 0.02)) < 1e-12);
    }
  }

  TEST_CASE("lambda norm monotonicity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> a(200), b(200);
      for (std::size_t j = 0; j < a.size(); ++j) {
        a[j] = U(rng);
        b[j] = a[j] + U(rng);
      }
      CHECK(lambda_norm({b}, 1.0, 0.01) >= lambda_norm({a}, 1.0, 0.01));
    }
    // Peak away from t = 0: heavier discounting strictly shrinks the norm.
    std::vector<double> late(300, 0.0);
    late[250] = 1.0;
    double prev = kInf;
    for (double lam : {0.1, 0.5, 1.0, 3.0, 10.0}) {
      const double v = lambda_norm({late}, lam, 0.01);
      CHECK(v < prev);
      prev = v;
    }
  }

  TEST_CASE("sigma1 with the position output is 8 for every gain") {
    const BoundConfig cfg;
    for (double kv : {0.0, 0.01, 0.5, 1.0, 7.0}) {
      const BoundReport r = sigma_components({0.31, kv, 0.02}, 1.41435, cfg);
      CHECK(r.sigma1 == 8.0);
      CHECK_FALSE(r.contraction_holds);
      CHECK(r.terminal_u_bound == kInf);
    }
  }

  TEST_CASE("sigma1 with the velocity output") {
    BoundConfig cfg;
    cfg.output = OutputVariant::velocity;
    for (double kv : {0.0, 0.25, 1.0, 1.5})
      CHECK(sigma_components({0.31, kv, 0.0}, 1.0, cfg).sigma1 == doctest::Approx(8.0 * (1 - kv) * (1 - kv)));
  }

  TEST_CASE("zero feature gain switches off sigma3 and eta") {
    const BoundReport r = sigma_components({0.31, 0.01, 0.0}, 1.41435, BoundConfig{}, 3.0);
    CHECK(r.sigma3 == 0.0);
    CHECK(r.eta == 0.0);
    const BoundReport s = sigma_components({0.31, 0.01, 0.02}, 1.41435, BoundConfig{}, 3.0);
    CHECK(s.eta == doctest::Approx(8 * 0.02 * 0.02 * 3.0));
    CHECK(s.sigma3 > 0.0);
  }

  TEST_CASE("sigma2 and sigma3 follow their closed forms") {
    BoundConfig cfg;
    cfg.T = 2.0;
    cfg.lambda = 3.0;
    const double ch = 0.8;
    const BoundReport r = sigma_components({0.4, 0.1, 0.05}, ch, cfg);
    const double g = std::exp((2 * ch + 1) * 2.0);
    // |B|^2 = 2, |C|^2 = 2, |kp C|^2 = 2 kp^2.
    CHECK(r.sigma2 == doctest::Approx(2 * g * (4 * 2 * 0.16 + 4 * ch * ch * 2 * 0.01) / 6.0).epsilon(1e-12));
    CHECK(r.sigma3 == doctest::Approx(4 * 2 * 2 * 0.0025 * g / 3.0).epsilon(1e-12));
    CHECK(r.sigma == doctest::Approx(r.sigma1 + r.sigma2 + r.sigma3));
  }

  TEST_CASE("terminal bounds") {
    const BoundConfig cfg{1.0, 1.0, OutputVariant::position};
    const TerminalBounds a = theorem_bound(0.5, 1.0, 1.0, cfg);
    CHECK(a.contraction_holds);
    CHECK(a.u == 2.0);
    CHECK(a.x == doctest::Approx(gronwall_factor(1.0, cfg) * 2.0));
    const TerminalBounds z = theorem_bound(0.3, 0.0, 1.0, cfg);
    CHECK(z.u == 0.0);
    CHECK(z.x == 0.0);
    for (double s : {1.0, 1.5, 8.0}) {
      const TerminalBounds b = theorem_bound(s, 1.0, 1.0, cfg);
      CHECK_FALSE(b.contraction_holds);
      CHECK(b.u == kInf);
      CHECK(b.x == kInf);
    }
    CHECK(gronwall_factor(1.0, cfg) == doctest::Approx(2.0 * std::exp(3.0) / 2.0));
  }

  TEST_CASE("oracle warm start gives zero error norms") {
    const HkbParams xi;
    const auto o = make_synthetic_oracle(xi, 0.01, 10.0);
    const IlcTrialResult trial = run_ilc_trial({xi, o.x0}, o.hp, std::nullopt, {0.31, 0.01, 0.0}, 3, o.u_h);
    BoundReport r = sigma_components({0.31, 0.01, 0.0}, 1.5, BoundConfig{1.0, 10.0});
    empirical_contraction(r, trial, o.u_h, o.hp);
    REQUIRE(r.empirical.size() == 4);
    for (const auto& row : r.empirical) {
      CHECK(row.du_lambda_sq == 0.0);
      CHECK(row.dx_lambda_sq == 0.0);
    }
    CHECK(r.gronwall_violations.empty());
    CHECK(r.recursion_violations.empty());
    CHECK_THROWS_AS(empirical_contraction(r, trial, Series2{}, o.hp), ConfigError);
  }

  TEST_CASE("realizable run satisfies the Gronwall bound and the recursion") {
    const HkbParams xi;
    const double dt = 0.01, T = 30.0;
    const auto o = make_synthetic_oracle(xi, dt, T);
    const IlcGains g{0.31, 0.01, 0.0};
    const IlcTrialResult trial = run_ilc_trial({xi, o.x0}, o.hp, std::nullopt, g, 10);
    const double ch = lipschitz_constant(StateEnvelope::from_trajectories(trial.trajectories), xi);
    BoundReport r = sigma_components(g, ch, BoundConfig{1.0, T});
    empirical_contraction(r, trial, o.u_h, o.hp);
    CHECK(r.gronwall_violations.empty());
    // sigma >= 8 here, so the recursion is weak; both facts are reported.
    CHECK(r.sigma >= 8.0);
    CHECK(r.recursion_violations.empty());
    const std::string text = to_text(r);
    CHECK(text.find("sigma1 = 8\n") != std::string::npos);
    CHECK(bounds_csv(r).rfind("k,du_lambda_sq,dx_lambda_sq,rhs_bound\n", 0) == 0);
  }
}
