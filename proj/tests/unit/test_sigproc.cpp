#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "waggle/error.hpp"
#include "waggle/sigproc.hpp"

using namespace waggle;

namespace {

Trajectory from_positions(double dt, std::size_t n, auto&& fx, auto&& fy) {
  Trajectory t(dt);
  for (std::size_t j = 0; j < n; ++j) t.push_back(fx(j * dt), fy(j * dt), 0.0, 0.0);
  return t;
}

std::filesystem::path temp_file(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "waggle_sigproc_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("sigproc") {
  TEST_CASE("moving average identity and constants") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1, 1);
    Trajectory t(0.01);
    for (int j = 0; j < 50; ++j) t.push_back(U(rng), U(rng), U(rng), U(rng));
    CHECK(moving_average(t, {1, FilterMode::centered}) == t);
    CHECK(moving_average(t, {1, FilterMode::causal}) == t);

    Trajectory c(0.01);
    for (int j = 0; j < 20; ++j) c.push_back(2.5, -1.0, 0.0, 0.0);
    for (int w : {3, 5, 9}) {
      const Trajectory m = moving_average(c, {w, FilterMode::centered});
      for (std::size_t j = 0; j < m.size(); ++j) {
        CHECK(m.x()[j] == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(m.y()[j] == doctest::Approx(-1.0).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("alternating series with a centered 3-window") {
    const Trajectory t = from_positions(0.1, 12, [](double s) { return std::fmod(std::round(s * 10), 2.0); },
                                        [](double) { return 0.0; });
    const Trajectory m = moving_average(t, {3, FilterMode::centered});
    for (std::size_t j = 1; j + 1 < m.size(); ++j) {
      const double oracle = (t.x()[j - 1] + t.x()[j] + t.x()[j + 1]) / 3.0;
      CHECK(m.x()[j] == doctest::Approx(oracle).epsilon(1e-15));
      CHECK((std::abs(m.x()[j] - 1.0 / 3.0) < 1e-15 || std::abs(m.x()[j] - 2.0 / 3.0) < 1e-15));
    }
  }

  TEST_CASE("moving average is linear and stays within the input range") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    Trajectory a(0.01), b(0.01), s(0.01);
    for (int j = 0; j < 40; ++j) {
      const double p = U(rng), q = U(rng);
      a.push_back(p, 0, 0, 0);
      b.push_back(q, 0, 0, 0);
      s.push_back(2.0 * p + 3.0 * q, 0, 0, 0);
    }
    for (FilterMode mode : {FilterMode::centered, FilterMode::causal}) {
      const FilterSpec f{5, mode};
      const Trajectory ma = moving_average(a, f), mb = moving_average(b, f), ms = moving_average(s, f);
      double lo = 1e9, hi = -1e9;
      for (std::size_t j = 0; j < a.size(); ++j) {
        lo = std::min(lo, a.x()[j]);
        hi = std::max(hi, a.x()[j]);
      }
      for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(ms.x()[j] == doctest::Approx(2.0 * ma.x()[j] + 3.0 * mb.x()[j]).epsilon(1e-12));
        CHECK(ma.x()[j] >= lo);
        CHECK(ma.x()[j] <= hi);
      }
    }
  }

  TEST_CASE("filter spec validation") {
    CHECK_THROWS_AS((FilterSpec{4, FilterMode::centered}.validate()), ConfigError);
    CHECK_NOTHROW((FilterSpec{4, FilterMode::causal}.validate()));
    CHECK_THROWS_AS((FilterSpec{0, FilterMode::causal}.validate()), ConfigError);
  }

  TEST_CASE("velocity of a ramp, a constant and a sine") {
    const Trajectory ramp =
        estimate_velocity(from_positions(0.01, 30, [](double t) { return 0.7 * t; }, [](double t) { return -2.0 * t; }));
    for (std::size_t j = 0; j < ramp.size(); ++j) {
      CHECK(ramp.vx()[j] == doctest::Approx(0.7).epsilon(1e-9));
      CHECK(ramp.vy()[j] == doctest::Approx(-2.0).epsilon(1e-9));
    }
    const Trajectory flat =
        estimate_velocity(from_positions(0.01, 10, [](double) { return 3.0; }, [](double) { return 1.0; }));
    for (std::size_t j = 0; j < flat.size(); ++j) CHECK(flat.vx()[j] == 0.0);

    const Trajectory s = estimate_velocity(
        from_positions(0.001, 6284, [](double t) { return std::sin(t); }, [](double) { return 0.0; }));
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < s.size(); ++j) worst = std::max(worst, std::abs(s.vx()[j] - std::cos(j * 0.001)));
    CHECK(worst < 1e-5);
    CHECK_THROWS_AS(estimate_velocity(from_positions(0.01, 1, [](double) { return 0.0; }, [](double) { return 0.0; })),
                    InsufficientDataError);
  }

  TEST_CASE("resample identity, affine exactness and interpolation bound") {
    const Trajectory ramp = from_positions(0.01, 101, [](double t) { return 1.0 + 2.0 * t; }, [](double t) { return -t; });
    const Trajectory same = resample(ramp, 0.01);
    REQUIRE(same.size() == ramp.size());
    for (std::size_t j = 0; j < ramp.size(); ++j) CHECK(same.x()[j] == ramp.x()[j]);

    const Trajectory fine = resample(ramp, 0.0037);
    for (std::size_t j = 0; j < fine.size(); ++j) {
      const double t = fine.time(j);
      CHECK(fine.x()[j] == doctest::Approx(1.0 + 2.0 * t).epsilon(1e-12));
      CHECK(fine.y()[j] == doctest::Approx(-t).epsilon(1e-12));
    }

    const double h = 0.01;
    const Trajectory sine = from_positions(h, 629, [](double t) { return std::sin(3.0 * t); }, [](double) { return 0.0; });
    const Trajectory half = resample(sine, 0.005);
    const double bound = h * h / 8.0 * 9.0;  // max |p''| = 9
    for (std::size_t j = 0; j < half.size(); ++j)
      CHECK(std::abs(half.x()[j] - std::sin(3.0 * half.time(j))) <= bound + 1e-12);
    CHECK(half.size() == 2 * sine.size() - 1);
  }

  TEST_CASE("CSV round trip and derived velocities") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-1, 1);
    Trajectory t(1.0 / 60.0);
    for (int j = 0; j < 120; ++j) t.push_back(U(rng), U(rng), U(rng), U(rng));
    const auto path = temp_file("round.csv");
    save_csv(t, path);
    const Trajectory back = load_csv(path);
    REQUIRE(back.size() == t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
      CHECK(back.x()[j] == t.x()[j]);
      CHECK(back.vy()[j] == t.vy()[j]);
    }
    CHECK(back.dt() == doctest::Approx(t.dt()).epsilon(1e-12));

    const Trajectory pos = parse_csv("t,x,y\n0,0,0\n0.5,1,2\n1,3,2\n");
    const Trajectory ref = estimate_velocity(pos);
    CHECK(pos.vx()[0] == ref.vx()[0]);
    CHECK(pos.vx()[1] == doctest::Approx(3.0));
    CHECK(pos.vy()[2] == doctest::Approx(0.0));
  }

  TEST_CASE("CSV errors") {
    CHECK_THROWS_AS(parse_csv("t,x,y,vx,vy\n"), InsufficientDataError);
    CHECK_THROWS_AS(parse_csv("t,x,y\n0,0,0\n0.1,1,1\n0.25,2,2\n"), FormatError);
    try {
      (void)parse_csv("t,x,y\n0,0,0\n0.1,abc,1\n");
      FAIL("expected parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_csv("t,x,y\n0,0\n"), ParseError);
    CHECK_THROWS_AS(load_csv("/nonexistent/waggle.csv"), IoError);
  }

  TEST_CASE("streaming smoother reproduces the causal batch filter") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1, 1);
    Trajectory t(0.02);
    for (int j = 0; j < 60; ++j) t.push_back(U(rng), U(rng), 0, 0);
    const Trajectory batch = moving_average(t, {5, FilterMode::causal});
    CausalSmoother sm(5);
    for (std::size_t j = 0; j < t.size(); ++j) {
      const PlanarSample s = sm.push(t.time(j), t.position(j));
      CHECK(s.position.x() == batch.x()[j]);
      CHECK(s.position.y() == batch.y()[j]);
      if (j > 0) CHECK(s.velocity.x() == doctest::Approx((batch.x()[j] - batch.x()[j - 1]) / 0.02));
    }
  }

  TEST_CASE("corpus layout") {
    CHECK(corpus_path("root", "dyad1", "hp", "trial1") == std::filesystem::path("root/dyad1/hp/trial1.csv"));
  }
}
