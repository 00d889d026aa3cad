#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "waggle/error.hpp"
#include "waggle/metrics.hpp"

using namespace waggle;

namespace {

constexpr double kPi = std::numbers::pi;

Trajectory sinusoid(double dt, double T, double ax, double wx, double ay, double wy, double lag = 0.0) {
  Trajectory t(dt);
  const auto n = sample_count(T, dt);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = j * dt - lag;
    t.push_back(ax * std::sin(wx * s), ay * std::sin(wy * s), ax * wx * std::cos(wx * s), ay * wy * std::cos(wy * s));
  }
  return t;
}

Trajectory random_traj(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> U(-2, 2);
  Trajectory t(0.01);
  for (std::size_t j = 0; j < n; ++j) t.push_back(U(rng), U(rng), U(rng), U(rng));
  return t;
}

double rmse_oracle(const Trajectory& a, const Trajectory& b) {
  long double acc = 0.0L;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const long double dx = a.x()[j] - b.x()[j], dy = a.y()[j] - b.y()[j];
    acc += dx * dx + dy * dy;
  }
  return static_cast<double>(std::sqrt(acc / a.size()));
}

double cv_oracle(const std::vector<double>& phi) {
  std::complex<long double> z = 0.0L;
  for (double p : phi) z += std::polar<long double>(1.0L, p);
  return static_cast<double>(std::abs(z) / static_cast<long double>(phi.size()));
}

double shoelace(const std::vector<double>& r) {
  const std::size_t m = r.size();
  double a = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double t0 = 2 * kPi * i / m, t1 = 2 * kPi * ((i + 1) % m) / m;
    const double x0 = r[i] * std::cos(t0), y0 = r[i] * std::sin(t0);
    const double x1 = r[(i + 1) % m] * std::cos(t1), y1 = r[(i + 1) % m] * std::sin(t1);
    a += x0 * y1 - x1 * y0;
  }
  return 0.5 * std::abs(a);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("rmse examples and brute force") {
    std::mt19937_64 rng(1);
    const Trajectory a = random_traj(rng, 1000);
    CHECK(rmse(a, a) == 0.0);
    Trajectory b = a;
    for (std::size_t j = 0; j < b.size(); ++j) {
      b.x()[j] += 3.0;
      b.y()[j] += 4.0;
    }
    CHECK(rmse(a, b) == doctest::Approx(5.0).epsilon(1e-12));
    const Trajectory c = random_traj(rng, 1000);
    CHECK(std::abs(rmse(a, c) - rmse_oracle(a, c)) < 1e-12);
    CHECK_THROWS_AS(rmse(a, random_traj(rng, 999)), AlignmentError);
    CHECK_THROWS_AS(rmse(Trajectory(0.01), Trajectory(0.01)), InsufficientDataError);
  }

  TEST_CASE("rmse is a metric on aligned trajectories") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
      const auto a = random_traj(rng, 64), b = random_traj(rng, 64), c = random_traj(rng, 64);
      CHECK(rmse(a, b) == doctest::Approx(rmse(b, a)).epsilon(1e-12));
      CHECK(rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12);
    }
  }

  TEST_CASE("phase of a sinusoid advances uniformly") {
    const double w = 2 * kPi * 0.5;
    const Trajectory t = sinusoid(0.01, 20.0, 1.3, w, 0.7, 2 * w);
    const auto ph = estimate_phase(t);
    CHECK(ph[0].omega_hat == doctest::Approx(w).epsilon(0.01));
    CHECK(ph[1].omega_hat == doctest::Approx(2 * w).epsilon(0.01));
    CHECK_FALSE(ph[0].short_record);
    // atan2(v/w, p) = atan2(cos, sin) = pi/2 - w t: uniform rate, magnitude w.
    for (std::size_t j = 1; j < t.size(); ++j) {
      const double d = wrap_angle(ph[0].phases[j] - ph[0].phases[j - 1]);
      CHECK(std::abs(d) == doctest::Approx(w * 0.01).epsilon(0.02));
    }
    CHECK(std::abs(wrap_angle(ph[0].phases[0] - kPi / 2)) < 0.05);
  }

  TEST_CASE("phase is scale invariant and needs motion") {
    const Trajectory t = sinusoid(0.01, 20.0, 1.0, 3.0, 1.0, 2.0);
    Trajectory s = t;
    for (auto ch : {s.x(), s.y(), s.vx(), s.vy()})
      for (auto& v : ch) v *= 4.5;
    const auto a = estimate_phase(t), b = estimate_phase(s);
    for (std::size_t j = 0; j < t.size(); ++j) CHECK(a[0].phases[j] == doctest::Approx(b[0].phases[j]).epsilon(1e-12));

    Trajectory flat(0.01);
    for (int j = 0; j < 100; ++j) flat.push_back(0.2, 0.1, 0, 0);
    CHECK_THROWS_AS(estimate_phase(flat), DegenerateMotionError);
  }

  TEST_CASE("circular variance boundary cases and oracle") {
    CHECK(circular_variance(std::vector<double>(17, 1.234)) == doctest::Approx(1.0).epsilon(1e-12));
    const std::size_t n = 360;
    std::vector<double> spread(n);
    for (std::size_t j = 0; j < n; ++j) spread[j] = 2 * kPi * j / n;
    CHECK(circular_variance(spread) < 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-kPi, kPi);
    std::vector<double> phi(1000);
    for (auto& p : phi) p = U(rng);
    CHECK(std::abs(circular_variance(phi) - cv_oracle(phi)) < 1e-12);
  }

  TEST_CASE("circular variance range and rotation invariance") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> N(0.0, 1.5);
    for (int i = 0; i < 30; ++i) {
      std::vector<double> phi(50);
      for (auto& p : phi) p = N(rng);
      const double cv = circular_variance(phi);
      CHECK(cv >= 0.0);
      CHECK(cv <= 1.0);
      std::vector<double> shifted = phi;
      for (auto& p : shifted) p += 0.77;
      CHECK(circular_variance(shifted) == doctest::Approx(cv).epsilon(1e-12));
      CHECK(cv < 1.0 - 1e-12);
    }
  }

  TEST_CASE("relative phase") {
    const double w = 2 * kPi * 0.2;
    const Trajectory lead = sinusoid(0.01, 100.0, 1.0, w, 0.5, 2 * w);
    const auto same = relative_phase(lead, lead);
    for (double d : same) CHECK(d == 0.0);
    CHECK(circular_variance(same) == doctest::Approx(1.0));

    const Trajectory late = sinusoid(0.01, 100.0, 1.0, w, 0.5, 2 * w, 1.25);  // quarter period on x
    CHECK(circular_variance(relative_phase(lead, late)) > 0.99);

    const Trajectory other = sinusoid(0.01, 100.0, 1.0, w * 1.37 + 0.11, 0.5, w * 2.91 + 0.05);
    CHECK(circular_variance(relative_phase(lead, other)) < 0.2);
  }

  TEST_CASE("svm") {
    Trajectory z(0.01);
    for (int j = 0; j < 10; ++j) z.push_back(0, 0, 0, 0);
    CHECK(svm(z) == 0.0);
    Trajectory t(0.01);
    t.push_back(2.0, 0.1, 0, 0);
    t.push_back(-1.0, -0.5, 0, 0);
    CHECK(svm(t) == 1.0);
    std::mt19937_64 rng(5);
    const Trajectory r = random_traj(rng, 100);
    Trajectory s = r;
    for (auto& v : s.x()) v *= -3.0;
    for (auto& v : s.y()) v *= 0.25;
    CHECK(svm(s) == doctest::Approx(0.75 * svm(r)).epsilon(1e-12));
  }

  TEST_CASE("error rate against a benchmark") {
    CHECK(error_rate_vs_benchmark(0.3, 0.3) == 0.0);
    CHECK(error_rate_vs_benchmark(2.0, 1.0) == 1.0);
    CHECK_THROWS_AS(error_rate_vs_benchmark(1.0, 0.0), ConfigError);
  }

  TEST_CASE("radar area") {
    CHECK(radar_area({{}, {0, 0, 0, 0}}) == 0.0);
    CHECK(radar_area({{}, {1, 1, 1}}) == doctest::Approx(3 * std::sqrt(3.0) / 4).epsilon(1e-12));
    const std::vector<double> ilc{0.1152, 0.0707, 0.4939, 0.0333};
    CHECK(std::abs(radar_area({{}, ilc}) - shoelace(ilc)) < 1e-12);
    CHECK_THROWS_AS(radar_area({{}, {1, 1}}), ConfigError);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> U(0, 2);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> r(3 + i % 5);
      for (auto& v : r) v = U(rng);
      const double a = radar_area({{}, r});
      std::vector<double> rot(r.begin() + 1, r.end());
      rot.push_back(r.front());
      std::vector<double> rev(r.rbegin(), r.rend());
      CHECK(radar_area({{}, rot}) == doctest::Approx(a).epsilon(1e-12));
      CHECK(radar_area({{}, rev}) == doctest::Approx(a).epsilon(1e-12));
    }
  }

  TEST_CASE("report, serialization and aggregates") {
    const double w = 2 * kPi * 0.1;
    const Trajectory lead = sinusoid(0.01, 60.0, 0.6, w, 0.3, 2 * w);
    const Trajectory follow = sinusoid(0.01, 60.0, 0.6, w, 0.3, 2 * w, 0.25);
    const MetricsReport r = compute_metrics(lead, follow);
    CHECK(r.n == lead.size());
    CHECK(r.cv_valid);
    CHECK(r.cv > 0.9);
    CHECK(r.rmse == doctest::Approx(rmse(lead, follow)));
    CHECK(r.svm == doctest::Approx(svm(follow)));
    CHECK(r.rmse * r.rmse == doctest::Approx(r.rmse_x * r.rmse_x + r.rmse_y * r.rmse_y));
    CHECK(metrics_csv_header() == "rmse,cv,svm,n");
    const std::string kv = to_key_value(r);
    CHECK(kv.rfind("rmse=", 0) == 0);
    CHECK(kv.find("\nn=") != std::string::npos);

    const MetricsReport empty = compute_metrics(Trajectory(0.01), Trajectory(0.01));
    CHECK(empty.n == 0);

    const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
    const MeanStd ms = mean_std(v);
    double m = 0.0;
    for (double x : v) m += x;
    m /= 4.0;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    CHECK(std::abs(ms.mean - m) < 1e-12);
    CHECK(std::abs(ms.std - std::sqrt(ss / 3.0)) < 1e-12);
    CHECK(mean_std(std::vector<double>{3.0}).std == 0.0);
  }

  TEST_CASE("wrap angle range") {
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    CHECK(wrap_angle(0.0) == 0.0);
  }
}
