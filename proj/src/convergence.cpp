#include "waggle/convergence.hpp"

#include <algorithm>
#include <cmath>

#include "waggle/config.hpp"
#include "waggle/error.hpp"
#include "waggle/simd/kernels.hpp"

namespace waggle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 0 * inf = 0: a vanishing gain switches a term off regardless of the exponential.
double safe_mul(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

double exp_growth(double c_h, double T) { return std::exp((2.0 * c_h + 1.0) * T); }

std::vector<double> decay_weights(std::size_t n, double lambda, double dt) {
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = std::exp(-lambda * (static_cast<double>(j) * dt));
  return w;
}

}  // namespace

void BoundConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be positive and finite");
}

StateEnvelope StateEnvelope::from_trajectories(std::span<const Trajectory> runs, double margin) {
  if (!(margin >= 0.0)) throw ConfigError("envelope margin must be non-negative");
  StateEnvelope env;
  State4 lo = State4::Constant(kInf);
  State4 hi = State4::Constant(-kInf);
  for (const auto& run : runs)
    for (std::size_t j = 0; j < run.size(); ++j) {
      const State4 s = state_from_sample(run[j]);
      env.states.push_back(s);
      lo = lo.cwiseMin(s);
      hi = hi.cwiseMax(s);
    }
  if (env.states.empty()) return env;
  const State4 mid = 0.5 * (lo + hi);
  State4 half = 0.5 * (hi - lo);
  for (int i = 0; i < 4; ++i) half[i] = half[i] > 0.0 ? half[i] * (1.0 + margin) : margin;
  for (int mask = 0; mask < 16; ++mask) {
    State4 c;
    for (int i = 0; i < 4; ++i) c[i] = mid[i] + ((mask >> i) & 1 ? half[i] : -half[i]);
    env.states.push_back(c);
  }
  return env;
}

StateEnvelope StateEnvelope::box(double half_width, int per_axis) {
  if (!(half_width >= 0.0) || per_axis < 2) throw ConfigError("box envelope needs half_width >= 0 and >= 2 points");
  StateEnvelope env;
  const double h = 2.0 * half_width / (per_axis - 1);
  for (int a = 0; a < per_axis; ++a)
    for (int b = 0; b < per_axis; ++b)
      for (int c = 0; c < per_axis; ++c)
        for (int d = 0; d < per_axis; ++d)
          env.states.emplace_back(-half_width + a * h, -half_width + b * h, -half_width + c * h,
                                  -half_width + d * h);
  return env;
}

double lipschitz_constant(const StateEnvelope& envelope, const HkbParams& xi) {
  if (envelope.states.empty()) throw ConfigError("empty state envelope");
  double best = 0.0;
  for (const auto& s : envelope.states) best = std::max(best, jacobian(s, xi).norm());
  return best;
}

double lambda_norm(std::span<const std::span<const double>> channels, double lambda, double dt) {
  if (channels.empty()) return 0.0;
  const std::size_t n = channels.front().size();
  std::vector<double> sq(n, 0.0);
  for (const auto& c : channels) simd::accumulate_squares(sq, c);
  return simd::weighted_sqrt_max(sq, decay_weights(n, lambda, dt));
}

double lambda_norm(std::initializer_list<std::span<const double>> channels, double lambda, double dt) {
  return lambda_norm(std::span<const std::span<const double>>(channels.begin(), channels.size()), lambda, dt);
}

double lambda_norm(const Series2& s, double lambda, double dt) { return lambda_norm({s.c1, s.c2}, lambda, dt); }

double difference_lambda_sq(const Series2& a, const Series2& b, double lambda, double dt) {
  if (a.size() != b.size()) throw AlignmentError("series differ in length");
  Series2 d(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    d.c1[j] = a.c1[j] - b.c1[j];
    d.c2[j] = a.c2[j] - b.c2[j];
  }
  const double v = lambda_norm(d, lambda, dt);
  return v * v;
}

double state_error_lambda_sq(const Trajectory& a, const Trajectory& b, double lambda) {
  if (a.size() != b.size() || a.dt() != b.dt()) throw AlignmentError("trajectories not aligned");
  const std::size_t n = a.size();
  std::vector<double> d[4];
  const std::span<const double> pa[4] = {a.x(), a.vx(), a.y(), a.vy()};
  const std::span<const double> pb[4] = {b.x(), b.vx(), b.y(), b.vy()};
  for (int i = 0; i < 4; ++i) {
    d[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) d[i][j] = pa[i][j] - pb[i][j];
  }
  const double v = lambda_norm({d[0], d[1], d[2], d[3]}, lambda, a.dt());
  return v * v;
}

double gronwall_factor(double c_h, const BoundConfig& cfg) {
  cfg.validate();
  const double b2 = input_matrix().squaredNorm();
  return b2 * exp_growth(c_h, cfg.T) / (2.0 * cfg.lambda);
}

TerminalBounds theorem_bound(double sigma, double eta, double c_h, const BoundConfig& cfg) {
  TerminalBounds out;
  out.contraction_holds = sigma < 1.0;
  if (!out.contraction_holds) {
    out.u = kInf;
    out.x = kInf;
    return out;
  }
  out.u = eta / (1.0 - sigma);
  out.x = safe_mul(eta, gronwall_factor(c_h, cfg)) / (1.0 - sigma);
  return out;
}

BoundReport sigma_components(const IlcGains& gains, double c_h, const BoundConfig& cfg,
                             double feature_gap_lambda_sq) {
  cfg.validate();
  if (!(c_h >= 0.0)) throw ConfigError("Lipschitz constant must be non-negative");
  if (!(feature_gap_lambda_sq >= 0.0)) throw ConfigError("feature gap must be non-negative");

  const InputMatrix B = input_matrix();
  const OutputMatrix C = output_matrix(cfg.output);
  const double b2 = B.squaredNorm();
  const double c2 = C.squaredNorm();
  const double growth = exp_growth(c_h, cfg.T);

  BoundReport r;
  r.c_h = c_h;
  r.lambda = cfg.lambda;
  r.T = cfg.T;
  r.feature_gap_lambda_sq = feature_gap_lambda_sq;
  r.sigma1 = 4.0 * (Eigen::Matrix2d::Identity() - gains.kv * (C * B)).squaredNorm();
  const double inner = 4.0 * (gains.kp * C).squaredNorm() + 4.0 * c_h * c_h * (gains.kv * C).squaredNorm();
  r.sigma2 = safe_mul(b2 * growth, inner) / (2.0 * cfg.lambda);
  r.sigma3 = safe_mul(4.0 * c2 * b2 * gains.ks * gains.ks, growth) / cfg.lambda;
  r.sigma = r.sigma1 + r.sigma2 + r.sigma3;
  r.eta = safe_mul(8.0 * gains.ks * gains.ks, feature_gap_lambda_sq);

  const TerminalBounds tb = theorem_bound(r.sigma, r.eta, c_h, cfg);
  r.contraction_holds = tb.contraction_holds;
  r.terminal_u_bound = tb.u;
  r.terminal_x_bound = tb.x;
  return r;
}

void empirical_contraction(BoundReport& report, const IlcTrialResult& trial, const Series2& u_h,
                           const Trajectory& hp) {
  if (u_h.size() == 0) throw ConfigError("empirical contraction needs the generating input u_h");
  if (trial.buffers.size() != trial.trajectories.size()) throw InvalidStateError("inconsistent trial result");
  BoundConfig cfg{report.lambda, report.T, OutputVariant::position};
  const double g = gronwall_factor(report.c_h, cfg);

  report.empirical.clear();
  report.recursion_violations.clear();
  report.gronwall_violations.clear();
  for (std::size_t k = 0; k < trial.buffers.size(); ++k) {
    const auto& buf = trial.buffers[k];
    if (buf.size() != u_h.size()) throw AlignmentError("u_h not aligned to the trial grid");
    EmpiricalRow row;
    row.k = buf.k;
    row.du_lambda_sq = difference_lambda_sq(u_h, buf.u, report.lambda, buf.dt);
    row.dx_lambda_sq = state_error_lambda_sq(hp, trial.trajectories[k], report.lambda);
    row.rhs_bound = safe_mul(g, row.du_lambda_sq);
    if (row.dx_lambda_sq > 1.01 * row.rhs_bound) report.gronwall_violations.push_back(row.k);
    report.empirical.push_back(row);
  }
  for (std::size_t k = 0; k + 1 < report.empirical.size(); ++k) {
    const double lhs = report.empirical[k + 1].du_lambda_sq;
    const double rhs = safe_mul(report.sigma, report.empirical[k].du_lambda_sq) + report.eta;
    if (lhs > rhs) report.recursion_violations.push_back(report.empirical[k].k);
  }
}

SyntheticOracle make_synthetic_oracle(const HkbParams& xi, double dt, double T, double amplitude, double rate,
                                      const State4& x0) {
  const std::size_t n = sample_count(T, dt);
  SyntheticOracle o;
  o.x0 = x0;
  o.u_h = Series2(n);
  std::vector<ControlInput> u(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j) * dt;
    u[j] = amplitude * ControlInput(std::cos(rate * t), std::sin(2.0 * rate * t));
    o.u_h.set(j, u[j]);
  }
  o.hp = simulate(x0, xi, u, dt, T);
  return o;
}

std::string to_text(const BoundReport& r) {
  std::string s;
  auto kv = [&](const char* key, double v) { s += std::string(key) + " = " + format_double(v) + "\n"; };
  kv("c_h", r.c_h);
  kv("lambda", r.lambda);
  kv("T", r.T);
  kv("sigma1", r.sigma1);
  kv("sigma2", r.sigma2);
  kv("sigma3", r.sigma3);
  kv("sigma", r.sigma);
  kv("eta", r.eta);
  kv("feature_gap_lambda_sq", r.feature_gap_lambda_sq);
  s += std::string("contraction_holds = ") + (r.contraction_holds ? "true" : "false") + "\n";
  kv("terminal_u_bound", r.terminal_u_bound);
  kv("terminal_x_bound", r.terminal_x_bound);
  s += "iterations = " + std::to_string(r.empirical.size()) + "\n";
  s += "recursion_violations = " + std::to_string(r.recursion_violations.size()) + "\n";
  s += "gronwall_violations = " + std::to_string(r.gronwall_violations.size()) + "\n";
  return s;
}

std::string bounds_csv(const BoundReport& r) {
  std::string s = "k,du_lambda_sq,dx_lambda_sq,rhs_bound\n";
  for (const auto& row : r.empirical)
    s += std::to_string(row.k) + "," + format_double(row.du_lambda_sq) + "," + format_double(row.dx_lambda_sq) +
         "," + format_double(row.rhs_bound) + "\n";
  return s;
}

}  // namespace waggle
