#pragma once

#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "waggle/controllers.hpp"
#include "waggle/hkb.hpp"
#include "waggle/trajectory.hpp"

namespace waggle {

struct BoundConfig {
  double lambda = 1.0;  ///< time-weighting rate, 1/s
  double T = 30.0;      ///< horizon, s
  OutputVariant output = OutputVariant::position;
  void validate() const;
};

/// States over which the Jacobian norm is maximized.
struct StateEnvelope {
  std::vector<State4> states;

  /// Every visited state plus the 16 corners of their bounding box, each side
  /// widened by `margin` times its half-width (a degenerate side by `margin`).
  static StateEnvelope from_trajectories(std::span<const Trajectory> runs, double margin = 0.1);
  /// Corners and a uniform grid of `per_axis` points over |x_i| <= half_width.
  static StateEnvelope box(double half_width, int per_axis);
};

/// Largest Frobenius norm of the Jacobian over the envelope. ConfigError when empty.
double lipschitz_constant(const StateEnvelope& envelope, const HkbParams& xi);

/// max_j exp(-lambda*j*dt) * sqrt(sum_c channel_c[j]^2). Channels share one length.
double lambda_norm(std::span<const std::span<const double>> channels, double lambda, double dt);
double lambda_norm(std::initializer_list<std::span<const double>> channels, double lambda, double dt);
double lambda_norm(const Series2& s, double lambda, double dt);

/// Squared lambda-norm of the full-state difference of two aligned runs.
double state_error_lambda_sq(const Trajectory& a, const Trajectory& b, double lambda);
/// Squared lambda-norm of (a - b) for two aligned two-channel series.
double difference_lambda_sq(const Series2& a, const Series2& b, double lambda, double dt);

struct EmpiricalRow {
  int k = 0;
  double du_lambda_sq = 0.0;
  double dx_lambda_sq = 0.0;
  double rhs_bound = 0.0;  ///< Gronwall right-hand side for this du
};

struct BoundReport {
  double c_h = 0.0;
  double lambda = 1.0;
  double T = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma3 = 0.0;
  double sigma = 0.0;
  double eta = 0.0;
  double feature_gap_lambda_sq = 0.0;  ///< |v - y_h|^2_lambda
  bool contraction_holds = false;
  double terminal_u_bound = std::numeric_limits<double>::infinity();
  double terminal_x_bound = std::numeric_limits<double>::infinity();

  std::vector<EmpiricalRow> empirical;
  std::vector<int> recursion_violations;  ///< k where du_{k+1} > sigma*du_k + eta
  std::vector<int> gronwall_violations;   ///< k where dx_k > 1.01 * rhs_bound
};

/// |B|_F^2 e^{(2 C_H + 1) T} / (2 lambda), the state-from-input gain.
double gronwall_factor(double c_h, const BoundConfig& cfg);

/// Fills the constants part (sigma1..3, sigma, eta) and the terminal bounds.
BoundReport sigma_components(const IlcGains& gains, double c_h, const BoundConfig& cfg,
                             double feature_gap_lambda_sq = 0.0);

struct TerminalBounds {
  double u = 0.0;
  double x = 0.0;
  bool contraction_holds = false;
};
/// eta/(1-sigma) and eta*gronwall_factor/(1-sigma) when sigma < 1, else both +inf.
TerminalBounds theorem_bound(double sigma, double eta, double c_h, const BoundConfig& cfg);

/// Records per-iteration error norms against the known generating input u_h
/// and the HP run it produced, and flags recursion and Gronwall violations.
/// The report must already carry its constants.
void empirical_contraction(BoundReport& report, const IlcTrialResult& trial, const Series2& u_h,
                           const Trajectory& hp);

/// Target generated by a known bounded input, so the ideal control is exact.
struct SyntheticOracle {
  Series2 u_h;
  Trajectory hp{0.01};
  State4 x0 = State4::Zero();
};
/// u_h(t) = amplitude * (cos(rate t), sin(2 rate t)) driven from x0.
SyntheticOracle make_synthetic_oracle(const HkbParams& xi, double dt, double T, double amplitude = 0.02,
                                      double rate = 0.5, const State4& x0 = State4::Zero());

/// Key-value text of the constants and violation counts.
std::string to_text(const BoundReport& r);
/// `k,du_lambda_sq,dx_lambda_sq,rhs_bound` rows.
std::string bounds_csv(const BoundReport& r);

}  // namespace waggle
