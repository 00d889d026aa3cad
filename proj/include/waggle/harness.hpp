#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "waggle/closed_loop.hpp"
#include "waggle/config.hpp"
#include "waggle/metrics.hpp"
#include "waggle/trajectory.hpp"

namespace waggle {

enum class LeaderPattern { lemniscate, recorded };

struct LeaderSpec {
  LeaderPattern pattern = LeaderPattern::lemniscate;
  double amplitude_x = 0.6;
  double amplitude_y = 0.3;
  double freq = 0.1;  ///< Hz
  Vec2 center = Vec2::Zero();
  double phase = 0.0;  ///< rad, offset of the x oscillation
  std::filesystem::path path;  ///< recorded pattern only
  void validate() const;
};

/// Figure-eight: x = cx + Ax sin(2 pi f t + phase), y = cy + Ay sin(2(2 pi f t + phase)),
/// with analytic velocities. Recorded patterns are loaded, resampled to dt and
/// cycled to cover T. IoError when the file is missing.
Trajectory synth_leader(const LeaderSpec& spec, double T, double dt);

/// The leader evaluated `lag` seconds late; recorded patterns repeat their first sample.
Trajectory lagged_copy(const LeaderSpec& spec, double T, double dt, double lag);

struct DyadConfig {
  std::string id = "dyad1";
  ControllerSpec controller;
  LeaderSpec leader;
  std::optional<std::filesystem::path> solo_path;  ///< feature source; nominal leader when absent
  bool use_feature = true;
  int trials = 5;
  int benchmark_trials = 3;
  double trial_T = 30.0;
  double benchmark_lag = 0.25;  ///< s
  std::uint64_t seed = 1;
  State4 x0 = State4::Zero();
  void validate() const;
};

/// Reads id, controller, dyad (gain preset) or kp/kv/ks, leader.*, solo.path,
/// trials, benchmark_trials, trial_T, dt, seed, lag, eps_th, max_inner_iters,
/// u_max, opc.horizon, alpha..omega.
DyadConfig dyad_config_from(const KeyValueConfig& cfg);

struct TrialRecord {
  int index = 0;
  double phase = 0.0;
  double amp_scale_x = 1.0;
  double amp_scale_y = 1.0;
  bool failed = false;
  std::string failure;
  Trajectory leader{0.01};
  Trajectory follower{0.01};
  MetricsReport report;
};

struct MetricSummary {
  MeanStd rmse, cv, svm;
};

struct DyadResult {
  std::string id;
  ControllerKind controller = ControllerKind::ilc;
  int trials_attempted = 0;
  int trials_succeeded = 0;
  int trials_failed = 0;
  std::vector<TrialRecord> trials;
  std::vector<TrialRecord> benchmark_trials;
  MetricSummary summary;    ///< over succeeded controller trials
  MetricSummary benchmark;  ///< HP-HP pair
  double rmse_error_rate = 0.0;
  double cv_error_rate = 0.0;
  double svm_error_rate = 0.0;
};

/// Per-trial leader perturbation drawn from the seeded stream.
struct TrialPerturbation {
  double phase = 0.0;
  double amp_scale_x = 1.0;
  double amp_scale_y = 1.0;
};
std::vector<TrialPerturbation> draw_perturbations(std::uint64_t seed, int count);

MetricSummary summarize(const std::vector<TrialRecord>& trials);

DyadResult run_dyad(const DyadConfig& cfg);

/// Mean per-dyad values entering the benchmark match.
struct DyadMetrics {
  std::string dyad;
  double rmse = 0.0;
  double cv = 0.0;
  double svm = 0.0;
};

struct ErrorRateRow {
  std::string strategy;
  std::string dyad;
  std::string metric;  ///< rmse | cv | svm
  double value = 0.0;
  double benchmark = 0.0;
  double rate = 0.0;
};

struct RadarChart {
  std::string strategy;
  std::string chart;  ///< a metric name (axes = dyads) or "metrics" (axes = metrics)
  RadarInput input;
  double area = 0.0;
};

struct StrategyMean {
  std::string strategy;
  std::string metric;
  double mean_rate = 0.0;
};

struct MatchingReport {
  std::vector<ErrorRateRow> rows;
  std::vector<StrategyMean> means;
  std::vector<RadarChart> radars;

  const RadarChart* radar(const std::string& strategy, const std::string& chart) const;
  double mean_rate(const std::string& strategy, const std::string& metric) const;
};

using StrategyTable = std::vector<std::pair<std::string, std::vector<DyadMetrics>>>;

/// Error rates of every strategy against the benchmark, dyad by dyad.
/// ConfigError when a dyad has no benchmark entry.
MatchingReport matching_report(const StrategyTable& strategies, const std::vector<DyadMetrics>& benchmark);

/// Aggregates precomputed rates: strategy means per metric, a radar over dyads
/// per metric (three or more dyads) and a radar over the three metric means.
MatchingReport report_from_rates(std::vector<ErrorRateRow> rows);

/// `strategy,dyad,metric,value,benchmark,error_rate`, then `mean` rows per strategy.
std::string report_csv(const MatchingReport& r);
/// `strategy,chart,axis,radius,area`
std::string radar_csv(const MatchingReport& r);

/// Per-trial metrics of a dyad run: `dyad,role,trial,status,rmse,cv,svm,n`.
std::string trials_csv(const DyadResult& r);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace waggle
