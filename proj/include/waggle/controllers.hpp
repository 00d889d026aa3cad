#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "waggle/config.hpp"
#include "waggle/hkb.hpp"
#include "waggle/trajectory.hpp"

namespace waggle {

/// Position-error, velocity-error and feature-mismatch gains.
struct IlcGains {
  double kp = 0.0;
  double kv = 0.0;
  double ks = 0.0;

  void validate() const;
  friend bool operator==(const IlcGains&, const IlcGains&) = default;
};

/// Tuned gains for the four reference dyads (1-based id).
IlcGains gain_preset(int dyad);
/// Reads `dyadN.kp`, `dyadN.kv`, `dyadN.ks` entries.
std::map<std::string, IlcGains> load_gain_presets(const std::filesystem::path& path);
std::string format_gain_presets(const std::map<std::string, IlcGains>& presets);

/// Two-channel sequence on a trial grid.
struct Series2 {
  std::vector<double> c1, c2;

  Series2() = default;
  explicit Series2(std::size_t n) : c1(n, 0.0), c2(n, 0.0) {}
  std::size_t size() const noexcept { return c1.size(); }
  Vec2 at(std::size_t j) const { return {c1[j], c2[j]}; }
  void set(std::size_t j, const Vec2& v) {
    c1[j] = v.x();
    c2[j] = v.y();
  }
  friend bool operator==(const Series2&, const Series2&) = default;
};

/// Control and error signals of one iteration over the trial grid.
struct IterationBuffer {
  int k = 0;
  double dt = 0.01;
  Series2 u;     ///< control applied
  Series2 e;     ///< y_h - y_k
  Series2 edot;  ///< HP velocity - VP velocity
  Series2 s;     ///< feature mismatch v - y_k

  static IterationBuffer zeros(std::size_t n, double dt);
  std::size_t size() const noexcept { return u.size(); }
  void validate() const;

  /// One row per grid point: u1,u2,e1,e2,ed1,ed2,s1,s2.
  std::string to_csv() const;
  void save_csv(const std::filesystem::path& path) const;
  static IterationBuffer parse_csv(const std::string& text, double dt, int k = 0);
  static IterationBuffer load_csv(const std::filesystem::path& path, double dt, int k = 0);
};

enum class FeatureChannel { position, velocity };

/// Pre-recorded solo motion resampled onto the trial grid.
struct FeatureSignal {
  Trajectory source;
  FeatureChannel channel = FeatureChannel::position;
  Series2 v;

  /// Resamples `source` to dt and keeps the first n points; AlignmentError when
  /// the recording is shorter than the horizon.
  static FeatureSignal from_recording(const Trajectory& source, FeatureChannel channel, double dt,
                                      std::size_t n);
};

/// u = kp*e + kv*edot
ControlInput pd_control(const Vec2& e, const Vec2& edot, const IlcGains& gains);

/// u_k = u_{k-1} + kp*e_{k-1} + kv*edot_{k-1} + ks*s_{k-1}, pointwise on the grid.
Series2 ilc_update(const IterationBuffer& prev, const IlcGains& gains);

/// ||p_h - p_k|| / max(||p_h||, eps_floor)
double error_rate(const Vec2& p_h, const Vec2& p_k, double eps_floor);

struct PlantModel {
  HkbParams xi;
  State4 x0 = State4::Zero();
};

struct IlcTrialResult {
  /// Index k holds iteration k; index 0 is the warm-start (default u = 0) run.
  std::vector<Trajectory> trajectories;
  std::vector<IterationBuffer> buffers;
  std::vector<double> rmse;

  const IterationBuffer& final_buffer() const { return buffers.back(); }
};

/// Repeats the trial `iters` times from the same initial state, updating the
/// whole control sequence between repetitions. The HP trajectory fixes the grid.
/// DivergenceError carries the failing iteration and time.
IlcTrialResult run_ilc_trial(const PlantModel& plant, const Trajectory& hp,
                             const std::optional<FeatureSignal>& feature, const IlcGains& gains, int iters,
                             const std::optional<Series2>& warm_start = std::nullopt);

}  // namespace waggle
