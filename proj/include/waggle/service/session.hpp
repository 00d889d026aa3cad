#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "waggle/closed_loop.hpp"
#include "waggle/metrics.hpp"
#include "waggle/service/wire.hpp"
#include "waggle/sigproc.hpp"

namespace waggle::service {

struct SessionConfig {
  double dt_tick = 1.0 / 60.0;
  ControllerKind controller = ControllerKind::ilc;
  IlcGains gains = gain_preset(1);
  HkbParams hkb;
  OnlineConfig online;
  FilterSpec filter{5, FilterMode::causal};
  FeatureChannel feature_channel = FeatureChannel::position;
  double u_max = std::numeric_limits<double>::infinity();
  int opc_horizon = 20;
  State4 x0 = State4::Zero();
  double cv_window_periods = 10.0;
  int metrics_every = 6;  ///< ticks between metrics messages
  /// Per-tick feedforward control, cycled; zero when empty.
  std::vector<ControlInput> feedforward;

  void validate() const;
  ControllerSpec controller_spec() const;
};

/// Members: dt_tick, controller, dyad, gains{kp,kv,ks}, hkb{alpha,beta,gamma,omega},
/// online{eps_th,max_inner_iters,T,eps_floor}, filter_window, feature_channel,
/// u_max, opc_horizon, x0[4]. eps_th and u_max also accept "inf".
/// ConfigError on unknown members or invalid values.
SessionConfig session_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionConfig& cfg);

enum class SessionStatus { open, faulted, closed };

struct TickOutput {
  VpMsg vp;
  std::optional<MetricsMsg> metrics;
  std::optional<FaultMsg> fault;
  OnlineDiagnostics diag;
};

/// Everything needed to recompute metrics offline and to replay the session.
struct SessionArchive {
  std::string session_id;
  SessionConfig config;
  Trajectory hp{1.0 / 60.0};  ///< per tick from the first tick that saw an HP sample
  Trajectory vp{1.0 / 60.0};  ///< every streamed VP sample, from tick 0
  std::size_t first_hp_tick = 0;
  MetricsReport report;       ///< over the ticks covered by `hp`
  MetricsMsg final_metrics;   ///< the streamed values at close
  std::size_t ticks = 0;
  std::size_t dropped = 0;
  std::size_t overruns = 0;
  std::optional<FaultMsg> fault;
  /// `tick,type,a,b,c`: hp (t,x,y), gains (kp,kv,ks), solo (upload index).
  std::string events_csv;
  std::vector<std::vector<SoloSample>> solo_uploads;  ///< as received

  /// hp.csv, vp.csv, events.csv, solo_<i>.csv, report.txt, session.txt, config.json.
  void save(const std::filesystem::path& dir) const;
  static SessionArchive load(const std::filesystem::path& dir);
};

/// Recomputes the archived report from the trajectories: RMSE and SVM over
/// the HP-covered ticks, CV over the same trailing window the live stream used.
MetricsMsg recompute_metrics(const SessionArchive& archive);

/// One player's live session. Not thread-safe; the owner serializes calls.
class Session {
 public:
  Session(std::string id, SessionConfig cfg);

  const std::string& id() const noexcept { return id_; }
  SessionStatus status() const noexcept { return status_; }
  const SessionConfig& config() const noexcept { return cfg_; }

  /// Filters and stores the sample for the next tick. Samples not newer than
  /// the last accepted one are dropped and counted.
  void ingest_hp(double t, const Vec2& position);
  /// Resamples the solo recording to the tick grid; it becomes the feature.
  void upload_solo(const std::vector<SoloSample>& samples);
  void set_gains(const IlcGains& gains);

  /// Emits the current VP sample, then advances one tick. A divergence moves
  /// the session to faulted and returns the fault; later ticks throw SessionError.
  TickOutput tick();

  MetricsMsg live_metrics() const;
  std::size_t ticks() const noexcept { return ticks_; }
  std::size_t dropped() const noexcept { return dropped_; }
  std::size_t overruns() const noexcept { return overruns_; }

  /// Idempotent; the session accepts nothing afterwards.
  SessionArchive close();

 private:
  void require_open(const char* op) const;

  std::string id_;
  SessionConfig initial_cfg_;  ///< as opened; replay starts here
  SessionConfig cfg_;
  ControllerSpec spec_;
  SessionStatus status_ = SessionStatus::open;
  OnlineState state_;
  CausalSmoother smoother_;
  std::optional<HpObservation> latest_hp_;
  std::optional<double> last_hp_t_;
  std::optional<Series2> feature_;
  std::vector<std::vector<SoloSample>> solo_uploads_;
  std::optional<SessionArchive> archive_;
  std::size_t ticks_ = 0;

  Trajectory hp_hist_;
  Trajectory vp_hist_;
  std::size_t first_hp_tick_ = 0;
  double sq_err_ = 0.0;
  double max_abs_x_ = 0.0;
  double max_abs_y_ = 0.0;
  double last_eps_ = std::numeric_limits<double>::quiet_NaN();
  int last_k_ = 0;
  std::size_t dropped_ = 0;
  std::size_t overruns_ = 0;
  std::optional<FaultMsg> fault_;
  std::string events_;
};

/// Feeds an archived event log through a fresh session with the archived
/// config, for the archived number of ticks.
SessionArchive replay(const SessionArchive& archive);

}  // namespace waggle::service
