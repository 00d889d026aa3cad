#include "waggle/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include "waggle/error.hpp"
#include "waggle/sigproc.hpp"

namespace waggle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const char* const kMetrics[] = {"rmse", "cv", "svm"};

// Uniform in [0, 1) from the top 53 bits; independent of the library's distributions.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

Trajectory cycled(const Trajectory& source, double dt, std::size_t n) {
  const Trajectory grid = std::abs(source.dt() - dt) <= 1e-12 * dt ? source : resample(source, dt);
  if (grid.empty()) throw InsufficientDataError("empty recording");
  Trajectory out(dt);
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back(grid[j % grid.size()]);
  return out;
}

Trajectory lemniscate(const LeaderSpec& spec, std::size_t n, double dt, double lag) {
  Trajectory out(dt);
  out.reserve(n);
  const double w = kTwoPi * spec.freq;
  for (std::size_t j = 0; j < n; ++j) {
    const double th = w * (static_cast<double>(j) * dt - lag) + spec.phase;
    PlanarSample s;
    s.position = {spec.center.x() + spec.amplitude_x * std::sin(th),
                  spec.center.y() + spec.amplitude_y * std::sin(2.0 * th)};
    s.velocity = {spec.amplitude_x * w * std::cos(th), 2.0 * spec.amplitude_y * w * std::cos(2.0 * th)};
    out.push_back(s);
  }
  return out;
}

Series2 feature_series(const DyadConfig& cfg, std::size_t n) {
  const double dt = cfg.controller.ctx.dt;
  Trajectory solo(dt);
  if (cfg.solo_path) {
    solo = cycled(load_csv(*cfg.solo_path), dt, n);
  } else {
    LeaderSpec nominal = cfg.leader;
    nominal.phase = 0.0;
    solo = synth_leader(nominal, static_cast<double>(n - 1) * dt, dt);
  }
  Series2 v(n);
  const bool pos = cfg.controller.ctx.feature_channel == FeatureChannel::position;
  for (std::size_t j = 0; j < n; ++j) v.set(j, pos ? solo.position(j) : solo.velocity(j));
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

void LeaderSpec::validate() const {
  if (pattern == LeaderPattern::lemniscate) {
    if (!(amplitude_x > 0.0) || !(amplitude_y > 0.0)) throw ConfigError("leader amplitudes must be positive");
    if (!(freq > 0.0) || !std::isfinite(freq)) throw ConfigError("leader frequency must be positive");
    if (!center.allFinite() || !std::isfinite(phase)) throw ConfigError("leader center and phase must be finite");
  } else if (path.empty()) {
    throw ConfigError("recorded leader needs a path");
  }
}

Trajectory synth_leader(const LeaderSpec& spec, double T, double dt) {
  return lagged_copy(spec, T, dt, 0.0);
}

Trajectory lagged_copy(const LeaderSpec& spec, double T, double dt, double lag) {
  spec.validate();
  if (!(dt > 0.0) || !(T >= 0.0)) throw ConfigError("leader needs dt > 0 and T >= 0");
  const std::size_t n = sample_count(T, dt);
  if (spec.pattern == LeaderPattern::lemniscate) return lemniscate(spec, n, dt, lag);

  if (!std::filesystem::exists(spec.path)) throw IoError("leader recording not found: " + spec.path.string());
  const Trajectory base = cycled(load_csv(spec.path), dt, n);
  const auto shift = static_cast<std::size_t>(std::llround(std::max(0.0, lag) / dt));
  Trajectory out(dt);
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back(base[j < shift ? 0 : j - shift]);
  return out;
}

void DyadConfig::validate() const {
  controller.validate();
  leader.validate();
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (benchmark_trials < 1) throw ConfigError("benchmark_trials must be >= 1");
  if (!(trial_T > 0.0) || !std::isfinite(trial_T)) throw ConfigError("trial_T must be positive");
  if (!(benchmark_lag >= 0.0)) throw ConfigError("benchmark lag must be non-negative");
  if (!all_finite(x0)) throw ConfigError("initial state must be finite");
}

DyadConfig dyad_config_from(const KeyValueConfig& cfg) {
  DyadConfig d;
  d.id = cfg.get_string("id", d.id);
  d.controller.kind = parse_controller(cfg.get_string("controller", "ilc"));
  d.controller.ctx.gains = gain_preset(static_cast<int>(cfg.get_int("dyad", 1)));
  d.controller.ctx.gains.kp = cfg.get_double("kp", d.controller.ctx.gains.kp);
  d.controller.ctx.gains.kv = cfg.get_double("kv", d.controller.ctx.gains.kv);
  d.controller.ctx.gains.ks = cfg.get_double("ks", d.controller.ctx.gains.ks);
  d.controller.ctx.xi = hkb_params_from(cfg);
  d.controller.ctx.dt = cfg.get_double("dt", d.controller.ctx.dt);
  d.controller.ctx.cfg.eps_th = cfg.get_double("eps_th", d.controller.ctx.cfg.eps_th);
  d.controller.ctx.cfg.max_inner_iters =
      static_cast<int>(cfg.get_int("max_inner_iters", d.controller.ctx.cfg.max_inner_iters));
  d.controller.ctx.cfg.T = cfg.get_double("T", d.controller.ctx.cfg.T);
  d.controller.ctx.u_max = cfg.get_double("u_max", d.controller.ctx.u_max);
  const std::string channel = cfg.get_string("feature_channel", "position");
  if (channel == "velocity")
    d.controller.ctx.feature_channel = FeatureChannel::velocity;
  else if (channel != "position")
    throw ConfigError("feature_channel must be position or velocity");
  d.controller.opc_horizon = static_cast<int>(cfg.get_int("opc.horizon", d.controller.opc_horizon));

  const std::string pattern = cfg.get_string("leader.pattern", "lemniscate");
  if (pattern == "recorded") {
    d.leader.pattern = LeaderPattern::recorded;
    d.leader.path = cfg.get_string("leader.path", "");
  } else if (pattern != "lemniscate") {
    throw ConfigError("leader.pattern must be lemniscate or recorded");
  }
  d.leader.amplitude_x = cfg.get_double("leader.ax", d.leader.amplitude_x);
  d.leader.amplitude_y = cfg.get_double("leader.ay", d.leader.amplitude_y);
  d.leader.freq = cfg.get_double("leader.freq", d.leader.freq);
  d.leader.center = {cfg.get_double("leader.cx", 0.0), cfg.get_double("leader.cy", 0.0)};
  if (auto p = cfg.get("solo.path")) d.solo_path = *p;
  d.use_feature = cfg.get_int("use_feature", 1) != 0;
  d.trials = static_cast<int>(cfg.get_int("trials", d.trials));
  d.benchmark_trials = static_cast<int>(cfg.get_int("benchmark_trials", d.benchmark_trials));
  d.trial_T = cfg.get_double("trial_T", d.trial_T);
  d.benchmark_lag = cfg.get_double("lag", d.benchmark_lag);
  const long seed = cfg.get_int("seed", 1);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  d.seed = static_cast<std::uint64_t>(seed);
  d.validate();
  return d;
}

std::vector<TrialPerturbation> draw_perturbations(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::vector<TrialPerturbation> out(static_cast<std::size_t>(std::max(count, 0)));
  for (auto& p : out) {
    p.phase = kTwoPi * unit_draw(rng);
    p.amp_scale_x = 0.95 + 0.1 * unit_draw(rng);
    p.amp_scale_y = 0.95 + 0.1 * unit_draw(rng);
  }
  return out;
}

MetricSummary summarize(const std::vector<TrialRecord>& trials) {
  std::vector<double> r, c, s;
  for (const auto& t : trials) {
    if (t.failed) continue;
    r.push_back(t.report.rmse);
    c.push_back(t.report.cv);
    s.push_back(t.report.svm);
  }
  if (r.empty()) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    return {{nan, nan}, {nan, nan}, {nan, nan}};
  }
  return {mean_std(r), mean_std(c), mean_std(s)};
}

DyadResult run_dyad(const DyadConfig& cfg) {
  cfg.validate();
  const double dt = cfg.controller.ctx.dt;
  const std::size_t n = sample_count(cfg.trial_T, dt);

  DyadResult res;
  res.id = cfg.id;
  res.controller = cfg.controller.kind;

  std::optional<Series2> feature;
  if (cfg.use_feature && cfg.controller.kind == ControllerKind::ilc) feature = feature_series(cfg, n);

  // One stream: controller trials first, then the benchmark pairs.
  const auto draws = draw_perturbations(cfg.seed, cfg.trials + cfg.benchmark_trials);

  auto perturbed = [&](const TrialPerturbation& p) {
    LeaderSpec s = cfg.leader;
    if (s.pattern == LeaderPattern::lemniscate) {
      s.phase += p.phase;
      s.amplitude_x *= p.amp_scale_x;
      s.amplitude_y *= p.amp_scale_y;
    }
    return s;
  };

  for (int i = 0; i < cfg.trials; ++i) {
    const auto& p = draws[static_cast<std::size_t>(i)];
    TrialRecord rec;
    rec.index = i;
    rec.phase = p.phase;
    rec.amp_scale_x = p.amp_scale_x;
    rec.amp_scale_y = p.amp_scale_y;
    const LeaderSpec spec = perturbed(p);
    rec.leader = synth_leader(spec, cfg.trial_T, dt);
    ++res.trials_attempted;
    try {
      rec.follower = run_closed_loop(cfg.controller, rec.leader, cfg.x0, feature).vp;
      rec.report = compute_metrics(rec.leader, rec.follower);
      ++res.trials_succeeded;
    } catch (const DivergenceError& e) {
      rec.failed = true;
      rec.failure = e.what();
      rec.follower = Trajectory(dt);
      ++res.trials_failed;
    }
    res.trials.push_back(std::move(rec));
  }

  for (int i = 0; i < cfg.benchmark_trials; ++i) {
    const auto& p = draws[static_cast<std::size_t>(cfg.trials + i)];
    TrialRecord rec;
    rec.index = i;
    rec.phase = p.phase;
    rec.amp_scale_x = p.amp_scale_x;
    rec.amp_scale_y = p.amp_scale_y;
    const LeaderSpec spec = perturbed(p);
    rec.leader = synth_leader(spec, cfg.trial_T, dt);
    rec.follower = lagged_copy(spec, cfg.trial_T, dt, cfg.benchmark_lag);
    rec.report = compute_metrics(rec.leader, rec.follower);
    res.benchmark_trials.push_back(std::move(rec));
  }

  res.summary = summarize(res.trials);
  res.benchmark = summarize(res.benchmark_trials);
  if (res.trials_succeeded > 0) {
    res.rmse_error_rate = error_rate_vs_benchmark(res.summary.rmse.mean, res.benchmark.rmse.mean);
    res.cv_error_rate = error_rate_vs_benchmark(res.summary.cv.mean, res.benchmark.cv.mean);
    res.svm_error_rate = error_rate_vs_benchmark(res.summary.svm.mean, res.benchmark.svm.mean);
  } else {
    res.rmse_error_rate = res.cv_error_rate = res.svm_error_rate = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

const RadarChart* MatchingReport::radar(const std::string& strategy, const std::string& chart) const {
  for (const auto& r : radars)
    if (r.strategy == strategy && r.chart == chart) return &r;
  return nullptr;
}

double MatchingReport::mean_rate(const std::string& strategy, const std::string& metric) const {
  for (const auto& m : means)
    if (m.strategy == strategy && m.metric == metric) return m.mean_rate;
  throw ConfigError("no mean for " + strategy + "/" + metric);
}

MatchingReport matching_report(const StrategyTable& strategies, const std::vector<DyadMetrics>& benchmark) {
  std::map<std::string, const DyadMetrics*> bench;
  for (const auto& b : benchmark) bench[b.dyad] = &b;

  std::vector<ErrorRateRow> rows;
  for (const auto& [name, dyads] : strategies)
    for (const auto& d : dyads) {
      auto it = bench.find(d.dyad);
      if (it == bench.end()) throw ConfigError("no benchmark entry for dyad '" + d.dyad + "'");
      const DyadMetrics& b = *it->second;
      const double values[] = {d.rmse, d.cv, d.svm};
      const double refs[] = {b.rmse, b.cv, b.svm};
      for (int m = 0; m < 3; ++m)
        rows.push_back({name, d.dyad, kMetrics[m], values[m], refs[m], error_rate_vs_benchmark(values[m], refs[m])});
    }
  return report_from_rates(std::move(rows));
}

MatchingReport report_from_rates(std::vector<ErrorRateRow> rows) {
  MatchingReport rep;
  rep.rows = std::move(rows);

  std::vector<std::string> strategies;
  for (const auto& r : rep.rows)
    if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end())
      strategies.push_back(r.strategy);

  for (const auto& s : strategies) {
    RadarChart over_metrics{s, "metrics", {}, 0.0};
    for (const char* metric : kMetrics) {
      RadarChart over_dyads{s, metric, {}, 0.0};
      double sum = 0.0;
      for (const auto& r : rep.rows)
        if (r.strategy == s && r.metric == metric) {
          over_dyads.input.labels.push_back(r.dyad);
          over_dyads.input.radii.push_back(r.rate);
          sum += r.rate;
        }
      const std::size_t count = over_dyads.input.radii.size();
      if (count == 0) continue;
      const double mean = sum / static_cast<double>(count);
      rep.means.push_back({s, metric, mean});
      over_metrics.input.labels.push_back(metric);
      over_metrics.input.radii.push_back(mean);
      if (count >= 3) {
        over_dyads.area = radar_area(over_dyads.input);
        rep.radars.push_back(std::move(over_dyads));
      }
    }
    if (over_metrics.input.radii.size() >= 3) {
      over_metrics.area = radar_area(over_metrics.input);
      rep.radars.push_back(std::move(over_metrics));
    }
  }
  return rep;
}

std::string report_csv(const MatchingReport& r) {
  std::string s = "strategy,dyad,metric,value,benchmark,error_rate\n";
  for (const auto& row : r.rows)
    s += csv_field(row.strategy) + "," + csv_field(row.dyad) + "," + row.metric + "," + format_double(row.value) +
         "," + format_double(row.benchmark) + "," + format_double(row.rate) + "\n";
  for (const auto& m : r.means)
    s += csv_field(m.strategy) + ",mean," + m.metric + ",,," + format_double(m.mean_rate) + "\n";
  return s;
}

std::string radar_csv(const MatchingReport& r) {
  std::string s = "strategy,chart,axis,radius,area\n";
  for (const auto& c : r.radars)
    for (std::size_t i = 0; i < c.input.radii.size(); ++i)
      s += csv_field(c.strategy) + "," + c.chart + "," + csv_field(c.input.labels[i]) + "," +
           format_double(c.input.radii[i]) + "," + format_double(c.area) + "\n";
  return s;
}

std::string trials_csv(const DyadResult& r) {
  std::string s = "dyad,role,trial,status,rmse,cv,svm,n\n";
  auto emit = [&](const TrialRecord& t, const std::string& role) {
    s += csv_field(r.id) + "," + role + "," + std::to_string(t.index) + "," + (t.failed ? "failed" : "ok") + "," +
         format_double(t.report.rmse) + "," + format_double(t.report.cv) + "," + format_double(t.report.svm) + "," +
         std::to_string(t.report.n) + "\n";
  };
  for (const auto& t : r.trials) emit(t, std::string(to_string(r.controller)));
  for (const auto& t : r.benchmark_trials) emit(t, "benchmark");
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace waggle
