#include "waggle/service/session.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "waggle/config.hpp"
#include "waggle/error.hpp"
#include "waggle/harness.hpp"

namespace waggle::service {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown member '" + key + "' in " + where);
  }
}

double cfg_number(const json& j, const char* key, double fallback, bool allow_inf = false) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (allow_inf && v.is_string() && v.get<std::string>() == "inf") return kInf;
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

int cfg_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(std::string("'") + key + "' must be an integer");
  return j.at(key).get<int>();
}

json number_or_inf(double v) { return std::isinf(v) && v > 0 ? json("inf") : json(v); }

// Linear interpolation of irregular samples onto t0 + j*dt.
Trajectory resample_irregular(const std::vector<SoloSample>& s, double dt) {
  if (s.size() < 2) throw InsufficientDataError("solo upload needs at least 2 samples");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i].t) || !std::isfinite(s[i].x) || !std::isfinite(s[i].y))
      throw FormatError("solo upload has non-finite values");
    if (i > 0 && !(s[i].t > s[i - 1].t)) throw FormatError("solo upload timestamps must increase");
  }
  const double t0 = s.front().t;
  const std::size_t n = sample_count(s.back().t - t0, dt);
  Trajectory out(dt, t0);
  out.reserve(n);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = std::min(t0 + static_cast<double>(j) * dt, s.back().t);
    while (seg + 2 < s.size() && s[seg + 1].t < t) ++seg;
    const double w = (t - s[seg].t) / (s[seg + 1].t - s[seg].t);
    out.push_back({Vec2{s[seg].x + w * (s[seg + 1].x - s[seg].x), s[seg].y + w * (s[seg + 1].y - s[seg].y)},
                   Vec2::Zero()});
  }
  if (out.size() < 2) throw InsufficientDataError("solo upload shorter than one tick");
  return estimate_velocity(out);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Archive trajectories may hold zero or one sample, which the general CSV
// reader refuses (no spacing to infer).
Trajectory load_archive_trajectory(const std::filesystem::path& p, double dt) {
  const std::string text = read_file(p);
  std::size_t rows = 0;
  std::string first_row;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) {
      if (rows == 0) first_row = line;
      ++rows;
    }
  if (rows >= 2) return parse_csv(text);
  if (rows == 0) return Trajectory(dt);
  std::vector<double> v;
  std::istringstream fields(first_row);
  std::string f;
  while (std::getline(fields, f, ',')) {
    auto d = parse_double(f);
    if (!d) throw ParseError(2, "bad number '" + f + "'");
    v.push_back(*d);
  }
  if (v.size() != 5) throw ParseError(2, "expected t,x,y,vx,vy");
  Trajectory out(dt, v[0]);
  out.push_back({Vec2{v[1], v[2]}, Vec2{v[3], v[4]}});
  return out;
}

std::string solo_csv(const std::vector<SoloSample>& s) {
  std::string out = "t,x,y\n";
  for (const auto& p : s) out += format_double(p.t) + "," + format_double(p.x) + "," + format_double(p.y) + "\n";
  return out;
}

std::vector<std::vector<double>> numeric_rows(const std::string& text, std::size_t skip_cols) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 1;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string f;
    std::size_t col = 0;
    while (std::getline(fields, f, ',')) {
      if (col++ < skip_cols) {
        row.push_back(kNaN);
        continue;
      }
      auto d = parse_double(f);
      if (!d) throw ParseError(lineno, "bad number '" + f + "'");
      row.push_back(*d);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void SessionConfig::validate() const {
  if (!(dt_tick > 0.0) || !std::isfinite(dt_tick)) throw ConfigError("dt_tick must be positive");
  if (filter.mode != FilterMode::causal) throw ConfigError("live sessions need a causal filter");
  filter.validate();
  if (!(cv_window_periods > 0.0)) throw ConfigError("cv window must be positive");
  if (metrics_every < 1) throw ConfigError("metrics_every must be >= 1");
  if (!all_finite(x0)) throw ConfigError("x0 must be finite");
  for (const auto& u : feedforward)
    if (!u.allFinite()) throw ConfigError("feedforward must be finite");
  controller_spec().validate();
}

ControllerSpec SessionConfig::controller_spec() const {
  ControllerSpec s;
  s.kind = controller;
  s.ctx.cfg = online;
  s.ctx.gains = gains;
  s.ctx.xi = hkb;
  s.ctx.dt = dt_tick;
  s.ctx.feature_channel = feature_channel;
  s.ctx.u_max = u_max;
  s.ctx.budget_s = dt_tick;
  s.opc_horizon = opc_horizon;
  return s;
}

SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("session config must be an object");
  reject_unknown(j,
                 {"dt_tick", "controller", "dyad", "gains", "hkb", "online", "filter_window", "feature_channel", "u_max",
                  "opc_horizon", "x0", "cv_window_periods", "metrics_every"},
                 "config");
  SessionConfig c;
  c.dt_tick = cfg_number(j, "dt_tick", c.dt_tick);
  if (j.contains("controller")) {
    if (!j["controller"].is_string()) throw ConfigError("'controller' must be a string");
    c.controller = parse_controller(j["controller"].get<std::string>());
  }
  if (j.contains("dyad")) c.gains = gain_preset(cfg_int(j, "dyad", 1));
  if (j.contains("gains")) {
    const json& g = j["gains"];
    if (!g.is_object()) throw ConfigError("'gains' must be an object");
    reject_unknown(g, {"kp", "kv", "ks"}, "gains");
    c.gains.kp = cfg_number(g, "kp", c.gains.kp);
    c.gains.kv = cfg_number(g, "kv", c.gains.kv);
    c.gains.ks = cfg_number(g, "ks", c.gains.ks);
  }
  if (j.contains("hkb")) {
    const json& h = j["hkb"];
    if (!h.is_object()) throw ConfigError("'hkb' must be an object");
    reject_unknown(h, {"alpha", "beta", "gamma", "omega"}, "hkb");
    c.hkb.alpha = cfg_number(h, "alpha", c.hkb.alpha);
    c.hkb.beta = cfg_number(h, "beta", c.hkb.beta);
    c.hkb.gamma = cfg_number(h, "gamma", c.hkb.gamma);
    c.hkb.omega = cfg_number(h, "omega", c.hkb.omega);
  }
  if (j.contains("online")) {
    const json& o = j["online"];
    if (!o.is_object()) throw ConfigError("'online' must be an object");
    reject_unknown(o, {"eps_th", "max_inner_iters", "T", "eps_floor"}, "online");
    c.online.eps_th = cfg_number(o, "eps_th", c.online.eps_th, true);
    c.online.max_inner_iters = cfg_int(o, "max_inner_iters", c.online.max_inner_iters);
    c.online.T = cfg_number(o, "T", c.online.T);
    c.online.eps_floor = cfg_number(o, "eps_floor", c.online.eps_floor);
  }
  c.filter.window = cfg_int(j, "filter_window", c.filter.window);
  if (j.contains("feature_channel")) {
    const json& f = j["feature_channel"];
    if (f == "position")
      c.feature_channel = FeatureChannel::position;
    else if (f == "velocity")
      c.feature_channel = FeatureChannel::velocity;
    else
      throw ConfigError("'feature_channel' must be \"position\" or \"velocity\"");
  }
  c.u_max = cfg_number(j, "u_max", c.u_max, true);
  c.opc_horizon = cfg_int(j, "opc_horizon", c.opc_horizon);
  if (j.contains("x0")) {
    const json& x = j["x0"];
    if (!x.is_array() || x.size() != 4) throw ConfigError("'x0' must be an array of 4 numbers");
    for (int i = 0; i < 4; ++i) {
      if (!x[i].is_number()) throw ConfigError("'x0' must be an array of 4 numbers");
      c.x0[i] = x[i].get<double>();
    }
  }
  c.cv_window_periods = cfg_number(j, "cv_window_periods", c.cv_window_periods);
  c.metrics_every = cfg_int(j, "metrics_every", c.metrics_every);
  c.validate();
  return c;
}

json to_json(const SessionConfig& c) {
  return {{"dt_tick", c.dt_tick},
          {"controller", std::string(to_string(c.controller))},
          {"gains", {{"kp", c.gains.kp}, {"kv", c.gains.kv}, {"ks", c.gains.ks}}},
          {"hkb", {{"alpha", c.hkb.alpha}, {"beta", c.hkb.beta}, {"gamma", c.hkb.gamma}, {"omega", c.hkb.omega}}},
          {"online",
           {{"eps_th", number_or_inf(c.online.eps_th)},
            {"max_inner_iters", c.online.max_inner_iters},
            {"T", c.online.T},
            {"eps_floor", c.online.eps_floor}}},
          {"filter_window", c.filter.window},
          {"feature_channel", c.feature_channel == FeatureChannel::position ? "position" : "velocity"},
          {"u_max", number_or_inf(c.u_max)},
          {"opc_horizon", c.opc_horizon},
          {"x0", {c.x0[0], c.x0[1], c.x0[2], c.x0[3]}},
          {"cv_window_periods", c.cv_window_periods},
          {"metrics_every", c.metrics_every}};
}

Session::Session(std::string id, SessionConfig cfg)
    : id_(std::move(id)),
      initial_cfg_(cfg),
      cfg_(std::move(cfg)),
      smoother_(cfg_.filter.window),
      hp_hist_(cfg_.dt_tick),
      vp_hist_(cfg_.dt_tick) {
  cfg_.validate();
  spec_ = cfg_.controller_spec();
  state_.x = cfg_.x0;
}

void Session::require_open(const char* op) const {
  if (status_ == SessionStatus::closed) throw SessionError(std::string(op) + " on closed session " + id_);
  if (status_ == SessionStatus::faulted) throw SessionError(std::string(op) + " on faulted session " + id_);
}

void Session::ingest_hp(double t, const Vec2& position) {
  require_open("ingest");
  if (!std::isfinite(t) || !position.allFinite()) throw FormatError("HP sample must be finite");
  events_ += std::to_string(ticks_) + ",hp," + format_double(t) + "," + format_double(position.x()) + "," +
             format_double(position.y()) + "\n";
  if (last_hp_t_ && !(t > *last_hp_t_)) {
    ++dropped_;
    return;
  }
  last_hp_t_ = t;
  const PlanarSample s = smoother_.push(t, position);
  latest_hp_ = HpObservation{s.position, s.velocity};
}

void Session::upload_solo(const std::vector<SoloSample>& samples) {
  require_open("solo upload");
  const Trajectory grid = resample_irregular(samples, cfg_.dt_tick);
  Series2 v(grid.size());
  const bool pos = cfg_.feature_channel == FeatureChannel::position;
  for (std::size_t j = 0; j < grid.size(); ++j) v.set(j, pos ? grid.position(j) : grid.velocity(j));
  events_ += std::to_string(ticks_) + ",solo," + std::to_string(solo_uploads_.size()) + ",,\n";
  solo_uploads_.push_back(samples);
  feature_ = std::move(v);
}

void Session::set_gains(const IlcGains& gains) {
  require_open("set_gains");
  gains.validate();
  events_ += std::to_string(ticks_) + ",gains," + format_double(gains.kp) + "," + format_double(gains.kv) + "," +
             format_double(gains.ks) + "\n";
  cfg_.gains = gains;
  spec_.ctx.gains = gains;
}

TickOutput Session::tick() {
  require_open("tick");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t j = ticks_;
  const double t = static_cast<double>(j) * cfg_.dt_tick;

  TickOutput out;
  out.vp = {t, state_.x[0], state_.x[2]};
  vp_hist_.push_back(sample_from_state(state_.x));
  if (latest_hp_) {
    if (hp_hist_.empty()) {
      first_hp_tick_ = j;
      hp_hist_ = Trajectory(cfg_.dt_tick, t);
    }
    hp_hist_.push_back({latest_hp_->position, latest_hp_->velocity});
    const double dx = latest_hp_->position.x() - state_.x[0];
    const double dy = latest_hp_->position.y() - state_.x[2];
    sq_err_ += dx * dx + dy * dy;
    max_abs_x_ = std::fmax(max_abs_x_, std::fabs(state_.x[0]));
    max_abs_y_ = std::fmax(max_abs_y_, std::fabs(state_.x[2]));
  }

  std::optional<Vec2> v;
  if (feature_) v = feature_->at(j % feature_->size());
  const ControlInput ff = cfg_.feedforward.empty() ? ControlInput::Zero() : cfg_.feedforward[j % cfg_.feedforward.size()];

  try {
    const OnlineStepResult r = controller_step(spec_, state_, latest_hp_, v, ff);
    state_ = r.next;
    out.diag = r.diag;
    last_eps_ = r.diag.eps;
    last_k_ = r.diag.inner_iters;
  } catch (const DivergenceError& e) {
    status_ = SessionStatus::faulted;
    fault_ = FaultMsg{"divergence", e.what(), e.time()};
    out.fault = fault_;
  }
  ++ticks_;

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.diag.elapsed_s = elapsed;
  out.diag.overrun = elapsed > cfg_.dt_tick;
  if (out.diag.overrun) ++overruns_;

  if (ticks_ % static_cast<std::size_t>(cfg_.metrics_every) == 0 || out.fault) out.metrics = live_metrics();
  return out;
}

MetricsMsg Session::live_metrics() const {
  MetricsMsg m;
  m.t = vp_hist_.empty() ? 0.0 : vp_hist_.time(vp_hist_.size() - 1);
  m.eps = last_eps_;
  m.k = last_k_;
  const std::size_t n = hp_hist_.size();
  if (n == 0) {
    m.rmse = m.cv = m.svm = kNaN;
    return m;
  }
  m.rmse = std::sqrt(sq_err_ / static_cast<double>(n));
  m.svm = max_abs_x_ * max_abs_y_;
  m.cv = windowed_cv(hp_hist_, vp_hist_.slice(first_hp_tick_, n), cfg_.cv_window_periods);
  return m;
}

SessionArchive Session::close() {
  if (archive_) return *archive_;
  SessionArchive a;
  a.session_id = id_;
  a.config = initial_cfg_;
  a.hp = hp_hist_;
  a.vp = vp_hist_;
  a.first_hp_tick = first_hp_tick_;
  a.report = compute_metrics(hp_hist_, vp_hist_.slice(first_hp_tick_, hp_hist_.size()));
  a.final_metrics = live_metrics();
  a.ticks = ticks_;
  a.dropped = dropped_;
  a.overruns = overruns_;
  a.fault = fault_;
  a.events_csv = "tick,type,a,b,c\n" + events_;
  a.solo_uploads = solo_uploads_;
  status_ = SessionStatus::closed;
  archive_ = a;
  return a;
}

MetricsMsg recompute_metrics(const SessionArchive& a) {
  MetricsMsg m;
  m.t = a.vp.empty() ? 0.0 : a.vp.time(a.vp.size() - 1);
  m.eps = a.final_metrics.eps;
  m.k = a.final_metrics.k;
  const std::size_t n = a.hp.size();
  if (n == 0) {
    m.rmse = m.cv = m.svm = kNaN;
    return m;
  }
  if (a.first_hp_tick + n > a.vp.size()) throw AlignmentError("archive VP shorter than its HP record");
  const Trajectory vp = a.vp.slice(a.first_hp_tick, n);
  m.rmse = rmse(a.hp, vp);
  m.svm = svm(vp);
  m.cv = windowed_cv(a.hp, vp, a.config.cv_window_periods);
  return m;
}

void SessionArchive::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_text(dir / "hp.csv", to_csv(hp));
  write_text(dir / "vp.csv", to_csv(vp));
  write_text(dir / "events.csv", events_csv);
  for (std::size_t i = 0; i < solo_uploads.size(); ++i)
    write_text(dir / ("solo_" + std::to_string(i) + ".csv"), solo_csv(solo_uploads[i]));
  write_text(dir / "config.json", to_json(config).dump(2) + "\n");

  std::string rep = to_key_value(report);
  write_text(dir / "report.txt", rep);

  std::string s;
  s += "session_id = " + session_id + "\n";
  s += "ticks = " + std::to_string(ticks) + "\n";
  s += "first_hp_tick = " + std::to_string(first_hp_tick) + "\n";
  s += "dropped = " + std::to_string(dropped) + "\n";
  s += "overruns = " + std::to_string(overruns) + "\n";
  s += "solo_uploads = " + std::to_string(solo_uploads.size()) + "\n";
  s += "final_rmse = " + format_double(final_metrics.rmse) + "\n";
  s += "final_cv = " + format_double(final_metrics.cv) + "\n";
  s += "final_svm = " + format_double(final_metrics.svm) + "\n";
  s += "final_eps = " + format_double(final_metrics.eps) + "\n";
  s += "final_k = " + std::to_string(final_metrics.k) + "\n";
  if (fault) {
    s += "fault_code = " + fault->code + "\n";
    s += "fault_message = " + fault->message + "\n";
    s += "fault_t = " + format_double(fault->t) + "\n";
  }
  write_text(dir / "session.txt", s);
}

SessionArchive SessionArchive::load(const std::filesystem::path& dir) {
  SessionArchive a;
  a.config = session_config_from_json(json::parse(read_file(dir / "config.json")));
  a.hp = load_archive_trajectory(dir / "hp.csv", a.config.dt_tick);
  a.vp = load_archive_trajectory(dir / "vp.csv", a.config.dt_tick);
  a.events_csv = read_file(dir / "events.csv");

  const KeyValueConfig s = KeyValueConfig::load(dir / "session.txt");
  a.session_id = s.get_string("session_id", "");
  a.ticks = static_cast<std::size_t>(s.get_int("ticks", 0));
  a.first_hp_tick = static_cast<std::size_t>(s.get_int("first_hp_tick", 0));
  a.dropped = static_cast<std::size_t>(s.get_int("dropped", 0));
  a.overruns = static_cast<std::size_t>(s.get_int("overruns", 0));
  auto nan_or = [&](const char* key) {
    const std::string v = s.get_string(key, "nan");
    if (v == "nan" || v == "-nan") return kNaN;
    return s.require_double(key);
  };
  a.final_metrics.t = a.vp.empty() ? 0.0 : a.vp.time(a.vp.size() - 1);
  a.final_metrics.rmse = nan_or("final_rmse");
  a.final_metrics.cv = nan_or("final_cv");
  a.final_metrics.svm = nan_or("final_svm");
  a.final_metrics.eps = nan_or("final_eps");
  a.final_metrics.k = static_cast<int>(s.get_int("final_k", 0));
  if (auto code = s.get("fault_code"))
    a.fault = FaultMsg{*code, s.get_string("fault_message", ""), nan_or("fault_t")};

  const long uploads = s.get_int("solo_uploads", 0);
  for (long i = 0; i < uploads; ++i) {
    std::vector<SoloSample> samples;
    for (const auto& r : numeric_rows(read_file(dir / ("solo_" + std::to_string(i) + ".csv")), 0)) {
      if (r.size() != 3) throw FormatError("solo archive rows need t,x,y");
      samples.push_back({r[0], r[1], r[2]});
    }
    a.solo_uploads.push_back(std::move(samples));
  }
  const Trajectory vp_slice = a.vp.slice(std::min(a.first_hp_tick, a.vp.size()),
                                         std::min(a.hp.size(), a.vp.size() - std::min(a.first_hp_tick, a.vp.size())));
  a.report = compute_metrics(a.hp, vp_slice);
  return a;
}

SessionArchive replay(const SessionArchive& archive) {
  struct Event {
    std::size_t tick;
    std::string type;
    double a, b, c;
  };
  std::vector<Event> events;
  std::istringstream in(archive.events_csv);
  std::string line;
  std::size_t lineno = 1;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    std::string part;
    while (std::getline(fields, part, ',')) f.push_back(part);
    while (f.size() < 5) f.emplace_back();
    Event e{};
    auto tick = parse_double(f[0]);
    if (!tick) throw ParseError(lineno, "bad tick");
    e.tick = static_cast<std::size_t>(*tick);
    e.type = f[1];
    auto num = [&](const std::string& s) {
      if (s.empty()) return 0.0;
      auto d = parse_double(s);
      if (!d) throw ParseError(lineno, "bad number '" + s + "'");
      return *d;
    };
    e.a = num(f[2]);
    e.b = num(f[3]);
    e.c = num(f[4]);
    events.push_back(std::move(e));
  }

  Session s(archive.session_id, archive.config);
  std::size_t next = 0;
  auto apply_until = [&](std::size_t tick) {
    while (next < events.size() && events[next].tick <= tick) {
      const Event& e = events[next++];
      if (e.type == "hp") {
        s.ingest_hp(e.a, {e.b, e.c});
      } else if (e.type == "gains") {
        s.set_gains({e.a, e.b, e.c});
      } else if (e.type == "solo") {
        const auto idx = static_cast<std::size_t>(e.a);
        if (idx >= archive.solo_uploads.size()) throw FormatError("event refers to a missing solo upload");
        s.upload_solo(archive.solo_uploads[idx]);
      } else {
        throw FormatError("unknown event type '" + e.type + "'");
      }
    }
  };
  for (std::size_t j = 0; j < archive.ticks; ++j) {
    apply_until(j);
    s.tick();
    if (s.status() != SessionStatus::open) break;
  }
  if (s.status() == SessionStatus::open) apply_until(archive.ticks);
  SessionArchive out = s.close();
  return out;
}

}  // namespace waggle::service
