#include "waggle/controllers.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "waggle/error.hpp"
#include "waggle/sigproc.hpp"
#include "waggle/simd/kernels.hpp"

namespace waggle {

void IlcGains::validate() const {
  if (!std::isfinite(kp) || !std::isfinite(kv) || !std::isfinite(ks)) throw ConfigError("gains must be finite");
  if (ks < 0.0) throw ConfigError("ks must be non-negative");
}

IlcGains gain_preset(int dyad) {
  switch (dyad) {
    case 1: return {0.31, 0.01, 0.02};
    case 2: return {0.45, 0.02, 0.03};
    case 3: return {0.16, 0.02, 0.01};
    case 4: return {0.41, 0.04, 0.03};
    default: throw ConfigError("no gain preset for dyad " + std::to_string(dyad));
  }
}

std::map<std::string, IlcGains> load_gain_presets(const std::filesystem::path& path) {
  const auto cfg = KeyValueConfig::load(path);
  std::map<std::string, IlcGains> out;
  for (const auto& [key, value] : cfg.entries()) {
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) throw ConfigError("gain preset key without '.': " + key);
    const std::string name = key.substr(0, dot);
    const std::string field = key.substr(dot + 1);
    const double v = cfg.require_double(key);
    IlcGains& g = out[name];
    if (field == "kp") g.kp = v;
    else if (field == "kv") g.kv = v;
    else if (field == "ks") g.ks = v;
    else throw ConfigError("unknown gain field: " + key);
  }
  for (const auto& [name, g] : out) g.validate();
  return out;
}

std::string format_gain_presets(const std::map<std::string, IlcGains>& presets) {
  std::string s;
  for (const auto& [name, g] : presets) {
    s += name + ".kp = " + format_double(g.kp) + "\n";
    s += name + ".kv = " + format_double(g.kv) + "\n";
    s += name + ".ks = " + format_double(g.ks) + "\n";
  }
  return s;
}

IterationBuffer IterationBuffer::zeros(std::size_t n, double dt) {
  IterationBuffer b;
  b.dt = dt;
  b.u = Series2(n);
  b.e = Series2(n);
  b.edot = Series2(n);
  b.s = Series2(n);
  return b;
}

void IterationBuffer::validate() const {
  const std::size_t n = u.size();
  for (const Series2* s : {&u, &e, &edot, &this->s}) {
    if (s->c1.size() != n || s->c2.size() != n) throw AlignmentError("iteration buffer sequences differ in length");
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(s->c1[j]) || !std::isfinite(s->c2[j]))
        throw InvalidStateError("iteration buffer holds a non-finite value");
  }
}

std::string IterationBuffer::to_csv() const {
  std::string out = "u1,u2,e1,e2,ed1,ed2,s1,s2\n";
  for (std::size_t j = 0; j < size(); ++j) {
    const double row[8] = {u.c1[j], u.c2[j], e.c1[j], e.c2[j], edot.c1[j], edot.c2[j], s.c1[j], s.c2[j]};
    for (int c = 0; c < 8; ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

void IterationBuffer::save_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv();
}

IterationBuffer IterationBuffer::parse_csv(const std::string& text, double dt, int k) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  IterationBuffer b;
  b.dt = dt;
  b.k = k;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "u1,u2,e1,e2,ed1,ed2,s1,s2") throw ParseError(line_no, "expected iteration buffer header");
      header = true;
      continue;
    }
    double row[8];
    std::size_t start = 0;
    for (int c = 0; c < 8; ++c) {
      const auto comma = line.find(',', start);
      if ((c < 7) == (comma == std::string::npos)) throw ParseError(line_no, "expected 8 fields");
      const auto v = parse_double(std::string_view(line).substr(start, comma - start));
      if (!v) throw ParseError(line_no, "bad number");
      row[c] = *v;
      start = comma + 1;
    }
    b.u.c1.push_back(row[0]);
    b.u.c2.push_back(row[1]);
    b.e.c1.push_back(row[2]);
    b.e.c2.push_back(row[3]);
    b.edot.c1.push_back(row[4]);
    b.edot.c2.push_back(row[5]);
    b.s.c1.push_back(row[6]);
    b.s.c2.push_back(row[7]);
  }
  if (!header) throw ParseError(line_no, "missing header");
  b.validate();
  return b;
}

IterationBuffer IterationBuffer::load_csv(const std::filesystem::path& path, double dt, int k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), dt, k);
}

FeatureSignal FeatureSignal::from_recording(const Trajectory& source, FeatureChannel channel, double dt,
                                            std::size_t n) {
  const Trajectory grid = resample(source, dt);
  if (grid.size() < n) throw AlignmentError("feature recording shorter than the trial horizon");
  FeatureSignal f{source, channel, Series2(n)};
  for (std::size_t j = 0; j < n; ++j)
    f.v.set(j, channel == FeatureChannel::position ? grid.position(j) : grid.velocity(j));
  return f;
}

ControlInput pd_control(const Vec2& e, const Vec2& edot, const IlcGains& gains) {
  return gains.kp * e + gains.kv * edot;
}

Series2 ilc_update(const IterationBuffer& prev, const IlcGains& gains) {
  prev.validate();
  Series2 out(prev.size());
  simd::ilc_update(prev.u.c1, prev.e.c1, prev.edot.c1, prev.s.c1, gains.kp, gains.kv, gains.ks, out.c1);
  simd::ilc_update(prev.u.c2, prev.e.c2, prev.edot.c2, prev.s.c2, gains.kp, gains.kv, gains.ks, out.c2);
  return out;
}

double error_rate(const Vec2& p_h, const Vec2& p_k, double eps_floor) {
  return (p_h - p_k).norm() / std::max(p_h.norm(), eps_floor);
}

namespace {

// Runs one repetition with controls u and fills the error channels of buf.
Trajectory run_iteration(const PlantModel& plant, const Trajectory& hp, const std::optional<FeatureSignal>& feature,
                         IterationBuffer& buf) {
  const std::size_t n = hp.size();
  std::vector<ControlInput> controls(n);
  for (std::size_t j = 0; j < n; ++j) controls[j] = buf.u.at(j);
  const double T = hp.duration();
  Trajectory vp;
  try {
    vp = simulate(plant.x0, plant.xi, controls, hp.dt(), T);
  } catch (const DivergenceError& err) {
    throw DivergenceError(err.time(), buf.k);
  }
  for (std::size_t j = 0; j < n; ++j) {
    buf.e.set(j, hp.position(j) - vp.position(j));
    buf.edot.set(j, hp.velocity(j) - vp.velocity(j));
    if (feature) {
      const Vec2 y = feature->channel == FeatureChannel::position ? vp.position(j) : vp.velocity(j);
      buf.s.set(j, feature->v.at(j) - y);
    }
  }
  return vp;
}

double position_rmse(const IterationBuffer& b) {
  const std::size_t n = b.size();
  const std::vector<double> zeros(n, 0.0);
  const double ss = simd::sum_sq_diff(b.e.c1, zeros) + simd::sum_sq_diff(b.e.c2, zeros);
  return std::sqrt(ss / static_cast<double>(n));
}

}  // namespace

IlcTrialResult run_ilc_trial(const PlantModel& plant, const Trajectory& hp,
                             const std::optional<FeatureSignal>& feature, const IlcGains& gains, int iters,
                             const std::optional<Series2>& warm_start) {
  gains.validate();
  plant.xi.validate();
  if (iters < 0) throw ConfigError("iteration count must be non-negative");
  if (hp.size() < 2) throw InsufficientDataError("HP trajectory needs at least 2 samples");
  const std::size_t n = hp.size();
  if (feature && feature->v.size() != n) throw AlignmentError("feature signal not aligned to the trial grid");

  IlcTrialResult result;
  IterationBuffer buf = IterationBuffer::zeros(n, hp.dt());
  if (warm_start) {
    if (warm_start->size() != n) throw AlignmentError("warm start not aligned to the trial grid");
    buf.u = *warm_start;
  }

  for (int k = 0; k <= iters; ++k) {
    if (k > 0) {
      Series2 next = ilc_update(result.buffers.back(), gains);
      buf = IterationBuffer::zeros(n, hp.dt());
      buf.k = k;
      buf.u = std::move(next);
    }
    result.trajectories.push_back(run_iteration(plant, hp, feature, buf));
    result.rmse.push_back(position_rmse(buf));
    result.buffers.push_back(buf);
  }
  return result;
}

}  // namespace waggle
