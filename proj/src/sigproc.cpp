#include "waggle/sigproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "waggle/config.hpp"
#include "waggle/error.hpp"

namespace waggle {

void FilterSpec::validate() const {
  if (window < 1) throw ConfigError("filter window must be >= 1");
  if (mode == FilterMode::centered && window % 2 == 0)
    throw ConfigError("centered filter window must be odd");
}

namespace {

void filter_channel(std::span<const double> in, std::span<double> out, const FilterSpec& spec) {
  const std::size_t n = in.size();
  const std::size_t w = static_cast<std::size_t>(spec.window);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t lo, hi;
    if (spec.mode == FilterMode::centered) {
      const std::size_t half = std::min({(w - 1) / 2, j, n - 1 - j});
      lo = j - half;
      hi = j + half;
    } else {
      lo = j + 1 >= w ? j + 1 - w : 0;
      hi = j;
    }
    double sum = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) sum += in[i];
    out[j] = sum / static_cast<double>(hi - lo + 1);
  }
}

}  // namespace

Trajectory moving_average(const Trajectory& series, const FilterSpec& spec) {
  spec.validate();
  if (series.empty()) throw InsufficientDataError("moving_average: empty series");
  Trajectory out(series.dt(), series.t0());
  out.resize(series.size());
  filter_channel(series.x(), out.x(), spec);
  filter_channel(series.y(), out.y(), spec);
  filter_channel(series.vx(), out.vx(), spec);
  filter_channel(series.vy(), out.vy(), spec);
  return out;
}

namespace {

void differentiate(std::span<const double> p, std::span<double> v, double dt) {
  const std::size_t n = p.size();
  v[0] = (p[1] - p[0]) / dt;
  for (std::size_t j = 1; j + 1 < n; ++j) v[j] = (p[j + 1] - p[j - 1]) / (2.0 * dt);
  v[n - 1] = (p[n - 1] - p[n - 2]) / dt;
}

}  // namespace

Trajectory estimate_velocity(const Trajectory& positions) {
  if (positions.size() < 2) throw InsufficientDataError("estimate_velocity: need at least 2 samples");
  Trajectory out = positions;
  differentiate(positions.x(), out.vx(), positions.dt());
  differentiate(positions.y(), out.vy(), positions.dt());
  return out;
}

Trajectory resample(const Trajectory& series, double dt_new) {
  if (!(dt_new > 0.0)) throw ConfigError("resample: dt_new must be positive");
  if (series.size() < 2) throw InsufficientDataError("resample: need at least 2 samples");

  const double span = series.duration();
  const double ratio = dt_new / series.dt();
  const std::size_t n_new = sample_count(span, dt_new);
  const std::size_t last = series.size() - 1;

  Trajectory out(dt_new, series.t0());
  out.resize(n_new);
  for (std::size_t i = 0; i < n_new; ++i) {
    const double s = static_cast<double>(i) * ratio;
    std::size_t k = static_cast<std::size_t>(std::floor(s));
    double frac = s - static_cast<double>(k);
    if (k >= last) {
      k = last;
      frac = 0.0;
    } else if (k + 1 == last && std::fabs(1.0 - frac) < 1e-9) {
      k = last;
      frac = 0.0;
    }
    const auto lerp = [&](std::span<const double> ch) {
      if (frac == 0.0) return ch[k];
      return ch[k] + frac * (ch[k + 1] - ch[k]);
    };
    out.x()[i] = lerp(series.x());
    out.y()[i] = lerp(series.y());
  }
  if (n_new < 2) return out;
  return estimate_velocity(out);
}

std::string to_csv(const Trajectory& traj) {
  std::string s = "t,x,y,vx,vy\n";
  for (std::size_t j = 0; j < traj.size(); ++j) {
    s += format_double(traj.time(j));
    for (double v : {traj.x()[j], traj.y()[j], traj.vx()[j], traj.vy()[j]}) {
      s += ',';
      s += format_double(v);
    }
    s += '\n';
  }
  return s;
}

void save_csv(const Trajectory& traj, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv(traj);
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Picks a dt that regenerates every timestamp exactly when one exists near the
// average spacing; otherwise the average spacing itself.
double infer_dt(const std::vector<double>& t) {
  const std::size_t n = t.size();
  const double mean = (t[n - 1] - t[0]) / static_cast<double>(n - 1);
  const auto reproduces = [&](double dt) {
    for (std::size_t j = 0; j < n; ++j)
      if (t[0] + static_cast<double>(j) * dt != t[j]) return false;
    return true;
  };
  std::vector<double> candidates{mean, t[1] - t[0]};
  double up = mean, down = mean;
  for (int i = 0; i < 8; ++i) {
    up = std::nextafter(up, INFINITY);
    down = std::nextafter(down, -INFINITY);
    candidates.push_back(up);
    candidates.push_back(down);
  }
  for (double c : candidates)
    if (c > 0.0 && reproduces(c)) return c;
  return mean;
}

}  // namespace

Trajectory parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  bool have_header = false;
  bool with_velocity = false;
  std::vector<double> t;
  std::array<std::vector<double>, 4> ch;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (!have_header) {
      if (fields.size() == 5 && fields[0] == "t" && fields[1] == "x" && fields[2] == "y" &&
          fields[3] == "vx" && fields[4] == "vy") {
        with_velocity = true;
      } else if (fields.size() == 3 && fields[0] == "t" && fields[1] == "x" && fields[2] == "y") {
        with_velocity = false;
      } else {
        throw ParseError(line_no, "expected header t,x,y[,vx,vy]");
      }
      have_header = true;
      continue;
    }
    const std::size_t expected = with_velocity ? 5 : 3;
    if (fields.size() != expected)
      throw ParseError(line_no, "expected " + std::to_string(expected) + " fields");
    std::array<double, 5> row{};
    for (std::size_t c = 0; c < expected; ++c) {
      const auto v = parse_double(fields[c]);
      if (!v || !std::isfinite(*v)) throw ParseError(line_no, "bad number '" + std::string(fields[c]) + "'");
      row[c] = *v;
    }
    t.push_back(row[0]);
    for (std::size_t c = 0; c + 1 < expected; ++c) ch[c].push_back(row[c + 1]);
  }
  if (!have_header) throw ParseError(line_no, "missing header");
  if (t.size() < 2) throw InsufficientDataError("trajectory CSV needs at least 2 samples");

  const double dt = infer_dt(t);
  if (!(dt > 0.0)) throw FormatError("timestamps must increase");
  for (std::size_t j = 0; j < t.size(); ++j) {
    const double expected_t = t[0] + static_cast<double>(j) * dt;
    if (std::fabs(t[j] - expected_t) > 1e-9 * dt)
      throw FormatError("non-uniform timestamp at row " + std::to_string(j + 1));
  }

  Trajectory traj(dt, t[0]);
  traj.reserve(t.size());
  for (std::size_t j = 0; j < t.size(); ++j)
    traj.push_back(ch[0][j], ch[1][j], with_velocity ? ch[2][j] : 0.0, with_velocity ? ch[3][j] : 0.0);
  return with_velocity ? traj : estimate_velocity(traj);
}

Trajectory load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::filesystem::path corpus_path(const std::filesystem::path& root, const std::string& dyad,
                                  const std::string& role, const std::string& trial) {
  return root / dyad / role / (trial + ".csv");
}

CausalSmoother::CausalSmoother(int window) : window_(window) {
  if (window < 1) throw ConfigError("filter window must be >= 1");
}

PlanarSample CausalSmoother::push(double t, const Vec2& position) {
  history_.push_back(position);
  if (history_.size() > static_cast<std::size_t>(window_)) history_.pop_front();
  double sx = 0.0, sy = 0.0;
  for (const Vec2& p : history_) {
    sx += p.x();
    sy += p.y();
  }
  const double n = static_cast<double>(history_.size());
  const Vec2 smoothed{sx / n, sy / n};

  Vec2 velocity = Vec2::Zero();
  if (last_smoothed_ && t > last_t_) velocity = (smoothed - *last_smoothed_) / (t - last_t_);
  last_smoothed_ = smoothed;
  last_t_ = t;
  ++count_;
  return {smoothed, velocity};
}

}  // namespace waggle
