#include "waggle/service/wire.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>

#include "waggle/error.hpp"

namespace waggle::service {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json parse_object(std::string_view line) {
  json j;
  try {
    j = json::parse(line.begin(), line.end());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw FormatError("message lacks a string 'type'");
  return j;
}

void expect_members(const json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    if (key == "type") continue;
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw FormatError("unexpected member '" + key + "' in '" + j["type"].get<std::string>() + "'");
  }
}

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing member '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw FormatError(std::string("member '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw FormatError(std::string("member '") + key + "' must be finite");
  return d;
}

double nullable_number(const json& j, const char* key) {
  if (j.contains(key) && j.at(key).is_null()) return kNaN;
  return number(j, key);
}

std::string string_member(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw FormatError(std::string("member '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ClientMessage parse_client_message(std::string_view line) {
  const json j = parse_object(line);
  const std::string type = j["type"].get<std::string>();
  if (type == "hello") {
    expect_members(j, {"config"});
    HelloMsg m;
    if (j.contains("config")) {
      if (!j["config"].is_object()) throw FormatError("hello config must be an object");
      m.config = j["config"];
    }
    return m;
  }
  if (type == "hp") {
    expect_members(j, {"t", "x", "y"});
    return HpMsg{number(j, "t"), number(j, "x"), number(j, "y")};
  }
  if (type == "solo_upload") {
    expect_members(j, {"samples"});
    if (!j.contains("samples") || !j["samples"].is_array()) throw FormatError("solo_upload needs a samples array");
    SoloUploadMsg m;
    for (const auto& s : j["samples"]) {
      if (!s.is_object()) throw FormatError("solo sample must be an object");
      for (const auto& [key, _] : s.items())
        if (key != "t" && key != "x" && key != "y") throw FormatError("unexpected member '" + key + "' in solo sample");
      m.samples.push_back({number(s, "t"), number(s, "x"), number(s, "y")});
    }
    return m;
  }
  if (type == "set_gains") {
    expect_members(j, {"kp", "kv", "ks"});
    SetGainsMsg m{{number(j, "kp"), number(j, "kv"), number(j, "ks")}};
    return m;
  }
  if (type == "bye") {
    expect_members(j, {});
    return ByeMsg{};
  }
  throw FormatError("unknown client message type '" + type + "'");
}

ServerMessage parse_server_message(std::string_view line) {
  const json j = parse_object(line);
  const std::string type = j["type"].get<std::string>();
  if (type == "welcome") {
    expect_members(j, {"session_id", "dt_tick"});
    return WelcomeMsg{string_member(j, "session_id"), number(j, "dt_tick")};
  }
  if (type == "vp") {
    expect_members(j, {"t", "x", "y"});
    return VpMsg{number(j, "t"), number(j, "x"), number(j, "y")};
  }
  if (type == "metrics") {
    expect_members(j, {"t", "rmse", "cv", "svm", "eps", "k"});
    MetricsMsg m{number(j, "t"), nullable_number(j, "rmse"), nullable_number(j, "cv"), nullable_number(j, "svm"),
                 nullable_number(j, "eps"), 0};
    if (!j.contains("k") || !j["k"].is_number_integer()) throw FormatError("member 'k' must be an integer");
    m.k = j["k"].get<int>();
    return m;
  }
  if (type == "fault") {
    expect_members(j, {"code", "message", "t"});
    return FaultMsg{string_member(j, "code"), string_member(j, "message"), nullable_number(j, "t")};
  }
  throw FormatError("unknown server message type '" + type + "'");
}

std::string encode(const ClientMessage& m) {
  json j = std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          return {{"type", "hello"}, {"config", v.config}};
        } else if constexpr (std::is_same_v<T, HpMsg>) {
          return {{"type", "hp"}, {"t", v.t}, {"x", v.x}, {"y", v.y}};
        } else if constexpr (std::is_same_v<T, SoloUploadMsg>) {
          json arr = json::array();
          for (const auto& s : v.samples) arr.push_back({{"t", s.t}, {"x", s.x}, {"y", s.y}});
          return {{"type", "solo_upload"}, {"samples", arr}};
        } else if constexpr (std::is_same_v<T, SetGainsMsg>) {
          return {{"type", "set_gains"}, {"kp", v.gains.kp}, {"kv", v.gains.kv}, {"ks", v.gains.ks}};
        } else {
          return {{"type", "bye"}};
        }
      },
      m);
  return j.dump();
}

std::string encode(const ServerMessage& m) {
  json j = std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, WelcomeMsg>) {
          return {{"type", "welcome"}, {"session_id", v.session_id}, {"dt_tick", v.dt_tick}};
        } else if constexpr (std::is_same_v<T, VpMsg>) {
          return {{"type", "vp"}, {"t", v.t}, {"x", v.x}, {"y", v.y}};
        } else if constexpr (std::is_same_v<T, MetricsMsg>) {
          return {{"type", "metrics"}, {"t", v.t},           {"rmse", nullable(v.rmse)}, {"cv", nullable(v.cv)},
                  {"svm", nullable(v.svm)}, {"eps", nullable(v.eps)}, {"k", v.k}};
        } else {
          return {{"type", "fault"}, {"code", v.code}, {"message", v.message}, {"t", nullable(v.t)}};
        }
      },
      m);
  return j.dump();
}

std::string_view type_name(const ClientMessage& m) {
  static constexpr std::string_view names[] = {"hello", "hp", "solo_upload", "set_gains", "bye"};
  return names[m.index()];
}

std::string_view type_name(const ServerMessage& m) {
  static constexpr std::string_view names[] = {"welcome", "vp", "metrics", "fault"};
  return names[m.index()];
}

}  // namespace waggle::service
