#pragma once
// Line-delimited JSON messages between a client and the session server.
// One object per line; the "type" member selects the payload. Unknown types,
// missing or mistyped members and extra members are rejected with FormatError.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "waggle/controllers.hpp"

namespace waggle::service {

struct HelloMsg {
  nlohmann::json config = nlohmann::json::object();
};
struct HpMsg {
  double t = 0.0, x = 0.0, y = 0.0;
};
struct SoloSample {
  double t = 0.0, x = 0.0, y = 0.0;
};
struct SoloUploadMsg {
  std::vector<SoloSample> samples;
};
struct SetGainsMsg {
  IlcGains gains;
};
struct ByeMsg {};

using ClientMessage = std::variant<HelloMsg, HpMsg, SoloUploadMsg, SetGainsMsg, ByeMsg>;

struct WelcomeMsg {
  std::string session_id;
  double dt_tick = 0.0;
};
struct VpMsg {
  double t = 0.0, x = 0.0, y = 0.0;
};
/// NaN fields (undefined before enough data) travel as null.
struct MetricsMsg {
  double t = 0.0, rmse = 0.0, cv = 0.0, svm = 0.0, eps = 0.0;
  int k = 0;
};
struct FaultMsg {
  std::string code;
  std::string message;
  double t = 0.0;
};

using ServerMessage = std::variant<WelcomeMsg, VpMsg, MetricsMsg, FaultMsg>;

ClientMessage parse_client_message(std::string_view line);
ServerMessage parse_server_message(std::string_view line);

/// Single line, no trailing newline.
std::string encode(const ClientMessage& m);
std::string encode(const ServerMessage& m);

std::string_view type_name(const ClientMessage& m);
std::string_view type_name(const ServerMessage& m);

}  // namespace waggle::service
