#pragma once
// Minimal RFC 6455 server side: handshake and frame codec. No extensions.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace waggle::service {

/// base64(SHA-1(key + GUID)).
std::string websocket_accept_key(std::string_view client_key);

/// Complete request (terminated by an empty line) -> 101 response.
/// FormatError when it is not a WebSocket upgrade.
std::string websocket_handshake_response(std::string_view request);

enum class WsOpcode : std::uint8_t { continuation = 0, text = 1, binary = 2, close = 8, ping = 9, pong = 10 };

/// Single final frame. Servers send unmasked; clients pass a mask key.
std::string encode_ws_frame(std::string_view payload, WsOpcode op = WsOpcode::text,
                            std::optional<std::uint32_t> mask = std::nullopt);

struct WsMessage {
  WsOpcode opcode = WsOpcode::text;
  std::string payload;
};

/// Reassembles fragmented data messages; control frames pass through as they arrive.
class WsDecoder {
 public:
  explicit WsDecoder(std::size_t max_message = 1 << 20) : max_message_(max_message) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }
  /// Next complete message, or nullopt when more bytes are needed. FormatError
  /// on protocol violations or oversize messages.
  std::optional<WsMessage> next();

 private:
  std::size_t max_message_;
  std::string buffer_;
  std::string partial_;
  std::optional<WsOpcode> partial_op_;
};

}  // namespace waggle::service
