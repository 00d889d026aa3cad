#include "waggle/service/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cctype>

#include "waggle/error.hpp"

namespace waggle::service {

namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string websocket_accept_key(std::string_view client_key) {
  const std::string input = std::string(client_key) + std::string(kGuid);
  std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
  SHA1(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest.data());
  std::array<unsigned char, 4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1> out{};
  const int len = EVP_EncodeBlock(out.data(), digest.data(), SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<const char*>(out.data()), static_cast<std::size_t>(len));
}

std::string websocket_handshake_response(std::string_view request) {
  if (request.substr(0, 4) != "GET ") throw FormatError("WebSocket handshake must be a GET request");
  std::string key;
  bool upgrade = false;
  std::size_t pos = request.find("\r\n");
  while (pos != std::string_view::npos) {
    const std::size_t start = pos + 2;
    const std::size_t end = request.find("\r\n", start);
    if (end == std::string_view::npos || end == start) break;
    const std::string_view line = request.substr(start, end - start);
    const std::size_t colon = line.find(':');
    if (colon != std::string_view::npos) {
      const std::string name = lower(trim(line.substr(0, colon)));
      const std::string_view value = trim(line.substr(colon + 1));
      if (name == "sec-websocket-key") key = std::string(value);
      if (name == "upgrade" && lower(value) == "websocket") upgrade = true;
    }
    pos = end;
  }
  if (!upgrade) throw FormatError("missing 'Upgrade: websocket' header");
  if (key.empty()) throw FormatError("missing Sec-WebSocket-Key header");
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " +
         websocket_accept_key(key) + "\r\n\r\n";
}

std::string encode_ws_frame(std::string_view payload, WsOpcode op, std::optional<std::uint32_t> mask) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mbit = mask ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    f.push_back(static_cast<char>(mbit | n));
  } else if (n <= 0xFFFF) {
    f.push_back(static_cast<char>(mbit | 126));
    f.push_back(static_cast<char>((n >> 8) & 0xFF));
    f.push_back(static_cast<char>(n & 0xFF));
  } else {
    f.push_back(static_cast<char>(mbit | 127));
    for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF));
  }
  if (!mask) return f.append(payload);
  std::uint8_t key[4];
  for (int i = 0; i < 4; ++i) key[i] = static_cast<std::uint8_t>((*mask >> (8 * (3 - i))) & 0xFF);
  for (std::uint8_t k : key) f.push_back(static_cast<char>(k));
  for (std::size_t i = 0; i < n; ++i) f.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return f;
}

std::optional<WsMessage> WsDecoder::next() {
  while (true) {
    if (buffer_.size() < 2) return std::nullopt;
    const auto* b = reinterpret_cast<const unsigned char*>(buffer_.data());
    const bool fin = b[0] & 0x80;
    if (b[0] & 0x70) throw FormatError("WebSocket reserved bits set");
    const auto op = static_cast<WsOpcode>(b[0] & 0x0F);
    const bool masked = b[1] & 0x80;
    std::uint64_t len = b[1] & 0x7F;
    std::size_t header = 2;
    if (len == 126) {
      if (buffer_.size() < 4) return std::nullopt;
      len = (std::uint64_t{b[2]} << 8) | b[3];
      header = 4;
    } else if (len == 127) {
      if (buffer_.size() < 10) return std::nullopt;
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | b[2 + i];
      header = 10;
    }
    if (len > max_message_) throw FormatError("WebSocket frame too large");
    if (masked) header += 4;
    if (buffer_.size() < header + len) return std::nullopt;

    std::string payload = buffer_.substr(header, static_cast<std::size_t>(len));
    if (masked) {
      const unsigned char* key = b + header - 4;
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ key[i % 4]);
    }
    buffer_.erase(0, header + static_cast<std::size_t>(len));

    const bool control = static_cast<std::uint8_t>(op) & 0x08;
    if (control) {
      if (!fin || len > 125) throw FormatError("fragmented or oversize WebSocket control frame");
      if (op != WsOpcode::close && op != WsOpcode::ping && op != WsOpcode::pong)
        throw FormatError("unknown WebSocket control opcode");
      return WsMessage{op, std::move(payload)};
    }
    if (op == WsOpcode::continuation) {
      if (!partial_op_) throw FormatError("continuation frame without a start");
    } else if (op == WsOpcode::text || op == WsOpcode::binary) {
      if (partial_op_) throw FormatError("new WebSocket message before the previous one finished");
      partial_op_ = op;
      partial_.clear();
    } else {
      throw FormatError("unknown WebSocket opcode");
    }
    if (partial_.size() + payload.size() > max_message_) throw FormatError("WebSocket message too large");
    partial_ += payload;
    if (fin) {
      WsMessage m{*partial_op_, std::move(partial_)};
      partial_.clear();
      partial_op_.reset();
      return m;
    }
  }
}

}  // namespace waggle::service
