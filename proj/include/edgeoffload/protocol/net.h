#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

#include "edgeoffload/protocol/message.h"

namespace edgeoffload::protocol {

// Connection refused, reset, closed by the peer, or timed out.
class NetworkError : public Error {
 public:
  using Error::Error;
};

// A receive or connect deadline passed. The connection is still usable.
class TimeoutError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const;
  bool operator==(const Endpoint&) const = default;
};

// "host:port"; throws ValidationError.
Endpoint parse_endpoint(const std::string& text);

inline constexpr std::chrono::milliseconds kDefaultTimeout{10'000};

// Owns a connected TCP socket with one frame decoder.
class Connection {
 public:
  Connection() = default;
  explicit Connection(int fd);
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  static Connection connect(const Endpoint& endpoint,
                            std::chrono::milliseconds timeout = kDefaultTimeout);

  bool is_open() const { return fd_ >= 0; }
  void close();

  void send(const Message& m);
  // Writes bytes as-is, bypassing the encoder.
  void send_raw(std::string_view bytes);
  // Blocks until a whole message arrives. Returns nullopt on a clean close
  // between frames; throws NetworkError on timeout or a close mid-frame and
  // ProtocolError on a malformed frame.
  std::optional<Message> receive(std::chrono::milliseconds timeout = kDefaultTimeout);
  // send + receive, checking that the response carries the request's id.
  Message call(const Message& request, std::chrono::milliseconds timeout = kDefaultTimeout);

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

// One request over a fresh connection.
Message request(const Endpoint& endpoint, const Message& m,
                std::chrono::milliseconds timeout = kDefaultTimeout);

class Listener {
 public:
  // Port 0 picks an ephemeral port; see local().
  explicit Listener(const Endpoint& endpoint);
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  ~Listener();

  Endpoint local() const { return local_; }
  // Waits up to `timeout` for a client; nullopt on timeout or after close().
  std::optional<Connection> accept(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::atomic<bool> closed_{false};
  Endpoint local_;
};

// Process-unique correlation id.
std::string next_message_id();

}  // namespace edgeoffload::protocol
