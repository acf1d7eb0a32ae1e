#include "edgeoffload/protocol/net.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <utility>

#include <fmt/format.h>

namespace edgeoffload::protocol {

namespace {

std::string errno_text() { return std::strerror(errno); }

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

// Waits for `events` on fd; false on timeout.
bool wait_for(int fd, short events, Clock::time_point deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw NetworkError(fmt::format("poll: {}", errno_text()));
  }
}

sockaddr_in resolve(const Endpoint& endpoint) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  if (::inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (::getaddrinfo(endpoint.host.c_str(), nullptr, &hints, &result) != 0 || result == nullptr) {
    throw NetworkError(fmt::format("cannot resolve host '{}'", endpoint.host));
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(result->ai_addr)->sin_addr;
  ::freeaddrinfo(result);
  return addr;
}

}  // namespace

std::string Endpoint::to_string() const { return fmt::format("{}:{}", host, port); }

Endpoint parse_endpoint(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ValidationError(fmt::format("address '{}' is not host:port", text));
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  std::string port = text.substr(colon + 1);
  unsigned long value = 0;
  try {
    std::size_t used = 0;
    value = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("address '{}' has a non-numeric port", text));
  }
  if (value > 65535) throw ValidationError(fmt::format("port {} out of range", value));
  e.port = static_cast<std::uint16_t>(value);
  return e;
}

Connection::Connection(int fd) : fd_(fd) {}

Connection::Connection(Connection&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), decoder_(std::move(other.decoder_)) {}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    decoder_ = std::move(other.decoder_);
  }
  return *this;
}

Connection::~Connection() { close(); }

void Connection::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Connection Connection::connect(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  sockaddr_in addr = resolve(endpoint);
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw NetworkError(fmt::format("socket: {}", errno_text()));
  Connection conn(fd);
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  auto deadline = Clock::now() + timeout;
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    if (errno != EINPROGRESS) {
      throw NetworkError(fmt::format("connect {}: {}", endpoint.to_string(), errno_text()));
    }
    if (!wait_for(fd, POLLOUT, deadline)) {
      throw TimeoutError(fmt::format("connect {}: timed out", endpoint.to_string()));
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      throw NetworkError(fmt::format("connect {}: {}", endpoint.to_string(), std::strerror(err)));
    }
  }
  ::fcntl(fd, F_SETFL, flags);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return conn;
}

void Connection::send(const Message& m) { send_raw(encode(m)); }

void Connection::send_raw(std::string_view frame) {
  if (fd_ < 0) throw NetworkError("send on a closed connection");
  std::size_t sent = 0;
  while (sent < frame.size()) {
    ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(fmt::format("send: {}", errno_text()));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<Message> Connection::receive(std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw NetworkError("receive on a closed connection");
  auto deadline = Clock::now() + timeout;
  char buf[64 * 1024];
  for (;;) {
    if (auto m = decoder_.next()) return m;
    if (!wait_for(fd_, POLLIN, deadline)) throw TimeoutError("receive timed out");
    ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(fmt::format("recv: {}", errno_text()));
    }
    if (n == 0) {
      if (decoder_.buffered() == 0) return std::nullopt;
      throw NetworkError("connection closed mid-frame");
    }
    decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
  }
}

Message Connection::call(const Message& request, std::chrono::milliseconds timeout) {
  send(request);
  auto response = receive(timeout);
  if (!response) throw NetworkError("connection closed before the response");
  if (response->id != request.id) {
    throw ProtocolError(ProtocolError::Kind::kSchema,
                        fmt::format("response id '{}' does not match request id '{}'",
                                    response->id, request.id));
  }
  return *response;
}

Message request(const Endpoint& endpoint, const Message& m, std::chrono::milliseconds timeout) {
  Connection conn = Connection::connect(endpoint, timeout);
  return conn.call(m, timeout);
}

Listener::Listener(const Endpoint& endpoint) {
  sockaddr_in addr = resolve(endpoint);
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw NetworkError(fmt::format("socket: {}", errno_text()));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    std::string err = errno_text();
    ::close(std::exchange(fd_, -1));
    throw NetworkError(fmt::format("bind {}: {}", endpoint.to_string(), err));
  }
  if (::listen(fd_, 64) != 0) {
    std::string err = errno_text();
    ::close(std::exchange(fd_, -1));
    throw NetworkError(fmt::format("listen: {}", err));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  local_.host = endpoint.host;
  local_.port = ntohs(bound.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

// Only shuts the socket down so that a thread blocked in accept() wakes up;
// the descriptor itself is released by the destructor.
void Listener::close() {
  if (fd_ >= 0 && !closed_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
}

std::optional<Connection> Listener::accept(std::chrono::milliseconds timeout) {
  if (fd_ < 0 || closed_) return std::nullopt;
  if (!wait_for(fd_, POLLIN, Clock::now() + timeout)) return std::nullopt;
  int client = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (client < 0 || closed_) {
    if (client >= 0) ::close(client);
    return std::nullopt;
  }
  int one = 1;
  ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return Connection(client);
}

std::string next_message_id() {
  static std::atomic<std::uint64_t> counter{0};
  return fmt::format("{}-{}", ::getpid(), ++counter);
}

}  // namespace edgeoffload::protocol
