#include "edgeoffload/cluster/connection_pool.h"

#include <optional>

namespace edgeoffload::cluster {

using protocol::Connection;
using protocol::Message;

Message ConnectionPool::call(const protocol::Endpoint& endpoint, const Message& request) {
  const std::string key = endpoint.to_string();
  std::optional<Connection> conn;
  {
    std::lock_guard lock(mu_);
    auto it = idle_.find(key);
    if (it != idle_.end() && !it->second.empty()) {
      conn = std::move(it->second.back());
      it->second.pop_back();
    }
  }
  Message reply;
  if (conn) {
    try {
      reply = conn->call(request, timeout_);
    } catch (const protocol::TimeoutError&) {
      throw;
    } catch (const protocol::NetworkError&) {
      conn.reset();
    }
  }
  if (!conn) {
    conn = Connection::connect(endpoint, timeout_);
    reply = conn->call(request, timeout_);
  }
  std::lock_guard lock(mu_);
  idle_[key].push_back(std::move(*conn));
  return reply;
}

void ConnectionPool::clear() {
  std::lock_guard lock(mu_);
  idle_.clear();
}

}  // namespace edgeoffload::cluster
