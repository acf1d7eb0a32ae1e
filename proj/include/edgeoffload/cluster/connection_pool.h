#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "edgeoffload/protocol/net.h"

namespace edgeoffload::cluster {

// Idle request/response connections kept per address. Thread-safe; each
// call owns its connection exclusively while it runs.
class ConnectionPool {
 public:
  explicit ConnectionPool(std::chrono::milliseconds timeout) : timeout_(timeout) {}

  // Uses an idle connection when there is one. If that connection turns out
  // to be closed, the request is sent once more on a fresh connection.
  // Throws NetworkError / ProtocolError like protocol::request.
  protocol::Message call(const protocol::Endpoint& endpoint, const protocol::Message& request);

  void clear();

 private:
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::map<std::string, std::vector<protocol::Connection>> idle_;
};

}  // namespace edgeoffload::cluster
