#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgeoffload/domain/job.h"
#include "edgeoffload/protocol/net.h"

namespace edgeoffload::cluster {

// Sends SUBMIT_JOB to each server in turn until one accepts it as leader.
// Returns the reported status. Throws RemoteError (e.g. rejected) or
// NetworkError when no server could be reached.
std::string submit_job(const std::vector<protocol::Endpoint>& servers, const JobSpec& spec,
                       std::chrono::milliseconds timeout = protocol::kDefaultTimeout);

struct OffloadReply {
  double rtt_ms = 0.0;
  std::string worker_id;
  std::string digest;
  double queue_ms = 0.0;
  double service_ms = 0.0;
  double total_ms = 0.0;  // as measured by the server
  Json result;
};

// Sequential offload requests over one connection. Reconnects once if the
// connection drops between requests.
class OffloadClient {
 public:
  explicit OffloadClient(protocol::Endpoint server,
                         std::chrono::milliseconds timeout = protocol::kDefaultTimeout);

  // Throws RemoteError (no_capacity, ...) and NetworkError.
  OffloadReply send(const std::string& model, std::string_view data);

 private:
  protocol::Endpoint server_;
  std::chrono::milliseconds timeout_;
  std::optional<protocol::Connection> conn_;
};

}  // namespace edgeoffload::cluster
