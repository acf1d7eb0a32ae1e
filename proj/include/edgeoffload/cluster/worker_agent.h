#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "edgeoffload/cluster/executor.h"
#include "edgeoffload/cluster/frame_server.h"
#include "edgeoffload/domain/worker.h"

namespace edgeoffload::cluster {

struct WorkerAgentConfig {
  std::string worker_id;
  ResourceVector capacity;
  std::set<std::string> tags;
  // Tried in order; the agent moves on when a server is unreachable or
  // answers not_leader.
  std::vector<protocol::Endpoint> servers;
  protocol::Endpoint listen{"127.0.0.1", 0};
  ProfileCatalog profiles;
  double heartbeat_period_s = 2.0;
  // Negative: the catalog's on-prem jitter.
  double jitter_fraction = -1.0;
  std::uint64_t seed = 1;
  std::chrono::milliseconds request_timeout{5000};
};

class WorkerAgent {
 public:
  explicit WorkerAgent(WorkerAgentConfig config);
  ~WorkerAgent();
  WorkerAgent(const WorkerAgent&) = delete;
  WorkerAgent& operator=(const WorkerAgent&) = delete;

  // Binds, then registers and heartbeats in the background.
  void start();
  void stop();
  // False if not registered before the timeout.
  bool wait_registered(std::chrono::milliseconds timeout);

  protocol::Endpoint address() const { return frames_.address(); }
  WorkerDescriptor descriptor() const;
  // The server that accepted the latest registration.
  std::optional<protocol::Endpoint> leader() const;
  SyntheticExecutor& executor() { return executor_; }

 private:
  protocol::Message handle(const protocol::Message& request);
  void heartbeat_loop();
  bool try_register();
  bool send_heartbeat();
  protocol::Message call_server(const protocol::Endpoint& server, const protocol::Message& m);

  WorkerAgentConfig config_;
  SyntheticExecutor executor_;
  FrameServer frames_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool registered_ = false;
  bool stopping_ = false;
  std::size_t server_index_ = 0;
  std::thread heartbeat_thread_;
};

}  // namespace edgeoffload::cluster
