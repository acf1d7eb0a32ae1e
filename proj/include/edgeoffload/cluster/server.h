#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "edgeoffload/cluster/actor.h"
#include "edgeoffload/cluster/checkpoint_store.h"
#include "edgeoffload/cluster/connection_pool.h"
#include "edgeoffload/cluster/control_plane.h"
#include "edgeoffload/cluster/frame_server.h"
#include "edgeoffload/cluster/lease.h"

namespace edgeoffload::cluster {

struct ServerConfig {
  protocol::Endpoint listen{"127.0.0.1", 7100};
  std::filesystem::path state_dir = "state";
  ControlPlaneConfig control;
  // Lease holder name; the bound address when empty.
  std::string server_id;
  double lease_duration_s = 6.0;
  std::chrono::milliseconds worker_timeout{10000};
};

// Reads the --config file body: {scheduler, heartbeat_period_s,
// miss_tolerance, lease_duration_s, server_id}. Listen address and state
// directory come from flags and are left untouched.
void read_server_config(const Json& j, const std::string& path, FieldErrors& errors,
                        ServerConfig& config);

// The ML server. Serves workers and clients on one port; only the lease
// holder answers REGISTER, HEARTBEAT, SUBMIT_JOB and OFFLOAD_REQUEST, the
// others reply not_leader and keep polling the lease.
class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  // Releases the lease if held.
  void stop();

  protocol::Endpoint address() const { return frames_->address(); }
  bool is_leader();
  std::int64_t term();

  // Runs `f(ControlPlane&)` on the actor thread. Throws RemoteError
  // (not_leader) on a standby.
  template <class F>
  auto with_control_plane(F&& f) {
    return actor_.call([&]() { return f(leading()); });
  }

 private:
  class TcpTransport : public WorkerTransport {
   public:
    explicit TcpTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}
    protocol::Message call(const WorkerDescriptor& worker,
                           const protocol::Message& request) override;

   private:
    std::chrono::milliseconds timeout_;
  };

  protocol::Message handle(const protocol::Message& request);
  protocol::Message forward_offload(const protocol::Message& request);
  void on_period();
  void refresh_lease();
  ControlPlane& leading();
  double now() const;

  ServerConfig config_;
  std::unique_ptr<FrameServer> frames_;
  std::unique_ptr<LeaseManager> lease_;
  CheckpointStore store_;
  TcpTransport transport_;
  // Offload forwarding only; control commands use fresh connections.
  ConnectionPool offload_pool_;
  // Present only while this server holds the lease. Touched only on the
  // actor thread.
  std::unique_ptr<ControlPlane> control_;
  Actor actor_;
};

}  // namespace edgeoffload::cluster
