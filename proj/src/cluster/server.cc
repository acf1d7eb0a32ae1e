#include "edgeoffload/cluster/server.h"

#include <cstdio>
#include <set>

#include <fmt/format.h>

#include "edgeoffload/cluster/executor.h"
#include "edgeoffload/cluster/wire.h"
#include "edgeoffload/domain/json_io.h"
#include "edgeoffload/scheduler/config_io.h"

namespace edgeoffload::cluster {

using protocol::Message;
using protocol::MessageType;
namespace ec = protocol::error_code;

void read_server_config(const Json& j, const std::string& path, FieldErrors& errors,
                        ServerConfig& config) {
  FieldReader r(j, path, errors);
  if (!r.ok()) return;
  r.reject_unknown({"scheduler", "heartbeat_period_s", "miss_tolerance", "lease_duration_s",
                    "server_id"});
  if (const Json* s = r.object("scheduler", true)) {
    config.control.scheduler = read_scheduler_config(*s, r.child_path("scheduler"), errors);
  }
  config.control.heartbeat_period_s =
      r.number_or("heartbeat_period_s", config.control.heartbeat_period_s);
  config.control.miss_tolerance =
      static_cast<int>(r.integer_or("miss_tolerance", config.control.miss_tolerance));
  config.lease_duration_s = r.number_or("lease_duration_s", config.lease_duration_s);
  if (!(config.lease_duration_s > 0.0)) {
    errors.add(r.child_path("lease_duration_s"), "must be > 0");
  }
  config.server_id = r.string_or("server_id", config.server_id);
}

Message Server::TcpTransport::call(const WorkerDescriptor& worker, const Message& request) {
  Message reply = protocol::request(protocol::parse_endpoint(worker.address), request, timeout_);
  protocol::throw_if_error(reply);
  return reply;
}

Server::Server(ServerConfig config)
    : config_(std::move(config)),
      store_(config_.state_dir / "checkpoints"),
      transport_(config_.worker_timeout),
      offload_pool_(config_.worker_timeout),
      actor_(std::chrono::milliseconds(
                 static_cast<long>(config_.control.scheduler.tick_interval_s * 1000.0)),
             [this] { on_period(); }) {
  config_.control.validate();
  if (!(config_.lease_duration_s > 0.0)) throw ConfigError("lease_duration_s must be > 0");
  frames_ = std::make_unique<FrameServer>(config_.listen,
                                          [this](const Message& m) { return handle(m); });
  if (config_.server_id.empty()) config_.server_id = frames_->address().to_string();
  lease_ = std::make_unique<LeaseManager>(config_.state_dir, config_.server_id,
                                          config_.lease_duration_s);
}

Server::~Server() { stop(); }

double Server::now() const { return monotonic_s(); }

void Server::start() {
  actor_.start();
  actor_.call([this] { refresh_lease(); });
  frames_->start();
}

void Server::stop() {
  if (frames_) frames_->stop();
  try {
    actor_.call([this] {
      if (control_) lease_->release(wall_clock_s());
      control_.reset();
    });
  } catch (const std::exception&) {
  }
  actor_.stop();
}

bool Server::is_leader() {
  return actor_.call([this] { return control_ != nullptr; });
}

std::int64_t Server::term() {
  return actor_.call([this] { return control_ ? lease_->term() : std::int64_t{0}; });
}

ControlPlane& Server::leading() {
  if (!control_) {
    auto holder = lease_->read();
    throw protocol::RemoteError(
        std::string(ec::kNotLeader),
        holder ? fmt::format("not the leader; lease held by {}", holder->holder_id)
               : std::string("not the leader"));
  }
  return *control_;
}

void Server::refresh_lease() {
  bool was_leader = control_ != nullptr;
  bool leader = false;
  try {
    leader = lease_->try_acquire(wall_clock_s());
  } catch (const std::exception& e) {
    fmt::print(stderr, "lease update failed: {}\n", e.what());
  }
  if (leader && !was_leader) {
    // A fresh term starts from an empty cluster; workers re-register when
    // their heartbeats are answered with reregister.
    control_ = std::make_unique<ControlPlane>(config_.control, store_, transport_);
    fmt::print(stderr, "{} leads term {}\n", config_.server_id, lease_->term());
  } else if (!leader && was_leader) {
    control_.reset();
    fmt::print(stderr, "{} lost the lease\n", config_.server_id);
  }
}

void Server::on_period() {
  refresh_lease();
  if (!control_) return;
  double t = now();
  for (const auto& w : control_->detect_failures(t)) {
    fmt::print(stderr, "worker {} missed its heartbeats\n", w);
  }
  control_->tick(t);
}

Message Server::handle(const Message& request) {
  switch (request.type) {
    case MessageType::kRegister: {
      WorkerDescriptor d = worker_descriptor_from_json(request.payload.at("worker"));
      actor_.call([&] { leading().register_worker(d, now()); });
      return protocol::make_response(request, MessageType::kRegisterAck,
                                     Json{{"worker_id", d.worker_id},
                                          {"heartbeat_period_s",
                                           config_.control.heartbeat_period_s}});
    }
    case MessageType::kHeartbeat: {
      HeartbeatReport report = heartbeat_report_from_json(request.payload);
      HeartbeatAck ack = actor_.call([&] { return leading().heartbeat(report, now()); });
      return protocol::make_response(request, MessageType::kHeartbeatAck, to_json(ack));
    }
    case MessageType::kSubmitJob: {
      JobSpec spec = job_spec_from_json(request.payload.at("job"));
      std::string status = actor_.call([&] {
        ControlPlane& cp = leading();
        cp.submit(spec, now());
        cp.tick(now());
        return cp.job_status(spec.job_id);
      });
      return protocol::make_response(request, MessageType::kJobStatus,
                                     Json{{"job_id", spec.job_id}, {"status", status}});
    }
    case MessageType::kJobStatus: {
      std::string job_id = request.payload.at("job_id").get<std::string>();
      std::string status = actor_.call([&] { return leading().job_status(job_id); });
      return protocol::make_response(request, MessageType::kJobStatus,
                                     Json{{"job_id", job_id}, {"status", status}});
    }
    case MessageType::kOffloadRequest:
      return forward_offload(request);
    default:
      throw ValidationError(fmt::format("the server does not accept {} messages",
                                        protocol::to_string(request.type)));
  }
}

Message Server::forward_offload(const Message& request) {
  using Ms = std::chrono::duration<double, std::milli>;
  auto started = std::chrono::steady_clock::now();
  std::string model = request.payload.at("model").get<std::string>();
  std::set<std::string> exclude;
  for (;;) {
    RouteTarget target =
        actor_.call([&] { return leading().route_inference(model, exclude); });
    Message reply;
    try {
      reply = offload_pool_.call(protocol::parse_endpoint(target.address), request);
    } catch (const protocol::NetworkError& e) {
      // The worker is gone; stop routing to it and try the next one.
      exclude.insert(target.worker_id);
      actor_.post([this, id = target.worker_id] {
        if (control_) control_->mark_worker_dead(id, now());
      });
      continue;
    }
    if (reply.type == MessageType::kError &&
        reply.payload.value("code", std::string()) == ec::kNoCapacity) {
      // The worker no longer hosts the job; another one may.
      exclude.insert(target.worker_id);
      continue;
    }
    if (reply.type == MessageType::kOffloadResponse) {
      reply.payload["timings"]["total_ms"] = Ms(std::chrono::steady_clock::now() - started).count();
    }
    return reply;
  }
}

}  // namespace edgeoffload::cluster
