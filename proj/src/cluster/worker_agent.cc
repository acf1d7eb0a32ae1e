#include "edgeoffload/cluster/worker_agent.h"

#include <cstdio>

#include <fmt/format.h>

#include "edgeoffload/domain/json_io.h"
#include "edgeoffload/protocol/encoding.h"

namespace edgeoffload::cluster {

using protocol::Message;
using protocol::MessageType;

namespace {

double resolve_jitter(const WorkerAgentConfig& c) {
  if (c.jitter_fraction >= 0.0) return c.jitter_fraction;
  auto it = c.profiles.jitter_fraction.find(Site::kOnPrem);
  return it == c.profiles.jitter_fraction.end() ? 0.0 : it->second;
}

}  // namespace

WorkerAgent::WorkerAgent(WorkerAgentConfig config)
    : config_(std::move(config)),
      executor_(config_.profiles, config_.capacity, resolve_jitter(config_), config_.seed),
      frames_(config_.listen, [this](const Message& m) { return handle(m); }) {
  if (config_.servers.empty()) throw ConfigError("worker needs at least one server address");
  if (!(config_.heartbeat_period_s > 0.0)) throw ConfigError("heartbeat period must be > 0");
  descriptor().validate();
}

WorkerAgent::~WorkerAgent() { stop(); }

WorkerDescriptor WorkerAgent::descriptor() const {
  WorkerDescriptor d;
  d.worker_id = config_.worker_id;
  d.capacity = config_.capacity;
  d.tags = config_.tags;
  d.address = frames_.address().to_string();
  return d;
}

std::optional<protocol::Endpoint> WorkerAgent::leader() const {
  std::lock_guard lock(mu_);
  if (!registered_) return std::nullopt;
  return config_.servers[server_index_];
}

void WorkerAgent::start() {
  frames_.start();
  std::lock_guard lock(mu_);
  if (heartbeat_thread_.joinable()) return;
  stopping_ = false;
  heartbeat_thread_ = std::thread([this] { heartbeat_loop(); });
}

void WorkerAgent::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (heartbeat_thread_.joinable()) heartbeat_thread_.join();
  frames_.stop();
}

bool WorkerAgent::wait_registered(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return registered_ || stopping_; }) && registered_;
}

Message WorkerAgent::call_server(const protocol::Endpoint& server, const Message& m) {
  Message reply = protocol::request(server, m, config_.request_timeout);
  protocol::throw_if_error(reply);
  return reply;
}

bool WorkerAgent::try_register() {
  std::size_t n = config_.servers.size();
  std::size_t first;
  {
    std::lock_guard lock(mu_);
    first = server_index_;
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t i = (first + k) % n;
    const auto& server = config_.servers[i];
    try {
      call_server(server, protocol::make_message(MessageType::kRegister,
                                                 protocol::next_message_id(),
                                                 Json{{"worker", to_json(descriptor())}}));
    } catch (const std::exception& e) {
      // not_leader and unreachable servers alike: try the next one.
      continue;
    }
    {
      std::lock_guard lock(mu_);
      server_index_ = i;
      registered_ = true;
    }
    cv_.notify_all();
    return true;
  }
  return false;
}

bool WorkerAgent::send_heartbeat() {
  protocol::Endpoint server;
  {
    std::lock_guard lock(mu_);
    server = config_.servers[server_index_];
  }
  ExecutorReport report = executor_.report(monotonic_s());
  HeartbeatReport hb;
  hb.worker_id = config_.worker_id;
  hb.utilization = report.utilization;
  hb.progress = report.progress;
  hb.completed = report.completed;
  hb.running = report.running;
  Message reply;
  try {
    reply = call_server(server, protocol::make_message(MessageType::kHeartbeat,
                                                       protocol::next_message_id(),
                                                       to_json(hb)));
  } catch (const std::exception&) {
    return false;
  }
  executor_.acknowledge(report);
  HeartbeatAck ack = heartbeat_ack_from_json(reply.payload);
  for (const auto& job : ack.stop_jobs) executor_.stop(job, monotonic_s());
  if (ack.reregister) {
    std::lock_guard lock(mu_);
    registered_ = false;
  }
  return true;
}

void WorkerAgent::heartbeat_loop() {
  auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(config_.heartbeat_period_s));
  const auto retry = std::chrono::milliseconds(200);
  for (;;) {
    bool registered;
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      registered = registered_;
    }
    bool ok;
    if (!registered) {
      ok = try_register();
    } else {
      ok = send_heartbeat();
      if (!ok) {
        // Lost the server: look for the leader elsewhere.
        std::lock_guard lock(mu_);
        registered_ = false;
        server_index_ = (server_index_ + 1) % config_.servers.size();
      }
    }
    bool again;
    {
      std::lock_guard lock(mu_);
      again = !registered_;
    }
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, (ok && !again) ? period : std::chrono::steady_clock::duration(retry),
                 [&] { return stopping_; });
  }
}

Message WorkerAgent::handle(const Message& request) {
  double now = monotonic_s();
  switch (request.type) {
    case MessageType::kDispatch:
    case MessageType::kResume: {
      DispatchCommand cmd = dispatch_command_from_json(request.payload);
      executor_.start(cmd, now);
      return protocol::make_response(request, MessageType::kJobStatus,
                                     Json{{"job_id", cmd.job_id}, {"status", "running"}});
    }
    case MessageType::kPreempt: {
      FieldErrors errors;
      FieldReader r(request.payload, "payload", errors);
      std::string job_id = r.string("job_id");
      errors.throw_if_any("preempt");
      std::string blob = executor_.stop(job_id, now);
      return protocol::make_response(
          request, MessageType::kCheckpointDone,
          Json{{"job_id", job_id}, {"blob", protocol::base64_encode(blob)}});
    }
    case MessageType::kOffloadRequest: {
      FieldErrors errors;
      FieldReader r(request.payload, "payload", errors);
      std::string model = r.string("model");
      std::string data_b64 = r.string("data");
      errors.throw_if_any("offload request");
      std::string data = protocol::base64_decode(data_b64);
      InferenceResult res = executor_.infer(model, data);
      return protocol::make_response(
          request, MessageType::kOffloadResponse,
          Json{{"digest", res.digest},
               {"bytes", res.bytes},
               {"model", model},
               {"worker_id", config_.worker_id},
               {"job_id", res.job_id},
               {"result", res.result},
               {"timings", Json{{"queue_ms", res.queue_ms}, {"service_ms", res.service_ms}}}});
    }
    default:
      throw ValidationError(fmt::format("workers do not accept {} messages",
                                        protocol::to_string(request.type)));
  }
}

}  // namespace edgeoffload::cluster
