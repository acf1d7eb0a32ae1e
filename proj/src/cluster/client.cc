#include "edgeoffload/cluster/client.h"

#include <fmt/format.h>

#include "edgeoffload/domain/json_io.h"
#include "edgeoffload/protocol/encoding.h"

namespace edgeoffload::cluster {

using protocol::Message;
using protocol::MessageType;

std::string submit_job(const std::vector<protocol::Endpoint>& servers, const JobSpec& spec,
                       std::chrono::milliseconds timeout) {
  if (servers.empty()) throw ValidationError("no server address given");
  spec.validate();
  std::string last_error;
  for (const auto& server : servers) {
    Message reply;
    try {
      reply = protocol::request(
          server,
          protocol::make_message(MessageType::kSubmitJob, protocol::next_message_id(),
                                 Json{{"job", to_json(spec)}}),
          timeout);
    } catch (const protocol::NetworkError& e) {
      last_error = fmt::format("{}: {}", server.to_string(), e.what());
      continue;
    }
    if (reply.type == MessageType::kError &&
        reply.payload.value("code", std::string()) == protocol::error_code::kNotLeader) {
      last_error = fmt::format("{}: not the leader", server.to_string());
      continue;
    }
    protocol::throw_if_error(reply);
    return reply.payload.at("status").get<std::string>();
  }
  throw protocol::NetworkError(fmt::format("no leader reachable ({})", last_error));
}

OffloadClient::OffloadClient(protocol::Endpoint server, std::chrono::milliseconds timeout)
    : server_(std::move(server)), timeout_(timeout) {}

OffloadReply OffloadClient::send(const std::string& model, std::string_view data) {
  using Ms = std::chrono::duration<double, std::milli>;
  Message request = protocol::make_message(
      MessageType::kOffloadRequest, protocol::next_message_id(),
      Json{{"model", model}, {"data", protocol::base64_encode(data)}});
  auto started = std::chrono::steady_clock::now();
  Message reply;
  for (int attempt = 0;; ++attempt) {
    try {
      if (!conn_) conn_ = protocol::Connection::connect(server_, timeout_);
      reply = conn_->call(request, timeout_);
      break;
    } catch (const protocol::NetworkError&) {
      conn_.reset();
      if (attempt > 0) throw;
    }
  }
  double rtt = Ms(std::chrono::steady_clock::now() - started).count();
  protocol::throw_if_error(reply);
  if (reply.type != MessageType::kOffloadResponse) {
    throw protocol::ProtocolError(protocol::ProtocolError::Kind::kSchema,
                                  fmt::format("expected OFFLOAD_RESPONSE, got {}",
                                              protocol::to_string(reply.type)));
  }
  OffloadReply out;
  out.rtt_ms = rtt;
  out.digest = reply.payload.at("digest").get<std::string>();
  if (out.digest != protocol::sha256_hex(data)) {
    throw protocol::ProtocolError(protocol::ProtocolError::Kind::kSchema,
                                  "payload digest mismatch");
  }
  out.worker_id = reply.payload.value("worker_id", std::string());
  const Json timings = reply.payload.value("timings", Json::object());
  out.queue_ms = timings.value("queue_ms", 0.0);
  out.service_ms = timings.value("service_ms", 0.0);
  out.total_ms = timings.value("total_ms", 0.0);
  out.result = reply.payload.value("result", Json::object());
  return out;
}

}  // namespace edgeoffload::cluster
