#pragma once

#include <optional>
#include <string>

#include "edgeoffload/cluster/control_plane.h"
#include "edgeoffload/common/json_fields.h"
#include "edgeoffload/domain/job.h"

// Payload layouts shared by the server and the worker agent. Readers throw
// ValidationError listing every bad field.
namespace edgeoffload::cluster {

Json to_json(const HeartbeatReport& report);
HeartbeatReport heartbeat_report_from_json(const Json& payload);
Json to_json(const HeartbeatAck& ack);
HeartbeatAck heartbeat_ack_from_json(const Json& payload);

// DISPATCH and RESUME payloads as the worker sees them.
struct DispatchCommand {
  std::string job_id;
  JobSpec job;
  ResourceVector resources;  // this worker's share
  bool primary = true;
  std::optional<std::string> blob;  // RESUME only
  int checkpoint_version = 0;
  double executed_time_s = 0.0;
};

DispatchCommand dispatch_command_from_json(const Json& payload);

}  // namespace edgeoffload::cluster
