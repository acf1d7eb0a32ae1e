#pragma once

#include <set>
#include <string>

#include "edgeoffload/domain/resources.h"

namespace edgeoffload {

struct WorkerDescriptor {
  std::string worker_id;
  ResourceVector capacity;
  std::set<std::string> tags;
  std::string address;  // host:port the server dials for commands

  // Throws ValidationError on an empty id, negative capacity, or a capacity
  // that is zero in every dimension.
  void validate() const;

  bool operator==(const WorkerDescriptor&) const = default;
};

// Live view of one worker as the control plane sees it.
struct WorkerRecord {
  WorkerDescriptor descriptor;
  ResourceVector allocated;
  std::set<std::string> running_jobs;
  double last_heartbeat = 0.0;
  UtilizationVector reported_utilization{};
  bool alive = true;

  const std::string& id() const { return descriptor.worker_id; }
  ResourceVector free() const { return descriptor.capacity - allocated; }
};

}  // namespace edgeoffload
