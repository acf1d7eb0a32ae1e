#pragma once

#include <string>

#include "edgeoffload/common/json_fields.h"
#include "edgeoffload/scheduler/scheduler.h"

namespace edgeoffload {

// Absent keys keep their defaults.
SchedulerConfig read_scheduler_config(const Json& j, const std::string& path,
                                      FieldErrors& errors);
Json to_json(const SchedulerConfig& config);

}  // namespace edgeoffload
