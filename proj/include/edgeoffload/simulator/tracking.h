#pragma once

#include "edgeoffload/common/json_fields.h"

namespace edgeoffload::sim {

struct TrackingResult {
  double displacement_m = 0.0;
  bool feasible = true;
};

// How far a walking target moves during one offload round trip, and whether
// it stays inside the camera's field of view. Throws ValidationError on a
// negative speed or RTT or a non-positive limit.
TrackingResult tracking_feasibility(double walk_speed_mps, double rtt_ms, double fov_limit_m);

struct TrackingConfig {
  double walk_speed_mps = 1.5;
  double fov_limit_m = 0.5;
};

TrackingConfig read_tracking_config(const Json& j, const std::string& path, FieldErrors& errors);

}  // namespace edgeoffload::sim
