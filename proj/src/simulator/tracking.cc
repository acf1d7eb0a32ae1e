#include "edgeoffload/simulator/tracking.h"

#include "edgeoffload/common/error.h"

namespace edgeoffload::sim {

TrackingResult tracking_feasibility(double walk_speed_mps, double rtt_ms, double fov_limit_m) {
  if (!(walk_speed_mps >= 0.0)) throw ValidationError("walk speed must be >= 0");
  if (!(rtt_ms >= 0.0)) throw ValidationError("rtt must be >= 0");
  if (!(fov_limit_m > 0.0)) throw ValidationError("field-of-view limit must be > 0");
  TrackingResult r;
  r.displacement_m = walk_speed_mps * rtt_ms / 1000.0;
  r.feasible = r.displacement_m <= fov_limit_m;
  return r;
}

TrackingConfig read_tracking_config(const Json& j, const std::string& path, FieldErrors& errors) {
  TrackingConfig c;
  FieldReader r(j, path, errors);
  if (!r.ok()) return c;
  r.reject_unknown({"walk_speed_mps", "fov_limit_m"});
  c.walk_speed_mps = r.number_or("walk_speed_mps", c.walk_speed_mps);
  c.fov_limit_m = r.number_or("fov_limit_m", c.fov_limit_m);
  if (!(c.walk_speed_mps >= 0.0)) errors.add(r.child_path("walk_speed_mps"), "must be >= 0");
  if (!(c.fov_limit_m > 0.0)) errors.add(r.child_path("fov_limit_m"), "must be > 0");
  return c;
}

}  // namespace edgeoffload::sim
