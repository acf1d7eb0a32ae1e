#include "edgeoffload/scheduler/config_io.h"

#include "edgeoffload/domain/json_io.h"

namespace edgeoffload {

SchedulerConfig read_scheduler_config(const Json& j, const std::string& path,
                                      FieldErrors& errors) {
  SchedulerConfig c;
  FieldReader r(j, path, errors);
  if (!r.ok()) return c;
  r.reject_unknown({"num_queues", "demotion_threshold", "promotion_wait_threshold_s", "weights",
                    "checkpoint_overhead_s", "tick_interval_s", "skew_threshold",
                    "reference_capacity"});
  c.num_queues = static_cast<int>(r.integer_or("num_queues", c.num_queues));
  c.demotion_threshold = r.number_or("demotion_threshold", c.demotion_threshold);
  c.promotion_wait_threshold_s =
      r.number_or("promotion_wait_threshold_s", c.promotion_wait_threshold_s);
  if (const Json* w = r.object("weights", true)) {
    c.weights = read_weights(*w, r.child_path("weights"), errors);
  }
  c.checkpoint_overhead_s = r.number_or("checkpoint_overhead_s", c.checkpoint_overhead_s);
  c.tick_interval_s = r.number_or("tick_interval_s", c.tick_interval_s);
  c.placement.skew_threshold = r.number_or("skew_threshold", c.placement.skew_threshold);
  if (const Json* cap = r.object("reference_capacity", true)) {
    c.reference_capacity = read_resources(*cap, r.child_path("reference_capacity"), errors);
  }
  return c;
}

Json to_json(const SchedulerConfig& c) {
  Json j{{"num_queues", c.num_queues},
         {"demotion_threshold", c.demotion_threshold},
         {"promotion_wait_threshold_s", c.promotion_wait_threshold_s},
         {"weights", to_json(c.weights)},
         {"checkpoint_overhead_s", c.checkpoint_overhead_s},
         {"tick_interval_s", c.tick_interval_s},
         {"skew_threshold", c.placement.skew_threshold}};
  if (c.reference_capacity) j["reference_capacity"] = to_json(*c.reference_capacity);
  return j;
}

}  // namespace edgeoffload
