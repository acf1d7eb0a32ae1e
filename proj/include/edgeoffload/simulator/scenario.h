#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeoffload/domain/job.h"
#include "edgeoffload/domain/worker.h"
#include "edgeoffload/scheduler/scheduler.h"
#include "edgeoffload/simulator/cost.h"
#include "edgeoffload/simulator/latency.h"
#include "edgeoffload/simulator/tracking.h"

namespace edgeoffload::sim {

enum class Policy { kStLas, kFifo, kSrsfOracle };

std::string_view to_string(Policy policy);
// Accepts "st-las", "fifo", "srsf-oracle" (underscores and upper case too).
Policy parse_policy(std::string_view text);

// A job plus what only the simulator may know about it.
struct ScenarioJob {
  JobSpec spec;
  // Execution time needed to finish. Serving jobs without one run forever.
  std::optional<double> true_duration_s;
};

struct WorkerFailure {
  std::string worker_id;
  double time = 0.0;
  std::optional<double> recover_at;
};

// `count` requests for `profile`, one every `interval_s` from `start_s`.
struct RequestStream {
  std::string profile;
  int count = 0;
  double payload_bytes = 196608;
  double start_s = 0.0;
  double interval_s = 1.0;
};

struct Scenario {
  std::string name;
  std::string description;
  Policy policy = Policy::kStLas;
  std::uint64_t seed = 1;
  SchedulerConfig scheduler;
  std::vector<WorkerDescriptor> workers;
  std::vector<ScenarioJob> jobs;
  std::vector<WorkerFailure> failures;
  // Running jobs are checkpointed this often (0: only on preemption).
  double checkpoint_interval_s = 0.0;
  std::map<std::string, LatencyProfile> profiles;
  std::vector<RequestStream> requests;
  std::optional<PricingFile> pricing;
  std::optional<TrackingConfig> tracking;

  ResourceVector total_capacity() const;
};

// `catalog` resolves {"model": ...} latency profiles and job model names.
Scenario read_scenario(const Json& j, FieldErrors& errors, const ProfileCatalog& catalog);
// Bundled name ("ab_demo") or file path. Throws ParseError (with line and
// column) or ValidationError (one line per offending field, with its line).
Scenario load_scenario(const std::string& name_or_path);

}  // namespace edgeoffload::sim
