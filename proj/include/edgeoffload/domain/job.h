#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "edgeoffload/domain/model_profile.h"
#include "edgeoffload/domain/resources.h"

namespace edgeoffload {

enum class JobKind { kServing, kTraining };

enum class JobStatus {
  kQueued,
  kRunning,
  kPreempting,
  kCheckpointed,
  kCompleted,
  kFailed,
};

enum class QueueLevel { kQ1 = 1, kQ2 = 2 };

std::string_view to_string(JobKind kind);
std::string_view to_string(JobStatus status);
std::string_view to_string(QueueLevel level);
JobKind parse_job_kind(std::string_view text);

// What the submitter asks for. Ground-truth durations used by the simulator
// live in sim::ScenarioJob, never here, so scheduling and placement code has
// no way to read them.
struct JobSpec {
  std::string job_id;
  JobKind kind = JobKind::kTraining;
  ResourceVector required;  // per gang member
  int gang_size = 1;
  ModelProfile model;
  std::set<std::string> locality_tags;
  std::optional<double> latency_threshold_ms;
  double arrival_time = 0.0;
  // Opaque to the control plane; forwarded verbatim to the worker executor.
  std::string executor_args;

  ResourceVector total_demand() const { return required * static_cast<double>(gang_size); }

  // Throws ValidationError on an empty id, gang_size < 1, or negative demand.
  void validate() const;
};

struct Assignment {
  std::string worker_id;
  ResourceVector resources;

  bool operator==(const Assignment&) const = default;
};

struct JobState {
  JobSpec spec;
  JobStatus status = JobStatus::kQueued;
  QueueLevel queue_level = QueueLevel::kQ1;
  double attained_service = 0.0;
  double executed_time_s = 0.0;
  double last_dispatch_time = 0.0;
  double waiting_since = 0.0;
  std::vector<Assignment> placement;
  int checkpoint_version = 0;

  // Service level at which the job last entered Q1. Demotion fires once the
  // job has received demotion_threshold service beyond this point, so a
  // promoted job is not immediately pushed back down.
  double demotion_base = 0.0;
  std::optional<double> first_start_time;
  std::optional<double> completion_time;
  std::vector<Assignment> previous_placement;
  int preemptions = 0;
  int migrations = 0;
  int promotions = 0;

  bool in_queue() const {
    return status == JobStatus::kQueued || status == JobStatus::kCheckpointed;
  }
  bool holds_resources() const {
    return status == JobStatus::kRunning || status == JobStatus::kPreempting;
  }
};

}  // namespace edgeoffload
