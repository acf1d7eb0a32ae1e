#include "edgeoffload/domain/job.h"

#include <fmt/format.h>

#include "edgeoffload/common/error.h"
#include "edgeoffload/domain/worker.h"

namespace edgeoffload {

std::string_view to_string(JobKind kind) {
  return kind == JobKind::kServing ? "serving" : "training";
}

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kPreempting: return "preempting";
    case JobStatus::kCheckpointed: return "checkpointed";
    case JobStatus::kCompleted: return "completed";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

std::string_view to_string(QueueLevel level) {
  return level == QueueLevel::kQ1 ? "Q1" : "Q2";
}

JobKind parse_job_kind(std::string_view text) {
  if (text == "serving") return JobKind::kServing;
  if (text == "training") return JobKind::kTraining;
  throw ValidationError(fmt::format("unknown job kind '{}' (expected serving|training)", text));
}

void JobSpec::validate() const {
  if (job_id.empty()) throw ValidationError("job id must not be empty");
  if (gang_size < 1) {
    throw ValidationError(fmt::format("job {}: gang_size must be >= 1", job_id));
  }
  if (!required.non_negative()) {
    throw ValidationError(fmt::format("job {}: demand must be >= 0", job_id));
  }
  if (!(arrival_time >= 0.0)) {
    throw ValidationError(fmt::format("job {}: arrival_time must be >= 0", job_id));
  }
}

void WorkerDescriptor::validate() const {
  if (worker_id.empty()) throw ValidationError("worker id must not be empty");
  if (!capacity.non_negative()) {
    throw ValidationError(fmt::format("worker {}: capacity must be >= 0", worker_id));
  }
  if (capacity.is_zero()) {
    throw ValidationError(
        fmt::format("worker {}: capacity must be > 0 in at least one dimension", worker_id));
  }
}

}  // namespace edgeoffload
