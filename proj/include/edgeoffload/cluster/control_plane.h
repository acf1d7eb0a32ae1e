#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgeoffload/cluster/checkpoint_store.h"
#include "edgeoffload/domain/job.h"
#include "edgeoffload/domain/resources.h"
#include "edgeoffload/domain/worker.h"
#include "edgeoffload/protocol/message.h"
#include "edgeoffload/scheduler/scheduler.h"

namespace edgeoffload::cluster {

// No running serving job can take an inference request for the model.
class NoCapacityError : public Error {
 public:
  using Error::Error;
};

struct ControlPlaneConfig {
  SchedulerConfig scheduler;
  double heartbeat_period_s = 2.0;
  int miss_tolerance = 3;

  void validate() const;
  double dead_after_s() const { return heartbeat_period_s * miss_tolerance; }
};

struct HeartbeatReport {
  std::string worker_id;
  UtilizationVector utilization{};
  // Executed seconds per job since the previous report.
  std::map<std::string, double> progress;
  std::vector<std::string> completed;
  // Jobs the worker is currently executing.
  std::vector<std::string> running;
};

struct HeartbeatAck {
  bool reregister = false;
  std::vector<std::string> stop_jobs;
};

// How the control plane reaches workers. The live server sends frames over
// TCP; tests substitute in-memory workers.
class WorkerTransport {
 public:
  virtual ~WorkerTransport() = default;
  // Throws on any failure (unreachable worker, ERROR reply, bad frame).
  virtual protocol::Message call(const WorkerDescriptor& worker,
                                 const protocol::Message& request) = 0;
};

struct RouteTarget {
  std::string worker_id;
  std::string address;
  std::string job_id;
};

// One failure-driven rollback, kept for inspection.
struct RollbackEntry {
  std::string job_id;
  std::string worker_id;
  double service_before = 0.0;
  double service_after = 0.0;
  int checkpoint_version = 0;  // 0: no checkpoint, rolled back to zero
};

// Server-side state machine around the scheduler: membership, liveness,
// checkpoint/resume mechanics and inference routing. Time is passed in so the
// logic runs the same under a test clock. Not thread-safe; the server funnels
// every call through its actor thread.
class ControlPlane {
 public:
  ControlPlane(ControlPlaneConfig config, CheckpointStore& store, WorkerTransport& transport);

  // A worker announcing itself again with a different capacity is treated as
  // having died first.
  void register_worker(const WorkerDescriptor& descriptor, double now);
  HeartbeatAck heartbeat(const HeartbeatReport& report, double now);
  // Workers silent for longer than heartbeat_period × miss_tolerance.
  std::vector<std::string> detect_failures(double now);
  // Direct failure signal, e.g. a forward to the worker failed.
  void mark_worker_dead(const std::string& worker_id, double now);

  // Throws SubmissionError.
  void submit(const JobSpec& spec, double now);
  // One decision point: schedule, then carry out dispatches and preemptions.
  void tick(double now);

  // Checkpoints a running job and resumes it on `to_plan`. Returns false if
  // the checkpoint could not be written; the job then keeps running where it
  // was.
  bool checkpoint_and_migrate(const std::string& job_id, const PlacementPlan& to_plan,
                              double now);

  // Least-loaded live worker hosting a running serving job for the model.
  // Throws NoCapacityError.
  RouteTarget route_inference(const std::string& model_name,
                              const std::set<std::string>& exclude = {}) const;

  const Scheduler& scheduler() const { return scheduler_; }
  const CheckpointStore& checkpoints() const { return store_; }
  const std::vector<RollbackEntry>& rollback_log() const { return rollback_log_; }
  bool is_alive(const std::string& worker_id) const;
  std::vector<std::string> alive_workers() const;
  std::optional<WorkerRecord> worker(const std::string& worker_id) const;
  // "queued", "running", ... for the JOB_STATUS reply.
  std::string job_status(const std::string& job_id) const;

 private:
  struct Liveness {
    double last_heartbeat = 0.0;
    UtilizationVector utilization{};
  };

  void handle_worker_loss(const std::string& worker_id);
  // Requeue from the latest checkpoint after `worker_id` lost the job.
  void roll_back(const std::string& job_id, const std::string& worker_id);
  // Returns false if a worker failed while dispatching; the job has been
  // requeued in that case.
  bool start_job(const std::string& job_id, const std::vector<Assignment>& placement,
                 const std::optional<CheckpointRecord>& checkpoint);
  // PREEMPT on every worker of the job; returns the primary's blob, or
  // nullopt if a worker died (the job has been requeued then).
  std::optional<std::string> stop_job(const std::string& job_id);
  void preempt(const std::string& job_id, double now);
  void discard_on(const std::string& job_id, const std::vector<std::string>& workers,
                  const std::string& except);
  protocol::Message call_worker(const std::string& worker_id, const protocol::Message& m);

  ControlPlaneConfig config_;
  CheckpointStore& store_;
  WorkerTransport& transport_;
  Scheduler scheduler_;
  std::map<std::string, Liveness> liveness_;
  std::vector<RollbackEntry> rollback_log_;
};

// Distinct worker ids of a placement, in assignment order.
std::vector<std::string> placement_workers(const std::vector<Assignment>& placement);

}  // namespace edgeoffload::cluster
