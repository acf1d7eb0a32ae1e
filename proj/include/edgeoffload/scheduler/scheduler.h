#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeoffload/domain/job.h"
#include "edgeoffload/domain/resources.h"
#include "edgeoffload/domain/worker.h"
#include "edgeoffload/placement/cluster_view.h"
#include "edgeoffload/placement/placement.h"

namespace edgeoffload {

struct SchedulerConfig {
  int num_queues = 2;
  // Normalized-resource-seconds a job may receive in Q1 before demotion.
  double demotion_threshold = 30.0;
  double promotion_wait_threshold_s = 300.0;
  ResourceWeights weights;
  double checkpoint_overhead_s = 1.0;
  double tick_interval_s = 1.0;
  PlacementConfig placement;
  // Capacity used to normalize demand and to reject infeasible submissions.
  // When unset the live total of registered workers is used.
  std::optional<ResourceVector> reference_capacity;

  void validate() const;
};

struct ServicePriority {
  double value = 0.0;  // lower value = higher priority
  QueueLevel queue_level = QueueLevel::kQ1;
};

enum class ActionKind { kDispatch, kPreempt, kDemote, kPromote };

std::string_view to_string(ActionKind kind);

struct Action {
  ActionKind kind = ActionKind::kDispatch;
  std::string job_id;
  std::vector<Assignment> placement;  // kDispatch only
  bool resume = false;                // kDispatch of a job that holds a checkpoint
  std::string for_job;                // kPreempt: the Q1 job needing the resources

  bool operator==(const Action&) const = default;
};

// Product form of attained service: normalized gang demand times executed
// time. The scheduler accumulates the same quantity incrementally so that a
// change in cluster capacity never rewrites service already received.
double attained_service(const JobState& job, const ResourceVector& cluster_capacity,
                        const ResourceWeights& weights);

// Service accrual rate of a gang: its normalized total demand against
// `capacity`, skipping dimensions the cluster does not have.
double service_rate(const JobSpec& spec, const ResourceVector& capacity,
                    const ResourceWeights& weights);

// Worker-by-worker max of the allocations in `a` and `b`: a plan that fits
// this view fits both.
ClusterView pessimistic_view(const ClusterView& a, const ClusterView& b);

// Spatial-temporal least-attained-service scheduler over a two-level
// discretized feedback queue.
//
// The owner drives it with events (arrival, progress, completion, checkpoint,
// worker join/leave) and calls schedule_pass() at every decision point; the
// returned actions describe what the owner must carry out on the workers.
// Not thread-safe: calls must be serialized by the owner.
class Scheduler {
 public:
  explicit Scheduler(SchedulerConfig config);

  const SchedulerConfig& config() const { return config_; }

  double now() const { return now_; }
  // Moves the clock forward without accruing progress. Throws InternalError
  // if `t` is in the past.
  void set_time(double t);
  // Moves the clock forward and credits every running job with the elapsed
  // time (virtual-time drivers).
  void advance_to(double t);

  void add_worker(const WorkerDescriptor& descriptor);
  // Drops the worker's capacity. Returns the jobs that held resources on it;
  // the caller decides their rollback through requeue_after_failure.
  std::vector<std::string> remove_worker(const std::string& worker_id);
  const ClusterView& cluster() const { return cluster_; }

  // Throws SubmissionError for a duplicate id or a gang demand larger than the
  // whole cluster.
  void on_job_arrival(const JobSpec& spec);
  // Throws InternalError unless the job is running.
  void on_progress(const std::string& job_id, double delta_s);
  void on_job_complete(const std::string& job_id);
  // Executor reported an unrecoverable error.
  void on_job_failed(const std::string& job_id);

  // Preemption finished: the checkpoint with `version` is durable, resources
  // are released and the job re-enters its queue.
  void on_checkpoint_done(const std::string& job_id, int version);
  // Checkpoint write failed: the job keeps running where it is.
  void abort_preemption(const std::string& job_id);
  // A checkpoint taken while the job keeps running.
  void record_checkpoint(const std::string& job_id, int version);
  // Moves a running job to `plan` directly, preserving its accounting.
  void migrate(const std::string& job_id, const PlacementPlan& plan);
  // Resources already gone (worker death): roll accounting back to the given
  // checkpoint values and requeue.
  void requeue_after_failure(const std::string& job_id, double attained_service,
                             double executed_time_s);

  std::vector<Action> schedule_pass();

  // Earliest future time at which a demotion or promotion becomes due, if any.
  std::optional<double> next_deadline() const;

  // Minimal-count set of running Q2 jobs whose release lets `pending` be
  // placed on `future_view`, preferring higher attained service. nullopt when
  // even releasing all of them is not enough.
  std::optional<std::vector<std::string>> select_preemption_victims(
      const JobState& pending, const ClusterView& future_view) const;

  const JobState* job(const std::string& job_id) const;
  const std::map<std::string, JobState>& jobs() const { return jobs_; }
  const std::vector<std::string>& queue(QueueLevel level) const;
  ServicePriority priority(const std::string& job_id) const;
  // Normalized demand of the whole gang; service accrues at this rate.
  double service_rate(const JobState& job) const;

  // Empty when every state invariant holds; otherwise one line per violation.
  std::vector<std::string> check_invariants() const;

 private:
  JobState& mutable_job(const std::string& job_id);
  bool queue_less(const std::string& a, const std::string& b) const;
  void enqueue(const std::string& job_id);
  void dequeue(const std::string& job_id);
  void release(JobState& job);
  ResourceVector normalization_capacity() const;
  void try_dispatch(JobState& job, bool allow_preemption, ClusterView& future,
                    std::vector<Action>& actions);

  SchedulerConfig config_;
  double now_ = 0.0;
  ClusterView cluster_;
  std::map<std::string, JobState> jobs_;
  std::vector<std::string> q1_;
  std::vector<std::string> q2_;
};

}  // namespace edgeoffload
