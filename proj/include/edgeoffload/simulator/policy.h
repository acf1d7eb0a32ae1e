#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgeoffload/scheduler/scheduler.h"
#include "edgeoffload/simulator/scenario.h"

namespace edgeoffload::sim {

// What the engine needs from a scheduling policy. Mirrors the Scheduler
// event interface so ST-LAS runs through it unchanged.
class SchedulingPolicy {
 public:
  virtual ~SchedulingPolicy() = default;

  virtual void advance_to(double t) = 0;
  virtual void add_worker(const WorkerDescriptor& descriptor) = 0;
  virtual std::vector<std::string> remove_worker(const std::string& worker_id) = 0;
  virtual void on_job_arrival(const JobSpec& spec) = 0;
  virtual void on_job_complete(const std::string& job_id) = 0;
  virtual void on_checkpoint_done(const std::string& job_id, int version) = 0;
  virtual void record_checkpoint(const std::string& job_id, int version) = 0;
  virtual void requeue_after_failure(const std::string& job_id, double attained_service,
                                     double executed_time_s) = 0;
  virtual std::vector<Action> schedule_pass() = 0;
  virtual std::optional<double> next_deadline() const = 0;
  virtual const JobState* job(const std::string& job_id) const = 0;
  virtual const std::map<std::string, JobState>& jobs() const = 0;
  virtual std::vector<std::string> check_invariants() const = 0;
};

class StLasPolicy : public SchedulingPolicy {
 public:
  explicit StLasPolicy(SchedulerConfig config) : scheduler_(std::move(config)) {}

  void advance_to(double t) override { scheduler_.advance_to(t); }
  void add_worker(const WorkerDescriptor& d) override { scheduler_.add_worker(d); }
  std::vector<std::string> remove_worker(const std::string& id) override {
    return scheduler_.remove_worker(id);
  }
  void on_job_arrival(const JobSpec& spec) override { scheduler_.on_job_arrival(spec); }
  void on_job_complete(const std::string& id) override { scheduler_.on_job_complete(id); }
  void on_checkpoint_done(const std::string& id, int v) override {
    scheduler_.on_checkpoint_done(id, v);
  }
  void record_checkpoint(const std::string& id, int v) override {
    scheduler_.record_checkpoint(id, v);
  }
  void requeue_after_failure(const std::string& id, double s, double e) override {
    scheduler_.requeue_after_failure(id, s, e);
  }
  std::vector<Action> schedule_pass() override { return scheduler_.schedule_pass(); }
  std::optional<double> next_deadline() const override { return scheduler_.next_deadline(); }
  const JobState* job(const std::string& id) const override { return scheduler_.job(id); }
  const std::map<std::string, JobState>& jobs() const override { return scheduler_.jobs(); }
  std::vector<std::string> check_invariants() const override {
    return scheduler_.check_invariants();
  }

  const Scheduler& scheduler() const { return scheduler_; }

 private:
  Scheduler scheduler_;
};

// Single-queue baselines. FIFO dispatches strictly in arrival order and never
// preempts; SRSF_ORACLE orders by GPUs × true remaining time and preempts
// running jobs with a larger key. Only the oracle reads true durations.
class BaselinePolicy : public SchedulingPolicy {
 public:
  BaselinePolicy(Policy kind, SchedulerConfig config,
                 std::map<std::string, double> true_durations = {});

  void advance_to(double t) override;
  void add_worker(const WorkerDescriptor& descriptor) override;
  std::vector<std::string> remove_worker(const std::string& worker_id) override;
  void on_job_arrival(const JobSpec& spec) override;
  void on_job_complete(const std::string& job_id) override;
  void on_checkpoint_done(const std::string& job_id, int version) override;
  void record_checkpoint(const std::string& job_id, int version) override;
  void requeue_after_failure(const std::string& job_id, double attained_service,
                             double executed_time_s) override;
  std::vector<Action> schedule_pass() override;
  std::optional<double> next_deadline() const override { return std::nullopt; }
  const JobState* job(const std::string& job_id) const override;
  const std::map<std::string, JobState>& jobs() const override { return jobs_; }
  std::vector<std::string> check_invariants() const override;

 private:
  JobState& mutable_job(const std::string& job_id);
  // Lower sorts first.
  bool before(const JobState& a, const JobState& b) const;
  double srsf_key(const JobState& j) const;
  void release(JobState& job);

  Policy kind_;
  SchedulerConfig config_;
  std::map<std::string, double> true_durations_;
  double now_ = 0.0;
  ClusterView cluster_;
  std::map<std::string, JobState> jobs_;
  std::map<std::string, long> arrival_seq_;
};

std::unique_ptr<SchedulingPolicy> make_policy(Policy policy, const Scenario& scenario);

}  // namespace edgeoffload::sim
