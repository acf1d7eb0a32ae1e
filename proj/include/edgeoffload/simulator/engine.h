#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "edgeoffload/common/stats.h"
#include "edgeoffload/simulator/policy.h"
#include "edgeoffload/simulator/scenario.h"

namespace edgeoffload::sim {

enum class EventKind {
  kArrival,
  kProgressTick,  // a demotion or promotion deadline
  kCompletion,
  kHeartbeat,  // periodic checkpoint of running jobs
  kWorkerFail,
  kWorkerRecover,
  kCheckpointDone,
  kOffloadRequest,
};

std::string_view to_string(EventKind kind);

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kArrival;
  std::string subject;
  long epoch = 0;  // completion / checkpoint events go stale when it changes
  int index = 0;   // request stream for kOffloadRequest

  // Min-heap order: earlier time first, then insertion order.
  bool operator>(const Event& other) const {
    if (time != other.time) return time > other.time;
    return seq > other.seq;
  }
};

// Pops in (time, insertion sequence) order. Refuses events before the last
// popped time.
class EventQueue {
 public:
  void push(double time, EventKind kind, std::string subject, long epoch = 0, int index = 0);
  Event pop();
  const Event& top() const { return heap_.top(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  double now() const { return now_; }

 private:
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
};

struct JobReport {
  std::string job_id;
  JobKind kind = JobKind::kTraining;
  JobStatus status = JobStatus::kQueued;
  double arrival_s = 0.0;
  std::optional<double> first_start_s;
  std::optional<double> completion_s;
  std::optional<double> jct_s;
  double executed_s = 0.0;
  double attained_service = 0.0;
  int preemptions = 0;
  int migrations = 0;
  int promotions = 0;
};

struct ActionRecord {
  double time = 0.0;
  ActionKind kind = ActionKind::kDispatch;
  std::string job_id;
  std::string detail;
};

struct SimRollback {
  double time = 0.0;
  std::string job_id;
  std::string worker_id;
  double service_before = 0.0;
  double service_after = 0.0;
  int checkpoint_version = 0;  // 0: rolled back to the start
};

struct RequestReport {
  std::string profile;
  double profile_mean_ms = 0.0;
  SampleSummary rtt_ms;
};

struct TrackingReport {
  std::string profile;
  double rtt_ms = 0.0;  // profile mean
  double displacement_m = 0.0;
  bool feasible = true;
};

struct TraceReport {
  std::string scenario;
  Policy policy = Policy::kStLas;
  std::uint64_t seed = 0;
  std::vector<JobReport> jobs;  // by job id
  std::size_t completed = 0;
  double average_jct_s = 0.0;  // over completed jobs; 0 when none
  int dispatches = 0;
  int preemptions = 0;
  int migrations = 0;
  int promotions = 0;
  int demotions = 0;
  std::vector<ActionRecord> actions;
  std::vector<SimRollback> rollbacks;
  std::vector<RequestReport> requests;
  std::vector<TrackingReport> tracking;
  double end_time_s = 0.0;
  std::size_t decision_points = 0;
};

struct EngineOptions {
  // Called after every decision point with the policy state.
  std::function<void(double now, const SchedulingPolicy& policy)> observer;
  std::size_t max_events = 10'000'000;
};

// Runs `scenario` under `policy` in virtual time. Deterministic in
// (scenario, policy, seed). Throws InternalError if a scheduler invariant
// breaks at a decision point.
TraceReport run_scenario(const Scenario& scenario, Policy policy,
                         const EngineOptions& options = {});
inline TraceReport run_scenario(const Scenario& scenario) {
  return run_scenario(scenario, scenario.policy);
}

std::string format_report(const TraceReport& report);
// Long format: record,subject,metric,value. Fixed six-decimal numbers.
std::string format_csv(const TraceReport& report);

}  // namespace edgeoffload::sim
