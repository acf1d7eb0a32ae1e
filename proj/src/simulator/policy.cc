#include "edgeoffload/simulator/policy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"
#include "edgeoffload/placement/placement.h"

namespace edgeoffload::sim {

BaselinePolicy::BaselinePolicy(Policy kind, SchedulerConfig config,
                               std::map<std::string, double> true_durations)
    : kind_(kind), config_(std::move(config)), true_durations_(std::move(true_durations)) {
  if (kind_ == Policy::kStLas) throw InternalError("BaselinePolicy does not implement ST-LAS");
  config_.validate();
}

JobState& BaselinePolicy::mutable_job(const std::string& job_id) {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw InternalError(fmt::format("unknown job {}", job_id));
  return it->second;
}

const JobState* BaselinePolicy::job(const std::string& job_id) const {
  auto it = jobs_.find(job_id);
  return it == jobs_.end() ? nullptr : &it->second;
}

void BaselinePolicy::advance_to(double t) {
  if (t < now_) {
    throw InternalError(fmt::format("simulation clock moved backwards ({} -> {})", now_, t));
  }
  double dt = t - now_;
  now_ = t;
  if (dt <= 0.0) return;
  ResourceVector capacity =
      config_.reference_capacity ? *config_.reference_capacity : cluster_.total_capacity();
  for (auto& [id, j] : jobs_) {
    if (j.status != JobStatus::kRunning) continue;
    j.executed_time_s += dt;
    j.attained_service += service_rate(j.spec, capacity, config_.weights) * dt;
  }
}

void BaselinePolicy::add_worker(const WorkerDescriptor& descriptor) {
  descriptor.validate();
  if (cluster_.contains(descriptor.worker_id)) {
    throw InternalError(fmt::format("worker {} already present", descriptor.worker_id));
  }
  WorkerRecord record;
  record.descriptor = descriptor;
  record.last_heartbeat = now_;
  cluster_.upsert(std::move(record));
}

std::vector<std::string> BaselinePolicy::remove_worker(const std::string& worker_id) {
  std::vector<std::string> affected;
  const WorkerRecord* w = cluster_.find(worker_id);
  if (w == nullptr) return affected;
  affected.assign(w->running_jobs.begin(), w->running_jobs.end());
  cluster_.erase(worker_id);
  return affected;
}

void BaselinePolicy::on_job_arrival(const JobSpec& spec) {
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw SubmissionError(e.what());
  }
  if (jobs_.count(spec.job_id)) {
    throw SubmissionError(fmt::format("job {} already exists", spec.job_id));
  }
  ResourceVector capacity =
      config_.reference_capacity ? *config_.reference_capacity : cluster_.total_capacity();
  if (!fits(spec.total_demand(), capacity)) {
    throw SubmissionError(fmt::format("job {}: gang demand {} exceeds cluster capacity {}",
                                      spec.job_id, spec.total_demand().to_string(),
                                      capacity.to_string()));
  }
  JobState j;
  j.spec = spec;
  j.waiting_since = now_;
  arrival_seq_[spec.job_id] = static_cast<long>(arrival_seq_.size());
  jobs_.emplace(spec.job_id, std::move(j));
}

void BaselinePolicy::release(JobState& j) {
  cluster_.release(j.spec.job_id, j.placement);
  j.previous_placement = j.placement;
  j.placement.clear();
}

void BaselinePolicy::on_job_complete(const std::string& job_id) {
  JobState& j = mutable_job(job_id);
  if (!j.holds_resources()) {
    throw InternalError(fmt::format("completion for job {} in state {}", job_id,
                                    to_string(j.status)));
  }
  release(j);
  j.status = JobStatus::kCompleted;
  j.completion_time = now_;
}

void BaselinePolicy::on_checkpoint_done(const std::string& job_id, int version) {
  JobState& j = mutable_job(job_id);
  if (j.status != JobStatus::kPreempting || version <= j.checkpoint_version) {
    throw InternalError(fmt::format("unexpected checkpoint v{} for job {}", version, job_id));
  }
  j.checkpoint_version = version;
  release(j);
  j.status = JobStatus::kCheckpointed;
  j.waiting_since = now_;
}

void BaselinePolicy::record_checkpoint(const std::string& job_id, int version) {
  JobState& j = mutable_job(job_id);
  if (version <= j.checkpoint_version) {
    throw InternalError(fmt::format("checkpoint v{} for job {} not above v{}", version, job_id,
                                    j.checkpoint_version));
  }
  j.checkpoint_version = version;
}

void BaselinePolicy::requeue_after_failure(const std::string& job_id, double service,
                                           double executed) {
  JobState& j = mutable_job(job_id);
  if (!j.holds_resources()) {
    throw InternalError(fmt::format("failure requeue for job {} in state {}", job_id,
                                    to_string(j.status)));
  }
  release(j);
  j.attained_service = std::min(j.attained_service, std::max(0.0, service));
  j.executed_time_s = std::min(j.executed_time_s, std::max(0.0, executed));
  j.status = JobStatus::kQueued;
  j.waiting_since = now_;
}

double BaselinePolicy::srsf_key(const JobState& j) const {
  auto it = true_durations_.find(j.spec.job_id);
  double remaining = it == true_durations_.end()
                         ? std::numeric_limits<double>::infinity()
                         : std::max(0.0, it->second - j.executed_time_s);
  double gpus = j.spec.total_demand().gpus;
  return gpus > 0.0 ? gpus * remaining : remaining;
}

bool BaselinePolicy::before(const JobState& a, const JobState& b) const {
  if (kind_ == Policy::kSrsfOracle) {
    double ka = srsf_key(a);
    double kb = srsf_key(b);
    if (ka != kb) return ka < kb;
  }
  if (a.spec.arrival_time != b.spec.arrival_time) return a.spec.arrival_time < b.spec.arrival_time;
  return arrival_seq_.at(a.spec.job_id) < arrival_seq_.at(b.spec.job_id);
}

std::vector<Action> BaselinePolicy::schedule_pass() {
  std::vector<Action> actions;
  std::vector<JobState*> order;
  for (auto& [id, j] : jobs_) {
    if (j.in_queue() || j.holds_resources()) order.push_back(&j);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const JobState* a, const JobState* b) { return before(*a, *b); });

  ClusterView future = cluster_;
  for (const JobState* j : order) {
    if (j->status == JobStatus::kPreempting) future.release(j->spec.job_id, j->placement);
  }

  auto dispatch = [&](JobState& j, const PlacementPlan& plan) {
    const std::string& id = j.spec.job_id;
    cluster_.allocate(id, plan.assignments);
    future.allocate(id, plan.assignments);
    bool resume = j.checkpoint_version > 0 || j.executed_time_s > 0.0;
    if (!j.previous_placement.empty()) {
      std::set<std::string> before_ws, after_ws;
      for (const auto& a : j.previous_placement) before_ws.insert(a.worker_id);
      for (const auto& a : plan.assignments) after_ws.insert(a.worker_id);
      if (before_ws != after_ws) ++j.migrations;
    }
    j.status = JobStatus::kRunning;
    j.placement = plan.assignments;
    j.last_dispatch_time = now_;
    if (!j.first_start_time) j.first_start_time = now_;
    actions.push_back(Action{ActionKind::kDispatch, id, plan.assignments, resume, {}});
  };

  for (JobState* j : order) {
    if (!j->in_queue()) continue;
    ClusterView both = pessimistic_view(cluster_, future);
    if (auto plan = place_gang(j->spec, both, config_.placement)) {
      dispatch(*j, *plan);
      continue;
    }
    if (kind_ == Policy::kFifo) break;  // strict arrival order: no overtaking

    if (auto plan = place_gang(j->spec, future, config_.placement)) {
      future.allocate(j->spec.job_id, plan->assignments);
      continue;
    }
    // Preempt running jobs with a strictly larger key, largest first.
    std::vector<JobState*> candidates;
    for (auto& [id, r] : jobs_) {
      if (r.status == JobStatus::kRunning && before(*j, r) && srsf_key(*j) < srsf_key(r)) {
        candidates.push_back(&r);
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](const JobState* a, const JobState* b) { return before(*b, *a); });
    ClusterView trial = future;
    std::vector<JobState*> chosen;
    std::optional<PlacementPlan> plan;
    for (JobState* v : candidates) {
      trial.release(v->spec.job_id, v->placement);
      chosen.push_back(v);
      plan = place_gang(j->spec, trial, config_.placement);
      if (plan) break;
    }
    if (!plan) continue;
    for (JobState* v : chosen) {
      v->status = JobStatus::kPreempting;
      ++v->preemptions;
      actions.push_back(Action{ActionKind::kPreempt, v->spec.job_id, {}, false, j->spec.job_id});
    }
    future = std::move(trial);
    future.allocate(j->spec.job_id, plan->assignments);
  }
  return actions;
}

std::vector<std::string> BaselinePolicy::check_invariants() const {
  std::vector<std::string> problems;
  std::map<std::string, ResourceVector> expected;
  for (const auto& [id, j] : jobs_) {
    if (j.holds_resources()) {
      if (j.placement.size() != static_cast<std::size_t>(j.spec.gang_size)) {
        problems.push_back(fmt::format("job {} holds {} of {} gang members", id,
                                       j.placement.size(), j.spec.gang_size));
      }
      for (const auto& a : j.placement) expected[a.worker_id] += a.resources;
    } else if (!j.placement.empty()) {
      problems.push_back(fmt::format("job {} in state {} keeps a placement", id,
                                     to_string(j.status)));
    }
  }
  for (const auto& [wid, w] : cluster_.workers()) {
    const ResourceVector& want = expected[wid];
    for (std::size_t d = 0; d < kNumDimensions; ++d) {
      if (std::abs(want[d] - w.allocated[d]) > 1e-6 * std::max(1.0, w.descriptor.capacity[d])) {
        problems.push_back(fmt::format("worker {} allocated {} but jobs hold {}", wid,
                                       w.allocated.to_string(), want.to_string()));
        break;
      }
    }
    if (!fits(w.allocated, w.descriptor.capacity)) {
      problems.push_back(fmt::format("worker {} over capacity", wid));
    }
  }
  return problems;
}

std::unique_ptr<SchedulingPolicy> make_policy(Policy policy, const Scenario& scenario) {
  SchedulerConfig config = scenario.scheduler;
  if (!config.reference_capacity) config.reference_capacity = scenario.total_capacity();
  if (policy == Policy::kStLas) return std::make_unique<StLasPolicy>(std::move(config));
  std::map<std::string, double> durations;
  if (policy == Policy::kSrsfOracle) {
    for (const auto& j : scenario.jobs) {
      if (j.true_duration_s) durations[j.spec.job_id] = *j.true_duration_s;
    }
  }
  return std::make_unique<BaselinePolicy>(policy, std::move(config), std::move(durations));
}

}  // namespace edgeoffload::sim
