#include "edgeoffload/scheduler/scheduler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload {

namespace {

// Absorbs floating-point drift when comparing accrued service or elapsed
// waiting time against a threshold that was reached "exactly".
constexpr double kThresholdSlack = 1e-9;

// Exhaustive victim search is used up to this many candidates; beyond it the
// search falls back to a greedy prefix with pruning.
constexpr std::size_t kExhaustiveVictimLimit = 12;

std::vector<std::string> sorted_worker_ids(const std::vector<Assignment>& placement) {
  std::vector<std::string> ids;
  ids.reserve(placement.size());
  for (const auto& a : placement) ids.push_back(a.worker_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

ClusterView pessimistic_view(const ClusterView& a, const ClusterView& b) {
  ClusterView out = a;
  for (const auto& [id, w] : a.workers()) {
    const WorkerRecord* other = b.find(id);
    if (other == nullptr) continue;
    WorkerRecord* mine = out.find(id);
    for (std::size_t d = 0; d < kNumDimensions; ++d) {
      mine->allocated[d] = std::max(w.allocated[d], other->allocated[d]);
    }
  }
  return out;
}

void SchedulerConfig::validate() const {
  if (num_queues != 2) {
    throw ConfigError(fmt::format("num_queues must be 2, got {}", num_queues));
  }
  if (!(demotion_threshold > 0.0)) throw ConfigError("demotion_threshold must be > 0");
  if (!(promotion_wait_threshold_s > 0.0)) {
    throw ConfigError("promotion_wait_threshold_s must be > 0");
  }
  if (!(checkpoint_overhead_s >= 0.0)) throw ConfigError("checkpoint_overhead_s must be >= 0");
  if (!(tick_interval_s > 0.0)) throw ConfigError("tick_interval_s must be > 0");
  if (!(placement.skew_threshold >= 0.0)) throw ConfigError("skew_threshold must be >= 0");
  weights.validate();
  if (reference_capacity && !reference_capacity->non_negative()) {
    throw ConfigError("reference_capacity must be >= 0");
  }
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kDispatch: return "dispatch";
    case ActionKind::kPreempt: return "preempt";
    case ActionKind::kDemote: return "demote";
    case ActionKind::kPromote: return "promote";
  }
  return "unknown";
}

double attained_service(const JobState& job, const ResourceVector& cluster_capacity,
                        const ResourceWeights& weights) {
  if (job.executed_time_s <= 0.0) return 0.0;
  return normalized_demand(job.spec.total_demand(), cluster_capacity, weights) *
         job.executed_time_s;
}

Scheduler::Scheduler(SchedulerConfig config) : config_(std::move(config)) {
  config_.validate();
}

void Scheduler::set_time(double t) {
  if (t < now_) {
    throw InternalError(fmt::format("scheduler clock moved backwards ({} -> {})", now_, t));
  }
  now_ = t;
}

void Scheduler::advance_to(double t) {
  double delta = t - now_;
  set_time(t);
  if (delta <= 0.0) return;
  for (auto& [id, job] : jobs_) {
    if (job.status == JobStatus::kRunning) on_progress(id, delta);
  }
}

void Scheduler::add_worker(const WorkerDescriptor& descriptor) {
  descriptor.validate();
  WorkerRecord* existing = cluster_.find(descriptor.worker_id);
  if (existing != nullptr) {
    if (existing->descriptor.capacity == descriptor.capacity) {
      existing->descriptor = descriptor;
      return;
    }
    throw InternalError(fmt::format(
        "worker {} re-registered with new capacity; remove it first", descriptor.worker_id));
  }
  WorkerRecord record;
  record.descriptor = descriptor;
  record.last_heartbeat = now_;
  cluster_.upsert(std::move(record));
}

std::vector<std::string> Scheduler::remove_worker(const std::string& worker_id) {
  std::vector<std::string> affected;
  const WorkerRecord* w = cluster_.find(worker_id);
  if (w == nullptr) return affected;
  affected.assign(w->running_jobs.begin(), w->running_jobs.end());
  cluster_.erase(worker_id);
  return affected;
}

void Scheduler::on_job_arrival(const JobSpec& spec) {
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw SubmissionError(e.what());
  }
  if (jobs_.count(spec.job_id) != 0) {
    throw SubmissionError(fmt::format("job {} already exists", spec.job_id));
  }
  ResourceVector capacity;
  bool check = false;
  if (config_.reference_capacity) {
    capacity = *config_.reference_capacity;
    check = true;
  } else if (!cluster_.empty()) {
    capacity = cluster_.total_capacity();
    check = true;
  }
  if (check && !fits(spec.total_demand(), capacity)) {
    throw SubmissionError(fmt::format("job {}: gang demand {} exceeds cluster capacity {}",
                                      spec.job_id, spec.total_demand().to_string(),
                                      capacity.to_string()));
  }
  JobState state;
  state.spec = spec;
  state.status = JobStatus::kQueued;
  state.queue_level = QueueLevel::kQ1;
  state.waiting_since = now_;
  jobs_.emplace(spec.job_id, std::move(state));
  enqueue(spec.job_id);
}

void Scheduler::on_progress(const std::string& job_id, double delta_s) {
  JobState& job = mutable_job(job_id);
  if (job.status != JobStatus::kRunning) {
    throw InternalError(fmt::format("progress reported for job {} in state {}", job_id,
                                    to_string(job.status)));
  }
  if (!(delta_s >= 0.0)) {
    throw InternalError(fmt::format("negative progress {} for job {}", delta_s, job_id));
  }
  job.executed_time_s += delta_s;
  job.attained_service += service_rate(job) * delta_s;
}

void Scheduler::on_job_complete(const std::string& job_id) {
  JobState& job = mutable_job(job_id);
  if (!job.holds_resources()) {
    throw InternalError(fmt::format("completion for job {} in state {}", job_id,
                                    to_string(job.status)));
  }
  release(job);
  job.status = JobStatus::kCompleted;
  job.completion_time = now_;
}

void Scheduler::on_job_failed(const std::string& job_id) {
  JobState& job = mutable_job(job_id);
  if (job.holds_resources()) release(job);
  if (job.in_queue()) dequeue(job_id);
  job.status = JobStatus::kFailed;
  job.completion_time = now_;
}

void Scheduler::on_checkpoint_done(const std::string& job_id, int version) {
  JobState& job = mutable_job(job_id);
  if (job.status != JobStatus::kPreempting) {
    throw InternalError(fmt::format("checkpoint completion for job {} in state {}", job_id,
                                    to_string(job.status)));
  }
  if (version <= job.checkpoint_version) {
    throw InternalError(fmt::format("checkpoint version {} for job {} not above {}", version,
                                    job_id, job.checkpoint_version));
  }
  job.checkpoint_version = version;
  release(job);
  job.status = JobStatus::kCheckpointed;
  job.waiting_since = now_;
  enqueue(job_id);
}

void Scheduler::abort_preemption(const std::string& job_id) {
  JobState& job = mutable_job(job_id);
  if (job.status != JobStatus::kPreempting) {
    throw InternalError(fmt::format("job {} is not being preempted", job_id));
  }
  job.status = JobStatus::kRunning;
}

void Scheduler::record_checkpoint(const std::string& job_id, int version) {
  JobState& job = mutable_job(job_id);
  if (version <= job.checkpoint_version) {
    throw InternalError(fmt::format("checkpoint version {} for job {} not above {}", version,
                                    job_id, job.checkpoint_version));
  }
  job.checkpoint_version = version;
}

void Scheduler::migrate(const std::string& job_id, const PlacementPlan& plan) {
  JobState& job = mutable_job(job_id);
  if (job.status != JobStatus::kRunning) {
    throw InternalError(fmt::format("cannot migrate job {} in state {}", job_id,
                                    to_string(job.status)));
  }
  if (plan.assignments.size() != static_cast<std::size_t>(job.spec.gang_size)) {
    throw InternalError(fmt::format("migration plan for job {} has wrong size", job_id));
  }
  cluster_.release(job_id, job.placement);
  if (!cluster_.can_allocate(plan.assignments)) {
    cluster_.allocate(job_id, job.placement);
    throw InternalError(fmt::format("migration plan for job {} does not fit", job_id));
  }
  cluster_.allocate(job_id, plan.assignments);
  job.previous_placement = job.placement;
  job.placement = plan.assignments;
  job.last_dispatch_time = now_;
  ++job.migrations;
}

void Scheduler::requeue_after_failure(const std::string& job_id, double service,
                                      double executed_time_s) {
  JobState& job = mutable_job(job_id);
  if (!job.holds_resources()) {
    throw InternalError(fmt::format("failure requeue for job {} in state {}", job_id,
                                    to_string(job.status)));
  }
  release(job);
  job.attained_service = std::min(job.attained_service, std::max(0.0, service));
  job.executed_time_s = std::min(job.executed_time_s, std::max(0.0, executed_time_s));
  job.demotion_base = std::min(job.demotion_base, job.attained_service);
  job.queue_level = job.attained_service - job.demotion_base >=
                            config_.demotion_threshold - kThresholdSlack
                        ? QueueLevel::kQ2
                        : QueueLevel::kQ1;
  job.status = JobStatus::kQueued;
  job.waiting_since = now_;
  enqueue(job_id);
}

std::vector<Action> Scheduler::schedule_pass() {
  std::vector<Action> actions;

  // Demotion: Q1 jobs (running or queued) whose service crossed the threshold.
  for (auto& [id, job] : jobs_) {
    if (job.queue_level != QueueLevel::kQ1) continue;
    if (!(job.status == JobStatus::kRunning || job.in_queue())) continue;
    if (job.attained_service - job.demotion_base <
        config_.demotion_threshold - kThresholdSlack) {
      continue;
    }
    bool queued = job.in_queue();
    if (queued) dequeue(id);
    job.queue_level = QueueLevel::kQ2;
    if (queued) enqueue(id);
    actions.push_back(Action{ActionKind::kDemote, id, {}, false, {}});
  }

  // Promotion: queued Q2 jobs that waited past the starvation threshold.
  for (const std::string& id : std::vector<std::string>(q2_)) {
    JobState& job = jobs_.at(id);
    if (now_ - job.waiting_since < config_.promotion_wait_threshold_s - kThresholdSlack) continue;
    dequeue(id);
    job.queue_level = QueueLevel::kQ1;
    job.demotion_base = job.attained_service;
    ++job.promotions;
    enqueue(id);
    actions.push_back(Action{ActionKind::kPromote, id, {}, false, {}});
  }

  // `future` is the cluster once in-flight preemptions finish, minus what
  // blocked Q1 jobs have reserved during this pass.
  ClusterView future = cluster_;
  for (const auto& [id, job] : jobs_) {
    if (job.status == JobStatus::kPreempting) future.release(id, job.placement);
  }
  for (const std::string& id : std::vector<std::string>(q1_)) {
    try_dispatch(jobs_.at(id), /*allow_preemption=*/true, future, actions);
  }
  for (const std::string& id : std::vector<std::string>(q2_)) {
    try_dispatch(jobs_.at(id), /*allow_preemption=*/false, future, actions);
  }
  return actions;
}

void Scheduler::try_dispatch(JobState& job, bool allow_preemption, ClusterView& future,
                             std::vector<Action>& actions) {
  const std::string id = job.spec.job_id;
  ClusterView both = pessimistic_view(cluster_, future);
  if (auto plan = place_gang(job.spec, both, config_.placement)) {
    cluster_.allocate(id, plan->assignments);
    future.allocate(id, plan->assignments);
    dequeue(id);
    bool resume = job.checkpoint_version > 0 || job.executed_time_s > 0.0;
    if (!job.previous_placement.empty() &&
        sorted_worker_ids(job.previous_placement) != sorted_worker_ids(plan->assignments)) {
      ++job.migrations;
    }
    job.status = JobStatus::kRunning;
    job.placement = plan->assignments;
    job.last_dispatch_time = now_;
    if (!job.first_start_time) job.first_start_time = now_;
    actions.push_back(Action{ActionKind::kDispatch, id, plan->assignments, resume, {}});
    return;
  }
  if (!allow_preemption) return;

  // Already satisfiable once in-flight preemptions land: hold the resources.
  if (auto plan = place_gang(job.spec, future, config_.placement)) {
    future.allocate(id, plan->assignments);
    return;
  }

  auto victims = select_preemption_victims(job, future);
  if (!victims) return;
  for (const std::string& vid : *victims) {
    JobState& victim = jobs_.at(vid);
    victim.status = JobStatus::kPreempting;
    ++victim.preemptions;
    future.release(vid, victim.placement);
    actions.push_back(Action{ActionKind::kPreempt, vid, {}, false, id});
  }
  if (auto plan = place_gang(job.spec, future, config_.placement)) {
    future.allocate(id, plan->assignments);
  }
}

std::optional<std::vector<std::string>> Scheduler::select_preemption_victims(
    const JobState& pending, const ClusterView& future_view) const {
  std::vector<const JobState*> candidates;
  for (const auto& [id, job] : jobs_) {
    if (job.status == JobStatus::kRunning && job.queue_level == QueueLevel::kQ2 &&
        id != pending.spec.job_id) {
      candidates.push_back(&job);
    }
  }
  if (candidates.empty()) return std::nullopt;
  std::sort(candidates.begin(), candidates.end(), [](const JobState* a, const JobState* b) {
    if (a->attained_service != b->attained_service) {
      return a->attained_service > b->attained_service;
    }
    return a->spec.job_id < b->spec.job_id;
  });

  auto feasible = [&](const std::vector<std::size_t>& subset) {
    ClusterView view = future_view;
    for (std::size_t i : subset) view.release(candidates[i]->spec.job_id, candidates[i]->placement);
    return place_gang(pending.spec, view, config_.placement).has_value();
  };
  auto to_ids = [&](const std::vector<std::size_t>& subset) {
    std::vector<std::string> ids;
    for (std::size_t i : subset) ids.push_back(candidates[i]->spec.job_id);
    return ids;
  };

  const std::size_t n = candidates.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (!feasible(all)) return std::nullopt;

  if (n <= kExhaustiveVictimLimit) {
    // Combinations of increasing size in lexicographic index order; since
    // candidates are sorted by descending service, the first feasible subset
    // of the smallest size is the one that prefers the most-served jobs.
    for (std::size_t k = 1; k <= n; ++k) {
      std::vector<std::size_t> idx(k);
      std::iota(idx.begin(), idx.end(), 0);
      while (true) {
        if (feasible(idx)) return to_ids(idx);
        std::size_t pos = k;
        while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
      }
    }
    return std::nullopt;
  }

  // Large candidate sets: take the highest-service prefix that suffices, then
  // drop members that turn out to be unnecessary, least-served first.
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < n; ++i) {
    chosen.push_back(i);
    if (feasible(chosen)) break;
  }
  for (std::size_t r = chosen.size(); r-- > 0;) {
    std::vector<std::size_t> trial = chosen;
    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(r));
    if (!trial.empty() && feasible(trial)) chosen = std::move(trial);
  }
  return to_ids(chosen);
}

std::optional<double> Scheduler::next_deadline() const {
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > now_ && (!best || t < *best)) best = t;
  };
  for (const auto& [id, job] : jobs_) {
    if (job.status == JobStatus::kRunning && job.queue_level == QueueLevel::kQ1) {
      double rate = service_rate(job);
      if (rate > 0.0) {
        double remaining = config_.demotion_threshold + job.demotion_base - job.attained_service;
        consider(now_ + remaining / rate);
      }
    }
  }
  for (const std::string& id : q2_) {
    consider(jobs_.at(id).waiting_since + config_.promotion_wait_threshold_s);
  }
  return best;
}

const JobState* Scheduler::job(const std::string& job_id) const {
  auto it = jobs_.find(job_id);
  return it == jobs_.end() ? nullptr : &it->second;
}

const std::vector<std::string>& Scheduler::queue(QueueLevel level) const {
  return level == QueueLevel::kQ1 ? q1_ : q2_;
}

ServicePriority Scheduler::priority(const std::string& job_id) const {
  const JobState* j = job(job_id);
  if (j == nullptr) throw InternalError(fmt::format("unknown job {}", job_id));
  return ServicePriority{j->attained_service, j->queue_level};
}

double service_rate(const JobSpec& spec, const ResourceVector& capacity,
                    const ResourceWeights& weights) {
  const ResourceVector demand = spec.total_demand();
  // Dimensions the cluster does not offer at all are dropped and the remaining
  // weights rescaled; with every weighted dimension present this is exactly
  // normalized_demand().
  double weight_sum = 0.0;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    if (weights[d] > 0.0 && capacity[d] > 0.0) weight_sum += weights[d];
  }
  if (weight_sum <= 0.0) return 0.0;
  double rate = 0.0;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    if (weights[d] > 0.0 && capacity[d] > 0.0) {
      rate += (weights[d] / weight_sum) * (demand[d] / capacity[d]);
    }
  }
  return rate;
}

double Scheduler::service_rate(const JobState& job) const {
  return edgeoffload::service_rate(job.spec, normalization_capacity(), config_.weights);
}

ResourceVector Scheduler::normalization_capacity() const {
  return config_.reference_capacity ? *config_.reference_capacity : cluster_.total_capacity();
}

std::vector<std::string> Scheduler::check_invariants() const {
  std::vector<std::string> problems;
  auto count_in = [](const std::vector<std::string>& q, const std::string& id) {
    return std::count(q.begin(), q.end(), id);
  };
  std::map<std::string, ResourceVector> expected_alloc;
  std::map<std::string, std::set<std::string>> expected_jobs;
  for (const auto& [id, job] : jobs_) {
    const auto in_q1 = count_in(q1_, id);
    const auto in_q2 = count_in(q2_, id);
    if (job.holds_resources()) {
      if (job.placement.size() != static_cast<std::size_t>(job.spec.gang_size)) {
        problems.push_back(fmt::format("job {} holds {} of {} gang members", id,
                                       job.placement.size(), job.spec.gang_size));
      }
      if (in_q1 + in_q2 != 0) problems.push_back(fmt::format("running job {} is queued", id));
      for (const auto& a : job.placement) {
        expected_alloc[a.worker_id] += a.resources;
        expected_jobs[a.worker_id].insert(id);
      }
    } else if (!job.placement.empty()) {
      problems.push_back(fmt::format("job {} in state {} keeps a placement", id,
                                     to_string(job.status)));
    }
    if (job.in_queue()) {
      const auto& own = job.queue_level == QueueLevel::kQ1 ? in_q1 : in_q2;
      if (own != 1 || in_q1 + in_q2 != 1) {
        problems.push_back(fmt::format("queued job {} appears {}x in Q1 and {}x in Q2", id,
                                       in_q1, in_q2));
      }
    } else if (!job.holds_resources() && in_q1 + in_q2 != 0) {
      problems.push_back(fmt::format("job {} in state {} is queued", id, to_string(job.status)));
    }
    if (job.attained_service < 0.0) problems.push_back(fmt::format("job {} negative service", id));
  }
  for (const auto* q : {&q1_, &q2_}) {
    for (std::size_t i = 1; i < q->size(); ++i) {
      if (queue_less((*q)[i], (*q)[i - 1])) {
        problems.push_back(fmt::format("queue out of order at {} / {}", (*q)[i - 1], (*q)[i]));
      }
    }
  }
  for (const std::string& id : q2_) {
    const JobState& job = jobs_.at(id);
    if (now_ - job.waiting_since > config_.promotion_wait_threshold_s + kThresholdSlack) {
      problems.push_back(fmt::format("job {} starved in Q2 for {}s", id, now_ - job.waiting_since));
    }
  }
  for (const auto& [wid, w] : cluster_.workers()) {
    const ResourceVector& want = expected_alloc[wid];
    for (std::size_t d = 0; d < kNumDimensions; ++d) {
      if (std::abs(want[d] - w.allocated[d]) > 1e-6 * std::max(1.0, w.descriptor.capacity[d])) {
        problems.push_back(fmt::format("worker {} allocated {} but jobs hold {}", wid,
                                       w.allocated.to_string(), want.to_string()));
        break;
      }
    }
    if (w.running_jobs != expected_jobs[wid]) {
      problems.push_back(fmt::format("worker {} running-job set mismatch", wid));
    }
    if (!fits(w.allocated, w.descriptor.capacity)) {
      problems.push_back(fmt::format("worker {} over capacity", wid));
    }
  }
  return problems;
}

JobState& Scheduler::mutable_job(const std::string& job_id) {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw InternalError(fmt::format("unknown job {}", job_id));
  return it->second;
}

bool Scheduler::queue_less(const std::string& a, const std::string& b) const {
  const JobState& ja = jobs_.at(a);
  const JobState& jb = jobs_.at(b);
  return std::tie(ja.attained_service, ja.spec.arrival_time, ja.spec.job_id) <
         std::tie(jb.attained_service, jb.spec.arrival_time, jb.spec.job_id);
}

void Scheduler::enqueue(const std::string& job_id) {
  auto& q = jobs_.at(job_id).queue_level == QueueLevel::kQ1 ? q1_ : q2_;
  auto pos = std::upper_bound(q.begin(), q.end(), job_id,
                              [this](const std::string& a, const std::string& b) {
                                return queue_less(a, b);
                              });
  q.insert(pos, job_id);
}

void Scheduler::dequeue(const std::string& job_id) {
  for (auto* q : {&q1_, &q2_}) {
    q->erase(std::remove(q->begin(), q->end(), job_id), q->end());
  }
}

void Scheduler::release(JobState& job) {
  cluster_.release(job.spec.job_id, job.placement);
  job.previous_placement = job.placement;
  job.placement.clear();
}

}  // namespace edgeoffload
