#include "edgeoffload/simulator/engine.h"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload::sim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kArrival:
      return "arrival";
    case EventKind::kProgressTick:
      return "progress_tick";
    case EventKind::kCompletion:
      return "completion";
    case EventKind::kHeartbeat:
      return "heartbeat";
    case EventKind::kWorkerFail:
      return "worker_fail";
    case EventKind::kWorkerRecover:
      return "worker_recover";
    case EventKind::kCheckpointDone:
      return "checkpoint_done";
    case EventKind::kOffloadRequest:
      return "offload_request";
  }
  return "?";
}

void EventQueue::push(double time, EventKind kind, std::string subject, long epoch, int index) {
  if (time < now_) {
    throw InternalError(fmt::format("{} event for {} scheduled at {} before now {}",
                                    to_string(kind), subject, time, now_));
  }
  heap_.push(Event{time, next_seq_++, kind, std::move(subject), epoch, index});
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  now_ = e.time;
  return e;
}

namespace {

// Executed-time slack when deciding that a completion event is current.
constexpr double kDurationSlack = 1e-9;

struct Snapshot {
  int version = 0;
  double service = 0.0;
  double executed = 0.0;
};

class Run {
 public:
  Run(const Scenario& scenario, Policy policy, const EngineOptions& options)
      : scenario_(scenario), options_(options), policy_(make_policy(policy, scenario)) {
    report_.scenario = scenario.name;
    report_.policy = policy;
    report_.seed = scenario.seed;
    for (const auto& w : scenario.workers) workers_[w.worker_id] = w;
    for (const auto& j : scenario.jobs) {
      if (j.true_duration_s) durations_[j.spec.job_id] = *j.true_duration_s;
    }
  }

  TraceReport execute() {
    for (const auto& w : scenario_.workers) policy_->add_worker(w);
    for (const auto& j : scenario_.jobs) {
      queue_.push(j.spec.arrival_time, EventKind::kArrival, j.spec.job_id);
      specs_[j.spec.job_id] = &j.spec;
    }
    for (const auto& f : scenario_.failures) {
      queue_.push(f.time, EventKind::kWorkerFail, f.worker_id);
      if (f.recover_at) queue_.push(*f.recover_at, EventKind::kWorkerRecover, f.worker_id);
    }
    for (std::size_t i = 0; i < scenario_.requests.size(); ++i) {
      const auto& r = scenario_.requests[i];
      streams_.emplace_back(scenario_.seed, i);
      samples_.emplace_back();
      for (int k = 0; k < r.count; ++k) {
        queue_.push(r.start_s + k * r.interval_s, EventKind::kOffloadRequest, r.profile, 0,
                    static_cast<int>(i));
      }
    }
    if (scenario_.checkpoint_interval_s > 0.0 && !scenario_.jobs.empty()) {
      queue_.push(scenario_.checkpoint_interval_s, EventKind::kHeartbeat, "");
    }

    std::size_t processed = 0;
    while (!queue_.empty()) {
      double t = queue_.top().time;
      policy_->advance_to(t);
      bool decision = false;
      while (!queue_.empty() && queue_.top().time == t) {
        if (++processed > options_.max_events) {
          throw InternalError(fmt::format("simulation exceeded {} events", options_.max_events));
        }
        decision |= handle(queue_.pop());
      }
      if (decision) decide(t);
      report_.end_time_s = t;
    }
    finish();
    return std::move(report_);
  }

 private:
  // Returns true if the event changes scheduling state.
  bool handle(const Event& e) {
    switch (e.kind) {
      case EventKind::kArrival:
        policy_->on_job_arrival(*specs_.at(e.subject));
        return true;
      case EventKind::kProgressTick:
        return true;
      case EventKind::kCompletion: {
        const JobState* j = policy_->job(e.subject);
        if (j == nullptr || e.epoch != epoch_[e.subject] || j->status != JobStatus::kRunning) {
          return false;
        }
        if (j->executed_time_s + kDurationSlack < durations_.at(e.subject)) {
          throw InternalError(fmt::format("job {} completion at {} with {}s of {}s executed",
                                          e.subject, e.time, j->executed_time_s,
                                          durations_.at(e.subject)));
        }
        policy_->on_job_complete(e.subject);
        return true;
      }
      case EventKind::kCheckpointDone: {
        const JobState* j = policy_->job(e.subject);
        if (j == nullptr || e.epoch != epoch_[e.subject] ||
            j->status != JobStatus::kPreempting) {
          return false;
        }
        int version = take_snapshot(*j);
        policy_->on_checkpoint_done(e.subject, version);
        return true;
      }
      case EventKind::kHeartbeat: {
        for (const auto& [id, j] : policy_->jobs()) {
          if (j.status != JobStatus::kRunning) continue;
          policy_->record_checkpoint(id, take_snapshot(j));
        }
        if (!queue_.empty()) {
          queue_.push(e.time + scenario_.checkpoint_interval_s, EventKind::kHeartbeat, "");
        }
        return false;
      }
      case EventKind::kWorkerFail:
        fail_worker(e.subject, e.time);
        return true;
      case EventKind::kWorkerRecover:
        policy_->add_worker(workers_.at(e.subject));
        return true;
      case EventKind::kOffloadRequest: {
        const LatencyProfile& p = scenario_.profiles.at(e.subject);
        const RequestStream& r = scenario_.requests[static_cast<std::size_t>(e.index)];
        samples_[static_cast<std::size_t>(e.index)].push_back(
            roundtrip_latency(p, r.payload_bytes, streams_[static_cast<std::size_t>(e.index)]));
        return false;
      }
    }
    return false;
  }

  int take_snapshot(const JobState& j) {
    auto& list = snapshots_[j.spec.job_id];
    int version = std::max(j.checkpoint_version, list.empty() ? 0 : list.back().version) + 1;
    list.push_back(Snapshot{version, j.attained_service, j.executed_time_s});
    return version;
  }

  void fail_worker(const std::string& worker_id, double t) {
    for (const std::string& id : policy_->remove_worker(worker_id)) {
      const JobState* j = policy_->job(id);
      double before = j->attained_service;
      const auto& list = snapshots_[id];
      Snapshot ck = list.empty() ? Snapshot{} : list.back();
      policy_->requeue_after_failure(id, ck.service, ck.executed);
      ++epoch_[id];
      double after = policy_->job(id)->attained_service;
      if (after > before) {
        throw InternalError(fmt::format("rollback raised service of {} from {} to {}", id,
                                        before, after));
      }
      report_.rollbacks.push_back(SimRollback{t, id, worker_id, before, after, ck.version});
    }
  }

  void decide(double t) {
    std::vector<Action> actions = policy_->schedule_pass();
    for (const Action& a : actions) {
      ActionRecord rec{t, a.kind, a.job_id, {}};
      switch (a.kind) {
        case ActionKind::kDispatch: {
          ++report_.dispatches;
          const JobState* j = policy_->job(a.job_id);
          long epoch = ++epoch_[a.job_id];
          auto d = durations_.find(a.job_id);
          if (d != durations_.end()) {
            double remaining = std::max(0.0, d->second - j->executed_time_s);
            queue_.push(t + remaining, EventKind::kCompletion, a.job_id, epoch);
          }
          std::vector<std::string> ws;
          for (const auto& as : a.placement) ws.push_back(as.worker_id);
          rec.detail = fmt::format("{}{}", fmt::join(ws, "+"),
                                   a.resume ? fmt::format(" resume v{}", j->checkpoint_version)
                                            : std::string());
          break;
        }
        case ActionKind::kPreempt: {
          ++report_.preemptions;
          long epoch = ++epoch_[a.job_id];
          queue_.push(t + scenario_.scheduler.checkpoint_overhead_s, EventKind::kCheckpointDone,
                      a.job_id, epoch);
          rec.detail = fmt::format("for {}", a.for_job);
          break;
        }
        case ActionKind::kDemote:
          ++report_.demotions;
          break;
        case ActionKind::kPromote:
          ++report_.promotions;
          break;
      }
      report_.actions.push_back(std::move(rec));
    }
    ++report_.decision_points;
    auto problems = policy_->check_invariants();
    if (!problems.empty()) {
      throw InternalError(fmt::format("scheduler invariant violated at t={}: {}", t,
                                      fmt::join(problems, "; ")));
    }
    if (auto next = policy_->next_deadline()) {
      if (scheduled_ticks_.insert(*next).second) {
        queue_.push(*next, EventKind::kProgressTick, "");
      }
    }
    if (options_.observer) options_.observer(t, *policy_);
  }

  void finish() {
    double jct_sum = 0.0;
    for (const auto& [id, j] : policy_->jobs()) {
      JobReport r;
      r.job_id = id;
      r.kind = j.spec.kind;
      r.status = j.status;
      r.arrival_s = j.spec.arrival_time;
      r.first_start_s = j.first_start_time;
      r.completion_s = j.completion_time;
      if (j.status == JobStatus::kCompleted && j.completion_time) {
        r.jct_s = *j.completion_time - j.spec.arrival_time;
        jct_sum += *r.jct_s;
        ++report_.completed;
      }
      r.executed_s = j.executed_time_s;
      r.attained_service = j.attained_service;
      r.preemptions = j.preemptions;
      r.migrations = j.migrations;
      r.promotions = j.promotions;
      report_.migrations += j.migrations;
      report_.jobs.push_back(std::move(r));
    }
    if (report_.completed > 0) {
      report_.average_jct_s = jct_sum / static_cast<double>(report_.completed);
    }
    for (std::size_t i = 0; i < scenario_.requests.size(); ++i) {
      const auto& r = scenario_.requests[i];
      RequestReport rr;
      rr.profile = r.profile;
      rr.profile_mean_ms = scenario_.profiles.at(r.profile).mean_ms(r.payload_bytes);
      rr.rtt_ms = summarize(samples_[i]);
      report_.requests.push_back(std::move(rr));
    }
    if (scenario_.tracking) {
      for (const auto& [name, p] : scenario_.profiles) {
        double payload = 196608;
        for (const auto& r : scenario_.requests) {
          if (r.profile == name) payload = r.payload_bytes;
        }
        TrackingReport t;
        t.profile = name;
        t.rtt_ms = p.mean_ms(payload);
        TrackingResult res = tracking_feasibility(scenario_.tracking->walk_speed_mps, t.rtt_ms,
                                                  scenario_.tracking->fov_limit_m);
        t.displacement_m = res.displacement_m;
        t.feasible = res.feasible;
        report_.tracking.push_back(t);
      }
    }
  }

  const Scenario& scenario_;
  const EngineOptions& options_;
  std::unique_ptr<SchedulingPolicy> policy_;
  EventQueue queue_;
  TraceReport report_;
  std::map<std::string, WorkerDescriptor> workers_;
  std::map<std::string, const JobSpec*> specs_;
  std::map<std::string, double> durations_;
  std::map<std::string, long> epoch_;
  std::map<std::string, std::vector<Snapshot>> snapshots_;
  std::set<double> scheduled_ticks_;
  std::vector<JitterStream> streams_;
  std::vector<std::vector<double>> samples_;
};

std::string opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.3f}", *v) : std::string("-");
}

std::string num(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

TraceReport run_scenario(const Scenario& scenario, Policy policy, const EngineOptions& options) {
  return Run(scenario, policy, options).execute();
}

std::string format_report(const TraceReport& r) {
  std::string out = fmt::format("scenario {}  policy {}  seed {}\n", r.scenario,
                                to_string(r.policy), r.seed);
  if (!r.jobs.empty()) {
    std::size_t w = 3;
    for (const auto& j : r.jobs) w = std::max(w, j.job_id.size());
    out += fmt::format("\n{:<{}}  {:<8}  {:<12}  {:>9}  {:>9}  {:>10}  {:>9}  {:>4}  {:>4}  {:>4}\n",
                       "job", w, "kind", "status", "arrival", "start", "complete", "jct",
                       "pre", "mig", "pro");
    for (const auto& j : r.jobs) {
      out += fmt::format("{:<{}}  {:<8}  {:<12}  {:>9.3f}  {:>9}  {:>10}  {:>9}  {:>4}  {:>4}  {:>4}\n",
                         j.job_id, w, to_string(j.kind), to_string(j.status), j.arrival_s,
                         opt(j.first_start_s), opt(j.completion_s), opt(j.jct_s), j.preemptions,
                         j.migrations, j.promotions);
    }
  }
  out += fmt::format("\ncompleted {} of {} jobs, average JCT {:.3f} s\n", r.completed,
                     r.jobs.size(), r.average_jct_s);
  out += fmt::format("dispatches {}  preemptions {}  migrations {}  promotions {}  demotions {}\n",
                     r.dispatches, r.preemptions, r.migrations, r.promotions, r.demotions);
  if (!r.rollbacks.empty()) out += fmt::format("failure rollbacks {}\n", r.rollbacks.size());
  if (!r.requests.empty()) {
    std::size_t w = 7;
    for (const auto& q : r.requests) w = std::max(w, q.profile.size());
    out += fmt::format("\n{:<{}}  {:>5}  {:>10}  {:>10}  {:>12}  {:>10}\n", "profile", w, "n",
                       "expected", "mean_ms", "variance", "p95_ms");
    for (const auto& q : r.requests) {
      out += fmt::format("{:<{}}  {:>5}  {:>10.3f}  {:>10.3f}  {:>12.3f}  {:>10.3f}\n", q.profile,
                         w, q.rtt_ms.count, q.profile_mean_ms, q.rtt_ms.mean, q.rtt_ms.variance,
                         q.rtt_ms.p95);
    }
  }
  if (!r.tracking.empty()) {
    out += "\ntracking (walking target during one round trip)\n";
    for (const auto& t : r.tracking) {
      out += fmt::format("  {:<20} rtt {:>8.1f} ms  moves {:.4f} m  {}\n", t.profile, t.rtt_ms,
                         t.displacement_m, t.feasible ? "feasible" : "infeasible");
    }
  }
  return out;
}

std::string format_csv(const TraceReport& r) {
  std::string out = "record,subject,metric,value\n";
  auto row = [&](std::string_view record, std::string_view subject, std::string_view metric,
                 const std::string& value) {
    out += fmt::format("{},{},{},{}\n", record, subject, metric, value);
  };
  row("run", r.scenario, "policy", std::string(to_string(r.policy)));
  row("run", r.scenario, "seed", std::to_string(r.seed));
  for (const auto& j : r.jobs) {
    row("job", j.job_id, "kind", std::string(to_string(j.kind)));
    row("job", j.job_id, "status", std::string(to_string(j.status)));
    row("job", j.job_id, "arrival_s", num(j.arrival_s));
    if (j.first_start_s) row("job", j.job_id, "first_start_s", num(*j.first_start_s));
    if (j.completion_s) row("job", j.job_id, "completion_s", num(*j.completion_s));
    if (j.jct_s) row("job", j.job_id, "jct_s", num(*j.jct_s));
    row("job", j.job_id, "executed_s", num(j.executed_s));
    row("job", j.job_id, "attained_service", num(j.attained_service));
    row("job", j.job_id, "preemptions", std::to_string(j.preemptions));
    row("job", j.job_id, "migrations", std::to_string(j.migrations));
    row("job", j.job_id, "promotions", std::to_string(j.promotions));
  }
  row("summary", "all", "completed", std::to_string(r.completed));
  row("summary", "all", "average_jct_s", num(r.average_jct_s));
  row("summary", "all", "dispatches", std::to_string(r.dispatches));
  row("summary", "all", "preemptions", std::to_string(r.preemptions));
  row("summary", "all", "migrations", std::to_string(r.migrations));
  row("summary", "all", "promotions", std::to_string(r.promotions));
  row("summary", "all", "demotions", std::to_string(r.demotions));
  row("summary", "all", "rollbacks", std::to_string(r.rollbacks.size()));
  row("summary", "all", "end_time_s", num(r.end_time_s));
  for (const auto& q : r.requests) {
    row("request", q.profile, "count", std::to_string(q.rtt_ms.count));
    row("request", q.profile, "expected_ms", num(q.profile_mean_ms));
    row("request", q.profile, "mean_ms", num(q.rtt_ms.mean));
    row("request", q.profile, "variance_ms2", num(q.rtt_ms.variance));
    row("request", q.profile, "p95_ms", num(q.rtt_ms.p95));
  }
  for (const auto& t : r.tracking) {
    row("tracking", t.profile, "rtt_ms", num(t.rtt_ms));
    row("tracking", t.profile, "displacement_m", num(t.displacement_m));
    row("tracking", t.profile, "feasible", t.feasible ? "1" : "0");
  }
  return out;
}

}  // namespace edgeoffload::sim
