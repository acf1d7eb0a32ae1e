#include "edgeoffload/cluster/control_plane.h"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "edgeoffload/domain/json_io.h"
#include "edgeoffload/placement/placement.h"
#include "edgeoffload/protocol/encoding.h"
#include "edgeoffload/protocol/net.h"

namespace edgeoffload::cluster {

using protocol::Message;
using protocol::MessageType;

std::vector<std::string> placement_workers(const std::vector<Assignment>& placement) {
  std::vector<std::string> out;
  for (const auto& a : placement) {
    if (std::find(out.begin(), out.end(), a.worker_id) == out.end()) out.push_back(a.worker_id);
  }
  return out;
}

void ControlPlaneConfig::validate() const {
  scheduler.validate();
  if (!(heartbeat_period_s > 0.0)) throw ConfigError("heartbeat_period_s must be > 0");
  if (miss_tolerance < 1) throw ConfigError("miss_tolerance must be >= 1");
}

ControlPlane::ControlPlane(ControlPlaneConfig config, CheckpointStore& store,
                           WorkerTransport& transport)
    : config_((config.validate(), std::move(config))),
      store_(store),
      transport_(transport),
      scheduler_(config_.scheduler) {}

namespace {

void sync_clock(Scheduler& s, double now) {
  if (now > s.now()) s.set_time(now);
}

}  // namespace

bool ControlPlane::is_alive(const std::string& worker_id) const {
  return scheduler_.cluster().contains(worker_id);
}

std::vector<std::string> ControlPlane::alive_workers() const {
  std::vector<std::string> out;
  for (const auto& [id, w] : scheduler_.cluster().workers()) out.push_back(id);
  return out;
}

std::optional<WorkerRecord> ControlPlane::worker(const std::string& worker_id) const {
  const WorkerRecord* w = scheduler_.cluster().find(worker_id);
  if (w == nullptr) return std::nullopt;
  WorkerRecord copy = *w;
  auto it = liveness_.find(worker_id);
  if (it != liveness_.end()) {
    copy.last_heartbeat = it->second.last_heartbeat;
    copy.reported_utilization = it->second.utilization;
  }
  copy.alive = true;
  return copy;
}

std::string ControlPlane::job_status(const std::string& job_id) const {
  const JobState* j = scheduler_.job(job_id);
  return j == nullptr ? "unknown" : std::string(to_string(j->status));
}

void ControlPlane::register_worker(const WorkerDescriptor& descriptor, double now) {
  descriptor.validate();
  sync_clock(scheduler_, now);
  const WorkerRecord* existing = scheduler_.cluster().find(descriptor.worker_id);
  if (existing != nullptr && existing->descriptor.capacity != descriptor.capacity) {
    handle_worker_loss(descriptor.worker_id);
  }
  scheduler_.add_worker(descriptor);
  liveness_[descriptor.worker_id].last_heartbeat = now;
  tick(now);
}

HeartbeatAck ControlPlane::heartbeat(const HeartbeatReport& report, double now) {
  sync_clock(scheduler_, now);
  HeartbeatAck ack;
  if (!is_alive(report.worker_id)) {
    ack.reregister = true;
    return ack;
  }
  const std::string& wid = report.worker_id;
  liveness_[wid] = Liveness{now, report.utilization};

  auto primary_is_me = [&](const JobState& j) {
    return !j.placement.empty() && j.placement.front().worker_id == wid;
  };
  for (const auto& [job_id, delta] : report.progress) {
    const JobState* j = scheduler_.job(job_id);
    if (j != nullptr && j->status == JobStatus::kRunning && primary_is_me(*j) && delta > 0.0) {
      scheduler_.on_progress(job_id, delta);
    }
  }
  for (const auto& job_id : report.completed) {
    const JobState* j = scheduler_.job(job_id);
    if (j == nullptr || j->status != JobStatus::kRunning || !primary_is_me(*j)) continue;
    auto others = placement_workers(j->placement);
    scheduler_.on_job_complete(job_id);
    discard_on(job_id, others, wid);
  }

  std::set<std::string> reported(report.running.begin(), report.running.end());
  for (const auto& job_id : report.running) {
    const JobState* j = scheduler_.job(job_id);
    bool expected = j != nullptr &&
                    (j->status == JobStatus::kRunning || j->status == JobStatus::kPreempting);
    if (expected) {
      auto ws = placement_workers(j->placement);
      expected = std::find(ws.begin(), ws.end(), wid) != ws.end();
    }
    if (!expected) ack.stop_jobs.push_back(job_id);
  }
  // Jobs we placed here that the worker no longer runs (it restarted). A
  // grace of one period covers a report built before a dispatch landed.
  std::vector<std::string> lost;
  if (const WorkerRecord* rec = scheduler_.cluster().find(wid)) {
    for (const auto& job_id : rec->running_jobs) {
      const JobState* j = scheduler_.job(job_id);
      if (j == nullptr || j->status != JobStatus::kRunning || reported.count(job_id)) continue;
      if (now - j->last_dispatch_time <= config_.heartbeat_period_s) continue;
      lost.push_back(job_id);
    }
  }
  for (const auto& job_id : lost) roll_back(job_id, wid);
  tick(now);
  return ack;
}

std::vector<std::string> ControlPlane::detect_failures(double now) {
  sync_clock(scheduler_, now);
  std::vector<std::string> dead;
  for (const auto& [id, w] : scheduler_.cluster().workers()) {
    auto it = liveness_.find(id);
    double last = it == liveness_.end() ? 0.0 : it->second.last_heartbeat;
    if (now - last > config_.dead_after_s()) dead.push_back(id);
  }
  for (const auto& id : dead) handle_worker_loss(id);
  if (!dead.empty()) tick(now);
  return dead;
}

void ControlPlane::mark_worker_dead(const std::string& worker_id, double now) {
  sync_clock(scheduler_, now);
  if (!is_alive(worker_id)) return;
  handle_worker_loss(worker_id);
  tick(now);
}

void ControlPlane::handle_worker_loss(const std::string& worker_id) {
  if (!is_alive(worker_id)) return;
  std::vector<std::string> affected = scheduler_.remove_worker(worker_id);
  liveness_.erase(worker_id);
  for (const auto& job_id : affected) {
    const JobState* j = scheduler_.job(job_id);
    if (j != nullptr && j->holds_resources()) roll_back(job_id, worker_id);
  }
}

void ControlPlane::roll_back(const std::string& job_id, const std::string& worker_id) {
  const JobState* j = scheduler_.job(job_id);
  double before = j->attained_service;
  auto others = placement_workers(j->placement);
  std::optional<CheckpointRecord> ckpt;
  try {
    ckpt = store_.latest(job_id);
  } catch (const CheckpointError&) {
    // An unreadable checkpoint is no better than none: start over.
  }
  scheduler_.requeue_after_failure(job_id, ckpt ? ckpt->attained_service : 0.0,
                                   ckpt ? ckpt->executed_time_s : 0.0);
  rollback_log_.push_back(RollbackEntry{job_id, worker_id, before,
                                        scheduler_.job(job_id)->attained_service,
                                        ckpt ? ckpt->version : 0});
  discard_on(job_id, others, worker_id);
}

void ControlPlane::submit(const JobSpec& spec, double now) {
  sync_clock(scheduler_, now);
  scheduler_.on_job_arrival(spec);
  tick(now);
}

void ControlPlane::tick(double now) {
  sync_clock(scheduler_, now);
  // A failed dispatch or a finished preemption changes the cluster, so keep
  // deciding until a pass produces nothing new to carry out.
  for (int round = 0; round < 32; ++round) {
    bool changed = false;
    for (const Action& a : scheduler_.schedule_pass()) {
      if (a.kind == ActionKind::kDispatch) {
        std::optional<CheckpointRecord> ckpt;
        if (a.resume) {
          try {
            ckpt = store_.latest(a.job_id);
          } catch (const CheckpointError&) {
          }
        }
        if (!start_job(a.job_id, a.placement, ckpt)) changed = true;
      } else if (a.kind == ActionKind::kPreempt) {
        preempt(a.job_id, now);
        changed = true;
      }
    }
    if (!changed) break;
  }
}

Message ControlPlane::call_worker(const std::string& worker_id, const Message& m) {
  const WorkerRecord* w = scheduler_.cluster().find(worker_id);
  if (w == nullptr) throw protocol::NetworkError(fmt::format("worker {} is gone", worker_id));
  Message reply = transport_.call(w->descriptor, m);
  protocol::throw_if_error(reply);
  return reply;
}

bool ControlPlane::start_job(const std::string& job_id, const std::vector<Assignment>& placement,
                             const std::optional<CheckpointRecord>& checkpoint) {
  const JobState* j = scheduler_.job(job_id);
  Json job_json = to_json(j->spec);
  auto workers = placement_workers(placement);
  for (const auto& w : workers) {
    int members = 0;
    ResourceVector resources;
    for (const auto& a : placement) {
      if (a.worker_id != w) continue;
      ++members;
      resources = resources + a.resources;
    }
    Json payload{{"job_id", job_id},
                 {"job", job_json},
                 {"members", members},
                 {"resources", to_json(resources)},
                 {"primary", w == workers.front()}};
    MessageType type = MessageType::kDispatch;
    if (checkpoint) {
      type = MessageType::kResume;
      payload["checkpoint"] = Json{{"version", checkpoint->version},
                                   {"executed_time_s", checkpoint->executed_time_s},
                                   {"blob", protocol::base64_encode(checkpoint->blob)}};
    }
    try {
      call_worker(w, protocol::make_message(type, protocol::next_message_id(), payload));
    } catch (const Error&) {
      handle_worker_loss(w);
      return false;
    }
  }
  return true;
}

std::optional<std::string> ControlPlane::stop_job(const std::string& job_id) {
  auto workers = placement_workers(scheduler_.job(job_id)->placement);
  std::optional<std::string> blob;
  for (const auto& w : workers) {
    bool primary = w == workers.front();
    Json payload{{"job_id", job_id}, {"discard", !primary}};
    try {
      Message reply =
          call_worker(w, protocol::make_message(MessageType::kPreempt,
                                                protocol::next_message_id(), payload));
      if (primary) {
        blob = protocol::base64_decode(reply.payload.value("blob", std::string()));
      }
    } catch (const Error&) {
      handle_worker_loss(w);
      return std::nullopt;
    }
  }
  return blob;
}

void ControlPlane::preempt(const std::string& job_id, double now) {
  const JobState* j = scheduler_.job(job_id);
  if (j == nullptr || j->status != JobStatus::kPreempting) return;
  CheckpointRecord record{job_id, j->checkpoint_version + 1, j->attained_service,
                          j->executed_time_s, {}, now};
  std::optional<std::string> blob = stop_job(job_id);
  if (!blob) return;
  record.blob = *blob;
  try {
    store_.write(record);
  } catch (const CheckpointError&) {
    // Keep the job where it is, restarted from the state just captured.
    scheduler_.abort_preemption(job_id);
    record.version = j->checkpoint_version;
    start_job(job_id, scheduler_.job(job_id)->placement, record);
    return;
  }
  scheduler_.on_checkpoint_done(job_id, record.version);
}

bool ControlPlane::checkpoint_and_migrate(const std::string& job_id, const PlacementPlan& to_plan,
                                          double now) {
  sync_clock(scheduler_, now);
  const JobState* j = scheduler_.job(job_id);
  if (j == nullptr || j->status != JobStatus::kRunning) {
    throw InternalError(fmt::format("cannot migrate job {}: not running", job_id));
  }
  ClusterView without = scheduler_.cluster();
  without.release(job_id, j->placement);
  std::string problem = check_plan(to_plan, j->spec, without, config_.scheduler.placement);
  if (!problem.empty()) {
    throw InternalError(fmt::format("migration plan for {} is invalid: {}", job_id, problem));
  }
  const std::vector<Assignment> from = j->placement;
  CheckpointRecord record{job_id, j->checkpoint_version + 1, j->attained_service,
                          j->executed_time_s, {}, now};
  std::optional<std::string> blob = stop_job(job_id);
  if (!blob) return false;
  record.blob = *blob;
  try {
    store_.write(record);
  } catch (const CheckpointError&) {
    record.version = scheduler_.job(job_id)->checkpoint_version;
    start_job(job_id, from, record);
    return false;
  }
  scheduler_.record_checkpoint(job_id, record.version);
  scheduler_.migrate(job_id, to_plan);
  return start_job(job_id, to_plan.assignments, record);
}

void ControlPlane::discard_on(const std::string& job_id, const std::vector<std::string>& workers,
                              const std::string& except) {
  for (const auto& w : workers) {
    if (w == except || !is_alive(w)) continue;
    try {
      call_worker(w, protocol::make_message(MessageType::kPreempt, protocol::next_message_id(),
                                            Json{{"job_id", job_id}, {"discard", true}}));
    } catch (const Error&) {
      // Liveness detection deals with a worker that stopped answering.
    }
  }
}

RouteTarget ControlPlane::route_inference(const std::string& model_name,
                                          const std::set<std::string>& exclude) const {
  std::optional<RouteTarget> best;
  double best_load = std::numeric_limits<double>::infinity();
  for (const auto& [id, j] : scheduler_.jobs()) {
    if (j.status != JobStatus::kRunning || j.spec.kind != JobKind::kServing) continue;
    if (j.spec.model.model_name != model_name) continue;
    for (const auto& w : placement_workers(j.placement)) {
      if (exclude.count(w)) continue;
      auto rec = worker(w);
      if (!rec) continue;
      double load = routing_load(*rec);
      if (!best || load < best_load || (load == best_load && w < best->worker_id)) {
        best = RouteTarget{w, rec->descriptor.address, id};
        best_load = load;
      }
    }
  }
  if (!best) {
    throw NoCapacityError(fmt::format("no running serving job for model '{}'", model_name));
  }
  return *best;
}

}  // namespace edgeoffload::cluster
