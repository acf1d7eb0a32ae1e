#include "edgeoffload/cluster/executor.h"

#include <algorithm>
#include <chrono>
#include <thread>

#include <fmt/format.h>

#include "edgeoffload/protocol/encoding.h"

namespace edgeoffload::cluster {

double monotonic_s() {
  using Clock = std::chrono::steady_clock;
  static const Clock::time_point origin = Clock::now();
  return std::chrono::duration<double>(Clock::now() - origin).count();
}

namespace {

double duration_from_args(const std::string& args) {
  if (args.empty()) return 0.0;
  Json j = Json::parse(args, nullptr, false);
  if (!j.is_object()) return 0.0;
  auto it = j.find("duration_s");
  return it != j.end() && it->is_number() ? std::max(0.0, it->get<double>()) : 0.0;
}

Json canned_detections() {
  return Json{{"detections",
               Json::array({Json{{"label", "person"},
                                 {"score", 0.91},
                                 {"box", Json::array({0.12, 0.30, 0.58, 0.71})}},
                            Json{{"label", "bicycle"},
                                 {"score", 0.77},
                                 {"box", Json::array({0.40, 0.22, 0.88, 0.64})}}})}};
}

}  // namespace

SyntheticExecutor::SyntheticExecutor(ProfileCatalog catalog, ResourceVector capacity,
                                     double jitter_fraction, std::uint64_t seed)
    : catalog_(std::move(catalog)),
      capacity_(capacity),
      device_(capacity.gpus > 0.0 ? Device::kGpu : Device::kCpu),
      jitter_fraction_(jitter_fraction),
      rng_(seed) {
  if (jitter_fraction_ < 0.0 || jitter_fraction_ >= 1.0) {
    throw ConfigError("jitter fraction must be in [0, 1)");
  }
}

double SyntheticExecutor::executed(const Task& t, double now) const {
  double e = t.base_s + std::max(0.0, now - t.started_at);
  return t.duration_s > 0.0 ? std::min(e, t.duration_s) : e;
}

void SyntheticExecutor::start(const DispatchCommand& command, double now) {
  std::lock_guard lock(mu_);
  if (tasks_.count(command.job_id)) return;
  Task t;
  t.command = command;
  t.started_at = now;
  t.base_s = command.executed_time_s;
  if (command.blob && !command.blob->empty()) {
    Json saved = Json::parse(*command.blob, nullptr, false);
    if (saved.is_object() && saved.contains("executed_s") && saved["executed_s"].is_number()) {
      t.base_s = saved["executed_s"].get<double>();
    }
  }
  t.reported_s = t.base_s;
  if (command.job.kind == JobKind::kTraining && command.primary) {
    t.duration_s = duration_from_args(command.job.executor_args);
  }
  finished_.erase(command.job_id);
  tasks_.emplace(command.job_id, std::move(t));
}

std::string SyntheticExecutor::stop(const std::string& job_id, double now) {
  std::lock_guard lock(mu_);
  auto it = tasks_.find(job_id);
  if (it == tasks_.end()) return {};
  Json blob{{"job_id", job_id}, {"executed_s", executed(it->second, now)}};
  tasks_.erase(it);
  return blob.dump();
}

bool SyntheticExecutor::running(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  return tasks_.count(job_id) > 0;
}

void SyntheticExecutor::finish_due(double now) {
  for (auto it = tasks_.begin(); it != tasks_.end();) {
    const Task& t = it->second;
    if (t.duration_s > 0.0 && executed(t, now) >= t.duration_s) {
      finished_[it->first] += t.duration_s - t.reported_s;
      it = tasks_.erase(it);
    } else {
      ++it;
    }
  }
}

ExecutorReport SyntheticExecutor::report(double now) {
  std::lock_guard lock(mu_);
  finish_due(now);
  ExecutorReport r;
  ResourceVector allocated;
  for (const auto& [id, t] : tasks_) {
    allocated += t.command.resources;
    r.running.push_back(id);
    double delta = executed(t, now) - t.reported_s;
    if (delta > 0.0) r.progress[id] = delta;
  }
  for (const auto& [id, tail] : finished_) {
    if (tail > 0.0) r.progress[id] = tail;
    r.completed.push_back(id);
  }
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    r.utilization[d] = capacity_[d] > 0.0 ? std::min(1.0, allocated[d] / capacity_[d]) : 0.0;
  }
  return r;
}

void SyntheticExecutor::acknowledge(const ExecutorReport& sent) {
  std::lock_guard lock(mu_);
  for (const auto& [id, delta] : sent.progress) {
    auto t = tasks_.find(id);
    if (t != tasks_.end()) t->second.reported_s += delta;
  }
  for (const auto& id : sent.completed) finished_.erase(id);
}

InferenceResult SyntheticExecutor::infer(const std::string& model_name, std::string_view data) {
  using Ms = std::chrono::duration<double, std::milli>;
  auto arrived = std::chrono::steady_clock::now();
  InferenceResult out;
  double sleep_ms = 0.0;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, t] : tasks_) {
      if (t.command.job.kind == JobKind::kServing && t.command.job.model.model_name == model_name) {
        out.job_id = id;
        break;
      }
    }
    if (out.job_id.empty()) {
      throw NoCapacityError(fmt::format("no serving job for model '{}' on this worker", model_name));
    }
    const ModelProfile* profile = catalog_.find(model_name);
    auto base = profile == nullptr ? std::nullopt : profile->service_time(Site::kOnPrem, device_);
    if (!base) {
      throw NoCapacityError(fmt::format("no on-prem {} profile for model '{}'",
                                        to_string(device_), model_name));
    }
    double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    sleep_ms = *base * (1.0 + jitter_fraction_ * u);
  }
  auto start = std::chrono::steady_clock::now();
  out.queue_ms = Ms(start - arrived).count();
  out.digest = protocol::sha256_hex(data);
  out.bytes = data.size();
  auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              Ms(sleep_ms));
  std::this_thread::sleep_until(deadline);
  out.service_ms = Ms(std::chrono::steady_clock::now() - start).count();
  out.result = canned_detections();
  return out;
}

}  // namespace edgeoffload::cluster
