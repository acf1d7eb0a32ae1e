#include "edgeoffload/placement/cluster_view.h"

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload {

void ClusterView::upsert(WorkerRecord record) {
  std::string id = record.id();
  workers_.insert_or_assign(std::move(id), std::move(record));
}

void ClusterView::erase(const std::string& worker_id) { workers_.erase(worker_id); }

const WorkerRecord* ClusterView::find(const std::string& worker_id) const {
  auto it = workers_.find(worker_id);
  return it == workers_.end() ? nullptr : &it->second;
}

WorkerRecord* ClusterView::find(const std::string& worker_id) {
  auto it = workers_.find(worker_id);
  return it == workers_.end() ? nullptr : &it->second;
}

ResourceVector ClusterView::total_capacity() const {
  ResourceVector total;
  for (const auto& [id, w] : workers_) total += w.descriptor.capacity;
  return total;
}

ResourceVector ClusterView::total_allocated() const {
  ResourceVector total;
  for (const auto& [id, w] : workers_) total += w.allocated;
  return total;
}

bool ClusterView::can_allocate(std::span<const Assignment> assignments) const {
  std::map<std::string, ResourceVector> extra;
  for (const auto& a : assignments) extra[a.worker_id] += a.resources;
  for (const auto& [id, demand] : extra) {
    const WorkerRecord* w = find(id);
    if (w == nullptr || !fits(w->allocated + demand, w->descriptor.capacity)) return false;
  }
  return true;
}

void ClusterView::allocate(const std::string& job_id, std::span<const Assignment> assignments) {
  if (!can_allocate(assignments)) {
    throw InternalError(fmt::format("allocation for job {} does not fit the cluster", job_id));
  }
  for (const auto& a : assignments) {
    WorkerRecord* w = find(a.worker_id);
    w->allocated += a.resources;
    w->running_jobs.insert(job_id);
  }
}

void ClusterView::release(const std::string& job_id, std::span<const Assignment> assignments) {
  for (const auto& a : assignments) {
    WorkerRecord* w = find(a.worker_id);
    if (w == nullptr) continue;
    w->allocated -= a.resources;
    w->running_jobs.erase(job_id);
  }
}

}  // namespace edgeoffload
