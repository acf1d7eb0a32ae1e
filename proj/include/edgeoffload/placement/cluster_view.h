#pragma once

#include <map>
#include <span>
#include <string>

#include "edgeoffload/domain/job.h"
#include "edgeoffload/domain/worker.h"

namespace edgeoffload {

// Worker records keyed (and therefore iterated) by worker id. Placement reads
// it; the scheduler owns one and keeps `allocated` equal to the sum of the
// assignments of the jobs holding resources on each worker.
class ClusterView {
 public:
  void upsert(WorkerRecord record);
  void erase(const std::string& worker_id);

  const WorkerRecord* find(const std::string& worker_id) const;
  WorkerRecord* find(const std::string& worker_id);
  bool contains(const std::string& worker_id) const { return find(worker_id) != nullptr; }
  bool empty() const { return workers_.empty(); }
  std::size_t size() const { return workers_.size(); }

  const std::map<std::string, WorkerRecord>& workers() const { return workers_; }

  ResourceVector total_capacity() const;
  ResourceVector total_allocated() const;

  bool can_allocate(std::span<const Assignment> assignments) const;
  // Throws InternalError if an assignment names an unknown worker or exceeds
  // its free capacity; nothing is changed in that case.
  void allocate(const std::string& job_id, std::span<const Assignment> assignments);
  // Assignments on workers no longer in the view are skipped.
  void release(const std::string& job_id, std::span<const Assignment> assignments);

 private:
  std::map<std::string, WorkerRecord> workers_;
};

}  // namespace edgeoffload
