#include "edgeoffload/placement/placement.h"

#include <algorithm>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace edgeoffload {

namespace {

constexpr double kAdmitSlack = 1e-9;
constexpr double kTieSlack = 1e-12;

bool has_tags(const WorkerRecord& w, const std::set<std::string>& required) {
  return std::includes(w.descriptor.tags.begin(), w.descriptor.tags.end(), required.begin(),
                       required.end());
}

double score_with_extra(const WorkerRecord& w, const ResourceVector& extra,
                        const ResourceVector& demand) {
  WorkerRecord tmp = w;
  tmp.allocated += extra;
  return intrusiveness(tmp, demand);
}

bool admissible(const WorkerRecord& w, const ResourceVector& extra, const ResourceVector& demand,
                const std::set<std::string>& tags, double* score) {
  if (!has_tags(w, tags)) return false;
  if (!fits(w.allocated + extra + demand, w.descriptor.capacity)) return false;
  double s = score_with_extra(w, extra, demand);
  if (s > 1.0 + kAdmitSlack) return false;
  *score = s;
  return true;
}

}  // namespace

double intrusiveness(const WorkerRecord& worker, const ResourceVector& demand) {
  double worst = 0.0;
  const ResourceVector& cap = worker.descriptor.capacity;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    double used = worker.allocated[d] + demand[d];
    if (cap[d] > 0.0) {
      worst = std::max(worst, used / cap[d]);
    } else if (used > 0.0) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

double routing_load(const WorkerRecord& worker) {
  double worst = 0.0;
  const ResourceVector& cap = worker.descriptor.capacity;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    double frac = cap[d] > 0.0 ? worker.allocated[d] / cap[d] : 0.0;
    worst = std::max({worst, frac, worker.reported_utilization[d]});
  }
  return worst;
}

std::vector<std::string> feasible_workers(const JobSpec& job, const ClusterView& view) {
  std::vector<std::string> out;
  for (const auto& [id, w] : view.workers()) {
    double score = 0.0;
    if (w.alive && admissible(w, ResourceVector{}, job.required, job.locality_tags, &score)) {
      out.push_back(id);
    }
  }
  return out;
}

std::optional<PlacementPlan> place_gang(const JobSpec& job, const ClusterView& view,
                                        const PlacementConfig& config) {
  PlacementPlan plan;
  if (job.model.skewness > config.skew_threshold) {
    plan.consolidated = true;
    const ResourceVector whole = job.total_demand();
    const WorkerRecord* best = nullptr;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& [id, w] : view.workers()) {
      double score = 0.0;
      if (!w.alive || !admissible(w, ResourceVector{}, whole, job.locality_tags, &score)) continue;
      if (best == nullptr || score < best_score - kTieSlack) {
        best = &w;
        best_score = score;
      }
    }
    if (best == nullptr) return std::nullopt;
    plan.assignments.assign(static_cast<std::size_t>(job.gang_size),
                            Assignment{best->id(), job.required});
    return plan;
  }

  std::map<std::string, ResourceVector> extra;
  for (int member = 0; member < job.gang_size; ++member) {
    const WorkerRecord* best = nullptr;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& [id, w] : view.workers()) {
      double score = 0.0;
      if (!w.alive || !admissible(w, extra[id], job.required, job.locality_tags, &score)) continue;
      if (best == nullptr || score < best_score - kTieSlack) {
        best = &w;
        best_score = score;
      }
    }
    if (best == nullptr) return std::nullopt;
    extra[best->id()] += job.required;
    plan.assignments.push_back(Assignment{best->id(), job.required});
  }
  std::stable_sort(plan.assignments.begin(), plan.assignments.end(),
                   [](const Assignment& a, const Assignment& b) { return a.worker_id < b.worker_id; });
  return plan;
}

std::string check_plan(const PlacementPlan& plan, const JobSpec& job, const ClusterView& view,
                       const PlacementConfig& config) {
  if (plan.assignments.size() != static_cast<std::size_t>(job.gang_size)) {
    return fmt::format("plan has {} assignments for gang of {}", plan.assignments.size(),
                       job.gang_size);
  }
  std::map<std::string, ResourceVector> per_worker;
  for (const auto& a : plan.assignments) {
    if (!(a.resources == job.required)) return "assignment does not carry the member demand";
    per_worker[a.worker_id] += a.resources;
  }
  for (const auto& [id, demand] : per_worker) {
    const WorkerRecord* w = view.find(id);
    if (w == nullptr) return fmt::format("unknown worker {}", id);
    if (!has_tags(*w, job.locality_tags)) return fmt::format("worker {} lacks locality tags", id);
    if (!fits(w->allocated + demand, w->descriptor.capacity)) {
      return fmt::format("worker {} over capacity", id);
    }
  }
  if (plan.consolidated && per_worker.size() != 1) return "consolidated plan spans workers";
  if (job.model.skewness > config.skew_threshold && per_worker.size() != 1) {
    return "skewed model split across workers";
  }
  return {};
}

double plan_max_load(const PlacementPlan& plan, const ClusterView& view) {
  std::map<std::string, ResourceVector> per_worker;
  for (const auto& a : plan.assignments) per_worker[a.worker_id] += a.resources;
  double worst = 0.0;
  for (const auto& [id, demand] : per_worker) {
    const WorkerRecord* w = view.find(id);
    if (w == nullptr) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, intrusiveness(*w, demand));
  }
  return worst;
}

}  // namespace edgeoffload
