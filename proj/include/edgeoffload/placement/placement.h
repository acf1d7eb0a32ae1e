#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgeoffload/domain/job.h"
#include "edgeoffload/domain/worker.h"
#include "edgeoffload/placement/cluster_view.h"

namespace edgeoffload {

struct PlacementConfig {
  // Models whose layer-size coefficient of variation exceeds this are only
  // ever placed on a single worker.
  double skew_threshold = 1.0;
};

struct PlacementPlan {
  std::vector<Assignment> assignments;  // sorted by worker id
  bool consolidated = false;

  bool operator==(const PlacementPlan&) const = default;
};

// max_d (allocated_d + demand_d) / capacity_d. A dimension with zero capacity
// and nonzero demand scores +inf; a score above 1 means the worker cannot
// admit the demand.
double intrusiveness(const WorkerRecord& worker, const ResourceVector& demand);

// Current load used to rank workers for inference routing: the larger of the
// allocated fraction and the worker's own utilization report, per dimension.
double routing_load(const WorkerRecord& worker);

// Workers that can take one gang member: the demand fits the free capacity,
// the worker carries every locality tag, and intrusiveness stays <= 1.
std::vector<std::string> feasible_workers(const JobSpec& job, const ClusterView& view);

// Gang placement, all or nothing. Skewed models get a single-worker plan;
// otherwise each member goes to the worker with the lowest intrusiveness after
// taking it, ties broken by worker id.
std::optional<PlacementPlan> place_gang(const JobSpec& job, const ClusterView& view,
                                        const PlacementConfig& config);

// Independent re-check of the plan invariants against `view`. Returns an empty
// string when valid, otherwise a description of the first violation.
std::string check_plan(const PlacementPlan& plan, const JobSpec& job, const ClusterView& view,
                       const PlacementConfig& config);

// Highest post-assignment intrusiveness over the workers a plan touches.
double plan_max_load(const PlacementPlan& plan, const ClusterView& view);

}  // namespace edgeoffload
