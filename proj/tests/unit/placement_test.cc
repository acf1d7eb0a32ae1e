#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "edgeoffload/placement/placement.h"

namespace edgeoffload {
namespace {

WorkerRecord make_worker(const std::string& id, ResourceVector cap, ResourceVector allocated = {},
                         std::set<std::string> tags = {}) {
  WorkerRecord w;
  w.descriptor.worker_id = id;
  w.descriptor.capacity = cap;
  w.descriptor.tags = std::move(tags);
  w.allocated = allocated;
  return w;
}

JobSpec make_job(const std::string& id, ResourceVector member, int gang, double skew = 0.0,
                 std::set<std::string> tags = {}) {
  JobSpec s;
  s.job_id = id;
  s.required = member;
  s.gang_size = gang;
  s.model.skewness = skew;
  s.locality_tags = std::move(tags);
  return s;
}

TEST(IntrusivenessTest, Examples) {
  auto w = make_worker("w", {.gpus = 2, .cpu_cores = 8}, {.gpus = 1, .cpu_cores = 2});
  EXPECT_DOUBLE_EQ(intrusiveness(w, {.gpus = 1, .cpu_cores = 4}), 1.0);  // max(2/2, 6/8)

  auto empty = make_worker("e", {.gpus = 2, .cpu_cores = 8});
  EXPECT_DOUBLE_EQ(intrusiveness(empty, {}), 0.0);

  auto half = make_worker("h", {.gpus = 2}, {.gpus = 1});
  EXPECT_DOUBLE_EQ(intrusiveness(half, {.gpus = 2}), 1.5);

  auto cpu_only = make_worker("c", {.cpu_cores = 8});
  EXPECT_TRUE(std::isinf(intrusiveness(cpu_only, {.gpus = 1})));
}

TEST(FeasibleWorkersTest, Examples) {
  ClusterView view;
  view.upsert(make_worker("w1", {.gpus = 2}));
  EXPECT_EQ(feasible_workers(make_job("j", {.gpus = 1}, 1), view),
            std::vector<std::string>{"w1"});

  ClusterView east;
  east.upsert(make_worker("w1", {.gpus = 2}, {}, {"lab-east"}));
  EXPECT_TRUE(feasible_workers(make_job("j", {.gpus = 1}, 1, 0.0, {"lab-west"}), east).empty());

  ClusterView tight;
  tight.upsert(make_worker("w1", {.gpus = 1, .cpu_cores = 2}));
  EXPECT_TRUE(feasible_workers(make_job("j", {.gpus = 1, .cpu_cores = 4}, 1), tight).empty());
}

TEST(PlaceGangTest, SplitsNonSkewedGangByMinLoad) {
  ClusterView view;
  view.upsert(make_worker("w1", {.gpus = 2}));
  view.upsert(make_worker("w2", {.gpus = 2}));
  auto plan = place_gang(make_job("j", {.gpus = 1}, 3), view, PlacementConfig{});
  ASSERT_TRUE(plan);
  EXPECT_FALSE(plan->consolidated);
  ASSERT_EQ(plan->assignments.size(), 3u);
  EXPECT_EQ(plan->assignments[0].worker_id, "w1");
  EXPECT_EQ(plan->assignments[1].worker_id, "w1");
  EXPECT_EQ(plan->assignments[2].worker_id, "w2");
}

TEST(PlaceGangTest, SkewedGangNeedsASingleWorker) {
  ModelProfile model;
  model.set_layers({1000, 10, 10});
  ASSERT_GT(model.skewness, 1.0);
  JobSpec job = make_job("j", {.gpus = 1}, 3);
  job.model = model;

  ClusterView two_by_two;
  two_by_two.upsert(make_worker("w1", {.gpus = 2}));
  two_by_two.upsert(make_worker("w2", {.gpus = 2}));
  EXPECT_FALSE(place_gang(job, two_by_two, PlacementConfig{}));

  ClusterView big;
  big.upsert(make_worker("w1", {.gpus = 2}));
  big.upsert(make_worker("w2", {.gpus = 4}));
  auto plan = place_gang(job, big, PlacementConfig{});
  ASSERT_TRUE(plan);
  EXPECT_TRUE(plan->consolidated);
  for (const auto& a : plan->assignments) EXPECT_EQ(a.worker_id, "w2");
  EXPECT_EQ(check_plan(*plan, job, big, PlacementConfig{}), "");
}

TEST(PlaceGangTest, PicksLessLoadedWorker) {
  ClusterView view;
  view.upsert(make_worker("a", {.gpus = 10}, {.gpus = 8}));
  view.upsert(make_worker("b", {.gpus = 10}, {.gpus = 2}));
  auto plan = place_gang(make_job("j", {.gpus = 1}, 1), view, PlacementConfig{});
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->assignments[0].worker_id, "b");
}

TEST(PlaceGangTest, AllOrNothing) {
  ClusterView view;
  view.upsert(make_worker("w1", {.gpus = 1}));
  view.upsert(make_worker("w2", {.gpus = 1}));
  EXPECT_FALSE(place_gang(make_job("j", {.gpus = 1}, 3), view, PlacementConfig{}));
}

// Exhaustive min-max-load search over every member-to-worker mapping.
std::optional<double> exhaustive_min_max_load(const JobSpec& job, const ClusterView& view) {
  std::vector<const WorkerRecord*> workers;
  for (const auto& [id, w] : view.workers()) workers.push_back(&w);
  const std::size_t n = workers.size();
  const int g = job.gang_size;
  std::size_t total = 1;
  for (int i = 0; i < g; ++i) total *= n;
  std::optional<double> best;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<int> count(n, 0);
    std::size_t c = code;
    for (int i = 0; i < g; ++i) {
      count[c % n]++;
      c /= n;
    }
    double worst = 0.0;
    bool ok = true;
    for (std::size_t w = 0; w < n && ok; ++w) {
      if (count[w] == 0) continue;
      const WorkerRecord& rec = *workers[w];
      for (const auto& t : job.locality_tags) {
        if (!rec.descriptor.tags.count(t)) ok = false;
      }
      ResourceVector demand = job.required * count[w];
      // Direct per-dimension evaluation, independent of intrusiveness().
      for (std::size_t d = 0; d < kNumDimensions && ok; ++d) {
        double used = rec.allocated[d] + demand[d];
        double cap = rec.descriptor.capacity[d];
        if (cap == 0.0) {
          if (used > 0.0) ok = false;
          continue;
        }
        if (used > cap + 1e-9) ok = false;
        worst = std::max(worst, used / cap);
      }
    }
    if (ok && (!best || worst < *best)) best = worst;
  }
  return best;
}

TEST(PlaceGangProperty, GreedyMatchesExhaustiveOnSmallInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> small(0, 4);
  const std::vector<std::string> tag_pool = {"east", "west"};
  int compared = 0;
  for (int iter = 0; iter < 5000; ++iter) {
    ClusterView view;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int w = 0; w < n; ++w) {
      ResourceVector cap{.gpus = double(small(rng)), .cpu_cores = double(2 * small(rng)),
                         .memory_mb = double(1024 * small(rng))};
      if (cap.is_zero()) cap.gpus = 1;
      ResourceVector alloc;
      for (std::size_t d = 0; d < 3; ++d) {
        alloc[d] = std::floor(cap[d] * std::uniform_real_distribution<double>(0, 1)(rng));
      }
      std::set<std::string> tags;
      for (const auto& t : tag_pool) {
        if (rng() % 2) tags.insert(t);
      }
      view.upsert(make_worker("w" + std::to_string(w), cap, alloc, tags));
    }
    ResourceVector member{.gpus = double(rng() % 2), .cpu_cores = double(rng() % 3),
                          .memory_mb = double(512 * (rng() % 3))};
    std::set<std::string> want;
    if (rng() % 4 == 0) want.insert(tag_pool[rng() % 2]);
    JobSpec job = make_job("j", member, 1 + static_cast<int>(rng() % 3), 0.0, want);

    auto plan = place_gang(job, view, PlacementConfig{});
    auto optimum = exhaustive_min_max_load(job, view);
    ASSERT_EQ(plan.has_value(), optimum.has_value()) << "iteration " << iter;
    if (!plan) continue;
    ++compared;
    EXPECT_EQ(check_plan(*plan, job, view, PlacementConfig{}), "");
    EXPECT_NEAR(plan_max_load(*plan, view), *optimum, 1e-12) << "iteration " << iter;
  }
  EXPECT_GT(compared, 1000);
}

TEST(PlaceGangProperty, ConsolidationSoundnessAndDeterminism) {
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 2000; ++iter) {
    ClusterView view;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int w = 0; w < n; ++w) {
      view.upsert(make_worker("w" + std::to_string(w),
                              {.gpus = double(1 + rng() % 4), .cpu_cores = double(1 + rng() % 8)}));
    }
    JobSpec job = make_job("j", {.gpus = 1, .cpu_cores = double(rng() % 3)},
                           1 + static_cast<int>(rng() % 4), (rng() % 3) * 0.75);
    PlacementConfig config;
    auto plan = place_gang(job, view, config);
    auto again = place_gang(job, view, config);
    EXPECT_EQ(plan, again);
    if (!plan) continue;
    EXPECT_EQ(check_plan(*plan, job, view, config), "");
    if (job.model.skewness > config.skew_threshold) {
      EXPECT_TRUE(plan->consolidated);
      for (const auto& a : plan->assignments) {
        EXPECT_EQ(a.worker_id, plan->assignments.front().worker_id);
      }
    }
  }
}

TEST(RoutingLoadTest, UsesReportedUtilization) {
  auto busy = make_worker("a", {.gpus = 1}, {.gpus = 1});
  auto idle = make_worker("b", {.gpus = 1}, {.gpus = 1});
  busy.reported_utilization = {0.9, 0.9, 0.9, 0, 0};
  idle.reported_utilization = {0.1, 0.1, 0.1, 0, 0};
  busy.allocated = {};
  idle.allocated = {};
  EXPECT_GT(routing_load(busy), routing_load(idle));
  EXPECT_DOUBLE_EQ(routing_load(idle), 0.1);
}

}  // namespace
}  // namespace edgeoffload
