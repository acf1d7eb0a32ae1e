#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "edgeoffload/common/error.h"
#include "edgeoffload/scheduler/scheduler.h"

namespace edgeoffload {
namespace {

const ResourceVector kFullWorker{.gpus = 1, .cpu_cores = 4, .memory_mb = 4096};

WorkerDescriptor worker(const std::string& id, ResourceVector cap) {
  WorkerDescriptor d;
  d.worker_id = id;
  d.capacity = cap;
  return d;
}

JobSpec job(const std::string& id, ResourceVector member, double arrival = 0.0, int gang = 1) {
  JobSpec s;
  s.job_id = id;
  s.required = member;
  s.gang_size = gang;
  s.arrival_time = arrival;
  return s;
}

SchedulerConfig zero_overhead(double demotion = 20.0) {
  SchedulerConfig c;
  c.demotion_threshold = demotion;
  c.checkpoint_overhead_s = 0.0;
  return c;
}

std::vector<ActionKind> kinds(const std::vector<Action>& actions) {
  std::vector<ActionKind> out;
  for (const auto& a : actions) out.push_back(a.kind);
  return out;
}

void expect_invariants(const Scheduler& s) {
  auto problems = s.check_invariants();
  for (const auto& p : problems) ADD_FAILURE() << p;
}

TEST(AttainedServiceTest, Examples) {
  JobState fresh;
  fresh.spec = job("j", {.gpus = 2, .cpu_cores = 4, .memory_mb = 16384});
  ResourceVector cap{.gpus = 4, .cpu_cores = 16, .memory_mb = 65536};
  EXPECT_DOUBLE_EQ(attained_service(fresh, cap, ResourceWeights{}), 0.0);
  fresh.executed_time_s = 100;
  EXPECT_DOUBLE_EQ(attained_service(fresh, cap, ResourceWeights{}), 37.5);

  JobState whole;
  whole.spec = job("k", cap);
  whole.executed_time_s = 20;
  EXPECT_DOUBLE_EQ(attained_service(whole, cap, ResourceWeights{}), 20.0);
}

TEST(SchedulerConfigTest, Validation) {
  SchedulerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.num_queues = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SchedulerConfig{};
  c.demotion_threshold = 0;
  EXPECT_THROW(Scheduler{c}, ConfigError);
  c = SchedulerConfig{};
  c.promotion_wait_threshold_s = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ArrivalTest, DispatchesIntoEmptyClusterSameTick) {
  Scheduler s(zero_overhead());
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("J", kFullWorker));
  EXPECT_EQ(s.job("J")->attained_service, 0.0);
  EXPECT_EQ(s.job("J")->queue_level, QueueLevel::kQ1);
  auto actions = s.schedule_pass();
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, ActionKind::kDispatch);
  EXPECT_EQ(actions[0].job_id, "J");
  EXPECT_FALSE(actions[0].resume);
  EXPECT_EQ(s.job("J")->status, JobStatus::kRunning);
  expect_invariants(s);
}

TEST(ArrivalTest, TieBreakByArrivalTime) {
  SchedulerConfig c = zero_overhead();
  c.reference_capacity = kFullWorker;
  Scheduler s(c);  // no workers yet, so nothing dispatches
  s.on_job_arrival(job("B", kFullWorker, 0.0));
  s.set_time(1.0);
  s.on_job_arrival(job("A", kFullWorker, 1.0));
  s.schedule_pass();
  EXPECT_EQ(s.queue(QueueLevel::kQ1), (std::vector<std::string>{"B", "A"}));
  expect_invariants(s);
}

TEST(ArrivalTest, RejectsInfeasibleAndDuplicateJobs) {
  Scheduler s(zero_overhead());
  s.add_worker(worker("w1", {.gpus = 2}));
  EXPECT_THROW(s.on_job_arrival(job("big", {.gpus = 1}, 0, 3)), SubmissionError);
  s.on_job_arrival(job("ok", {.gpus = 1}));
  EXPECT_THROW(s.on_job_arrival(job("ok", {.gpus = 1})), SubmissionError);
  EXPECT_THROW(s.on_job_arrival(job("", {.gpus = 1})), SubmissionError);
}

TEST(ScheduleTest, GangWaitsWhenNotEnoughFree) {
  Scheduler s(zero_overhead());
  s.add_worker(worker("w1", {.gpus = 2}));
  s.add_worker(worker("w2", {.gpus = 2}));
  s.on_job_arrival(job("small", {.gpus = 1}, 0, 2));
  s.schedule_pass();
  s.on_job_arrival(job("gang", {.gpus = 1}, 0, 3));
  auto actions = s.schedule_pass();
  EXPECT_TRUE(actions.empty());
  EXPECT_EQ(s.job("gang")->status, JobStatus::kQueued);
  EXPECT_TRUE(s.job("gang")->placement.empty());
  expect_invariants(s);
}

// Hand event trace on one single-GPU worker, demotion threshold 20, no
// checkpoint overhead: B (100 s of work) arrives at 0, A (10 s) at 5.
//   t=0   B dispatched
//   t=5   A queued behind running Q1 job B, nothing to preempt
//   t=20  B's service reaches 20 -> demoted, preempted for A
//   t=20  checkpoint done -> A dispatched
//   t=30  A completes -> B resumes
//   t=110 B completes
// JCT A = 25, B = 110, average 67.5.
TEST(ScheduleTest, AbTraceMatchesHandOracle) {
  Scheduler s(zero_overhead(20.0));
  s.add_worker(worker("w1", kFullWorker));

  s.on_job_arrival(job("B", kFullWorker, 0.0));
  auto a0 = s.schedule_pass();
  ASSERT_EQ(kinds(a0), std::vector<ActionKind>{ActionKind::kDispatch});

  s.advance_to(5.0);
  s.on_job_arrival(job("A", kFullWorker, 5.0));
  EXPECT_TRUE(s.schedule_pass().empty());
  EXPECT_DOUBLE_EQ(s.job("B")->attained_service, 5.0);
  ASSERT_TRUE(s.next_deadline());
  EXPECT_DOUBLE_EQ(*s.next_deadline(), 20.0);

  s.advance_to(20.0);
  auto a20 = s.schedule_pass();
  ASSERT_EQ(kinds(a20), (std::vector<ActionKind>{ActionKind::kDemote, ActionKind::kPreempt}));
  EXPECT_EQ(a20[1].job_id, "B");
  EXPECT_EQ(a20[1].for_job, "A");
  EXPECT_EQ(s.job("B")->status, JobStatus::kPreempting);
  expect_invariants(s);

  s.on_checkpoint_done("B", 1);
  auto a20b = s.schedule_pass();
  ASSERT_EQ(kinds(a20b), std::vector<ActionKind>{ActionKind::kDispatch});
  EXPECT_EQ(a20b[0].job_id, "A");
  EXPECT_EQ(s.queue(QueueLevel::kQ2), std::vector<std::string>{"B"});

  s.advance_to(30.0);
  s.on_job_complete("A");
  auto a30 = s.schedule_pass();
  ASSERT_EQ(kinds(a30), std::vector<ActionKind>{ActionKind::kDispatch});
  EXPECT_EQ(a30[0].job_id, "B");
  EXPECT_TRUE(a30[0].resume);

  s.advance_to(110.0);
  EXPECT_DOUBLE_EQ(s.job("B")->executed_time_s, 100.0);
  s.on_job_complete("B");
  expect_invariants(s);

  double jct_a = *s.job("A")->completion_time - 5.0;
  double jct_b = *s.job("B")->completion_time - 0.0;
  EXPECT_DOUBLE_EQ(jct_a, 25.0);
  EXPECT_DOUBLE_EQ(jct_b, 110.0);
  EXPECT_DOUBLE_EQ((jct_a + jct_b) / 2, 67.5);
}

TEST(ScheduleTest, CheckpointOverheadHoldsResourcesUntilDone) {
  SchedulerConfig c = zero_overhead(20.0);
  c.checkpoint_overhead_s = 2.0;
  Scheduler s(c);
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("B", kFullWorker, 0.0));
  s.schedule_pass();
  s.advance_to(5.0);
  s.on_job_arrival(job("A", kFullWorker, 5.0));
  s.schedule_pass();
  s.advance_to(20.0);
  ASSERT_EQ(kinds(s.schedule_pass()),
            (std::vector<ActionKind>{ActionKind::kDemote, ActionKind::kPreempt}));
  // A later pass while B is still checkpointing must not pick more victims.
  s.advance_to(21.0);
  EXPECT_TRUE(s.schedule_pass().empty());
  EXPECT_DOUBLE_EQ(s.job("B")->executed_time_s, 20.0);  // no service while preempting
  s.advance_to(22.0);
  s.on_checkpoint_done("B", 1);
  auto actions = s.schedule_pass();
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].job_id, "A");
  expect_invariants(s);
}

TEST(ProgressTest, AccruesServiceAtNormalizedRate) {
  SchedulerConfig c = zero_overhead(1000);
  Scheduler s(c);
  s.add_worker(worker("w1", {.gpus = 2, .cpu_cores = 8, .memory_mb = 8192}));
  s.on_job_arrival(job("J", {.gpus = 1, .cpu_cores = 4, .memory_mb = 4096}));
  s.schedule_pass();
  s.on_progress("J", 10.0);
  EXPECT_DOUBLE_EQ(s.job("J")->attained_service, 5.0);
  EXPECT_DOUBLE_EQ(s.job("J")->executed_time_s, 10.0);
}

TEST(ProgressTest, ProgressOnNonRunningJobIsInternalError) {
  Scheduler s(zero_overhead());
  s.on_job_arrival(job("J", {.gpus = 1}));
  EXPECT_THROW(s.on_progress("J", 1.0), InternalError);
  EXPECT_THROW(s.on_progress("nope", 1.0), InternalError);
}

TEST(ProgressTest, CompletionFreesResourcesForQueuedJob) {
  Scheduler s(zero_overhead(1000));
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("first", kFullWorker));
  s.on_job_arrival(job("second", kFullWorker));
  EXPECT_EQ(s.schedule_pass().size(), 1u);
  s.advance_to(3.0);
  s.on_job_complete("first");
  auto actions = s.schedule_pass();
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].job_id, "second");
  expect_invariants(s);
}

TEST(ProgressTest, ThresholdCrossingMidRunDemotesInNextPass) {
  Scheduler s(zero_overhead(10.0));
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("J", kFullWorker));
  s.schedule_pass();
  s.advance_to(9.0);
  EXPECT_TRUE(s.schedule_pass().empty());
  s.advance_to(12.5);  // crossed at t=10 between passes
  auto actions = s.schedule_pass();
  ASSERT_EQ(kinds(actions), std::vector<ActionKind>{ActionKind::kDemote});
  EXPECT_EQ(s.job("J")->queue_level, QueueLevel::kQ2);
  EXPECT_EQ(s.job("J")->status, JobStatus::kRunning);  // demoted in place
}

TEST(PromotionTest, StarvedJobReturnsToQ1AndStays) {
  SchedulerConfig c = zero_overhead(5.0);
  c.promotion_wait_threshold_s = 50.0;
  Scheduler s(c);
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("long", kFullWorker, 0.0));
  s.schedule_pass();
  s.advance_to(5.0);
  s.on_job_arrival(job("hog", kFullWorker, 5.0));
  auto a = s.schedule_pass();  // long demoted and preempted for hog
  ASSERT_EQ(kinds(a), (std::vector<ActionKind>{ActionKind::kDemote, ActionKind::kPreempt}));
  s.on_checkpoint_done("long", 1);
  s.schedule_pass();  // hog runs
  EXPECT_EQ(s.job("hog")->status, JobStatus::kRunning);
  // hog is demoted at 10 but nothing preempts it; long waits in Q2.
  s.advance_to(10.0);
  s.schedule_pass();
  ASSERT_EQ(s.next_deadline(), std::optional<double>(55.0));
  s.advance_to(55.0);
  auto promo = s.schedule_pass();
  ASSERT_FALSE(promo.empty());
  EXPECT_EQ(promo[0].kind, ActionKind::kPromote);
  EXPECT_EQ(promo[0].job_id, "long");
  // Back in Q1 it preempts the Q2 hog.
  ASSERT_EQ(promo.size(), 2u);
  EXPECT_EQ(promo[1].kind, ActionKind::kPreempt);
  EXPECT_EQ(promo[1].job_id, "hog");
  EXPECT_EQ(s.job("long")->queue_level, QueueLevel::kQ1);
  expect_invariants(s);
  // The promoted job is not pushed straight back to Q2 by the next pass.
  s.on_checkpoint_done("hog", 1);
  s.schedule_pass();
  EXPECT_EQ(s.job("long")->queue_level, QueueLevel::kQ1);
  EXPECT_EQ(s.job("long")->status, JobStatus::kRunning);
}

TEST(PreemptionTest, OnlyCandidateIsChosen) {
  Scheduler s(zero_overhead(1.0));
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("v", kFullWorker));
  s.schedule_pass();
  s.advance_to(2.0);
  s.schedule_pass();  // v demoted
  s.on_job_arrival(job("p", kFullWorker, 2.0));
  auto victims = s.select_preemption_victims(*s.job("p"), s.cluster());
  ASSERT_TRUE(victims);
  EXPECT_EQ(*victims, std::vector<std::string>{"v"});
}

TEST(PreemptionTest, PrefersHighestServiceWhenEitherSuffices) {
  Scheduler s(zero_overhead(1.0));
  s.add_worker(worker("w1", kFullWorker));
  s.add_worker(worker("w2", kFullWorker));
  s.on_job_arrival(job("v50", kFullWorker));
  s.on_job_arrival(job("v80", kFullWorker));
  s.schedule_pass();
  s.on_progress("v50", 25.0);  // rate 0.5 on a two-worker cluster
  s.on_progress("v80", 40.0);
  s.schedule_pass();
  ASSERT_DOUBLE_EQ(s.job("v50")->attained_service, 12.5);
  ASSERT_DOUBLE_EQ(s.job("v80")->attained_service, 20.0);
  s.on_job_arrival(job("p", kFullWorker));
  auto victims = s.select_preemption_victims(*s.job("p"), s.cluster());
  ASSERT_TRUE(victims);
  EXPECT_EQ(*victims, std::vector<std::string>{"v80"});
}

TEST(PreemptionTest, NoQ2JobsMeansNoPreemption) {
  Scheduler s(zero_overhead(1000));
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("q1", kFullWorker));
  s.schedule_pass();
  s.on_job_arrival(job("p", kFullWorker));
  EXPECT_FALSE(s.select_preemption_victims(*s.job("p"), s.cluster()));
  EXPECT_TRUE(s.schedule_pass().empty());  // Q1 never preempts Q1
}

// Exhaustive-subset oracle: smallest sufficient set, ties resolved by
// comparing the members' (service desc, id asc) keys lexicographically.
std::optional<std::vector<std::string>> oracle_victims(const Scheduler& s, const JobState& pending) {
  std::vector<const JobState*> cands;
  for (const auto& [id, j] : s.jobs()) {
    if (j.status == JobStatus::kRunning && j.queue_level == QueueLevel::kQ2) cands.push_back(&j);
  }
  using Key = std::vector<std::pair<double, std::string>>;
  std::optional<std::pair<std::size_t, Key>> best;
  std::vector<std::string> best_ids;
  for (unsigned mask = 1; mask < (1u << cands.size()); ++mask) {
    ClusterView view = s.cluster();
    Key key;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!(mask & (1u << i))) continue;
      view.release(cands[i]->spec.job_id, cands[i]->placement);
      key.emplace_back(-cands[i]->attained_service, cands[i]->spec.job_id);
      ids.push_back(cands[i]->spec.job_id);
    }
    if (!place_gang(pending.spec, view, s.config().placement)) continue;
    std::sort(key.begin(), key.end());
    std::pair<std::size_t, Key> cand{ids.size(), key};
    if (!best || cand < *best) {
      best = cand;
      std::vector<std::string> ordered;
      for (const auto& k : key) ordered.push_back(k.second);
      best_ids = ordered;
    }
  }
  if (!best) return std::nullopt;
  return best_ids;
}

TEST(PreemptionProperty, MatchesExhaustiveSubsetOracle) {
  std::mt19937_64 rng(31337);
  int checked = 0;
  for (int iter = 0; iter < 400; ++iter) {
    Scheduler s(zero_overhead(1.0));
    const int workers = 1 + static_cast<int>(rng() % 3);
    for (int w = 0; w < workers; ++w) {
      s.add_worker(worker("w" + std::to_string(w), {.gpus = double(1 + rng() % 3), .cpu_cores = 8,
                                                    .memory_mb = 8192}));
    }
    const int running = 1 + static_cast<int>(rng() % 4);
    for (int j = 0; j < running; ++j) {
      s.on_job_arrival(job("r" + std::to_string(j), {.gpus = 1, .cpu_cores = 1}));
    }
    s.schedule_pass();
    for (const auto& [id, st] : std::map<std::string, JobState>(s.jobs())) {
      if (st.status == JobStatus::kRunning) {
        s.on_progress(id, double(1 + rng() % 50));
      }
    }
    s.schedule_pass();  // demotes everything that ran
    JobSpec p = job("p", {.gpus = double(1 + rng() % 3), .cpu_cores = 1}, 0.0,
                    1 + static_cast<int>(rng() % 2));
    try {
      s.on_job_arrival(p);
    } catch (const SubmissionError&) {
      continue;
    }
    const JobState& pending = *s.job("p");
    auto got = s.select_preemption_victims(pending, s.cluster());
    auto want = oracle_victims(s, pending);
    ASSERT_EQ(got.has_value(), want.has_value()) << "iteration " << iter;
    if (got) {
      EXPECT_EQ(*got, *want) << "iteration " << iter;
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(FailureTest, RequeueRollsBackButNeverIncreases) {
  Scheduler s(zero_overhead(1000));
  s.add_worker(worker("w1", kFullWorker));
  s.on_job_arrival(job("J", kFullWorker));
  s.schedule_pass();
  s.on_progress("J", 50);
  auto affected = s.remove_worker("w1");
  ASSERT_EQ(affected, std::vector<std::string>{"J"});
  s.requeue_after_failure("J", 30, 30);
  EXPECT_DOUBLE_EQ(s.job("J")->attained_service, 30);
  EXPECT_EQ(s.job("J")->status, JobStatus::kQueued);
  EXPECT_TRUE(s.schedule_pass().empty());  // nowhere to run
  expect_invariants(s);
}

TEST(FailureTest, RollbackBelowThresholdReturnsToQ1) {
  Scheduler s(zero_overhead(10));
  s.add_worker(worker("w1", kFullWorker));
  s.add_worker(worker("w2", kFullWorker));
  s.on_job_arrival(job("J", kFullWorker));
  s.schedule_pass();
  s.on_progress("J", 30);  // rate 0.5 -> 15
  s.schedule_pass();
  ASSERT_EQ(s.job("J")->queue_level, QueueLevel::kQ2);
  std::string where = s.job("J")->placement[0].worker_id;
  s.remove_worker(where);
  s.requeue_after_failure("J", 5, 10);
  EXPECT_EQ(s.job("J")->queue_level, QueueLevel::kQ1);
  auto actions = s.schedule_pass();
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_TRUE(actions[0].resume);
}

TEST(MigrationTest, PreservesAccounting) {
  Scheduler s(zero_overhead(1000));
  s.add_worker(worker("w1", kFullWorker));
  s.add_worker(worker("w2", kFullWorker));
  s.on_job_arrival(job("J", kFullWorker));
  s.schedule_pass();
  s.on_progress("J", 7);
  std::string from = s.job("J")->placement[0].worker_id;
  std::string to = from == "w1" ? "w2" : "w1";
  PlacementPlan plan{{Assignment{to, kFullWorker}}, false};
  double service = s.job("J")->attained_service;
  s.migrate("J", plan);
  EXPECT_EQ(s.job("J")->placement[0].worker_id, to);
  EXPECT_DOUBLE_EQ(s.job("J")->executed_time_s, 7);
  EXPECT_DOUBLE_EQ(s.job("J")->attained_service, service);
  EXPECT_EQ(s.job("J")->migrations, 1);
  expect_invariants(s);
}

TEST(DeterminismTest, SameEventsSameActions) {
  auto run = [] {
    Scheduler s(zero_overhead(3));
    s.add_worker(worker("w1", {.gpus = 2, .cpu_cores = 8, .memory_mb = 8192}));
    s.add_worker(worker("w2", {.gpus = 1, .cpu_cores = 8, .memory_mb = 8192}));
    std::vector<Action> log;
    for (int i = 0; i < 6; ++i) {
      s.advance_to(i * 2.0);
      s.on_job_arrival(job("j" + std::to_string(i), {.gpus = double(1 + i % 2), .cpu_cores = 1},
                           i * 2.0));
      for (auto& a : s.schedule_pass()) {
        if (a.kind == ActionKind::kPreempt) s.on_checkpoint_done(a.job_id, s.job(a.job_id)->checkpoint_version + 1);
        log.push_back(a);
      }
      for (auto& a : s.schedule_pass()) log.push_back(a);
    }
    return log;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace edgeoffload
