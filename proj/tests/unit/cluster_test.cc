#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "edgeoffload/cluster/checkpoint_store.h"
#include "edgeoffload/cluster/control_plane.h"
#include "edgeoffload/cluster/lease.h"
#include "edgeoffload/protocol/encoding.h"
#include "edgeoffload/protocol/net.h"

namespace edgeoffload::cluster {
namespace {

namespace fs = std::filesystem;
using protocol::Message;
using protocol::MessageType;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("edgeoffload_cluster_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// In-memory workers that answer like the real agent.
class FakeWorkers : public WorkerTransport {
 public:
  struct Worker {
    bool alive = true;
    std::map<std::string, std::string> jobs;  // job id -> last restored blob
  };

  Message call(const WorkerDescriptor& d, const Message& request) override {
    log.push_back({d.worker_id, request});
    Worker& w = workers[d.worker_id];
    if (!w.alive) throw protocol::NetworkError("connection refused");
    const Json& p = request.payload;
    switch (request.type) {
      case MessageType::kDispatch:
        w.jobs[p.at("job_id")] = "";
        return protocol::make_response(request, MessageType::kJobStatus,
                                       Json{{"job_id", p.at("job_id")}, {"status", "running"}});
      case MessageType::kResume:
        w.jobs[p.at("job_id")] =
            protocol::base64_decode(p.at("checkpoint").at("blob").get<std::string>());
        return protocol::make_response(request, MessageType::kJobStatus,
                                       Json{{"job_id", p.at("job_id")}, {"status", "running"}});
      case MessageType::kPreempt: {
        std::string job = p.at("job_id");
        w.jobs.erase(job);
        std::string blob = "state-of-" + job + "-" + std::to_string(++blob_counter);
        blobs.push_back(blob);
        return protocol::make_response(
            request, MessageType::kCheckpointDone,
            Json{{"job_id", job}, {"blob", protocol::base64_encode(blob)}});
      }
      default:
        return protocol::make_error(request, protocol::error_code::kBadRequest, "unexpected");
    }
  }

  std::vector<Message> sent(MessageType type) const {
    std::vector<Message> out;
    for (const auto& [w, m] : log) {
      if (m.type == type) out.push_back(m);
    }
    return out;
  }

  std::map<std::string, Worker> workers;
  std::vector<std::pair<std::string, Message>> log;
  std::vector<std::string> blobs;
  int blob_counter = 0;
};

WorkerDescriptor gpu_worker(const std::string& id, double gpus = 1) {
  WorkerDescriptor d;
  d.worker_id = id;
  d.capacity = ResourceVector{.gpus = gpus, .cpu_cores = 4 * gpus, .memory_mb = 4096 * gpus};
  d.address = "127.0.0.1:1";
  return d;
}

JobSpec gpu_job(const std::string& id, JobKind kind = JobKind::kTraining,
                const std::string& model = "") {
  JobSpec s;
  s.job_id = id;
  s.kind = kind;
  s.required = ResourceVector{.gpus = 1, .cpu_cores = 4, .memory_mb = 4096};
  s.model.model_name = model;
  return s;
}

ControlPlaneConfig config(double demotion = 1000) {
  ControlPlaneConfig c;
  c.scheduler.demotion_threshold = demotion;
  c.scheduler.checkpoint_overhead_s = 0;
  return c;
}

HeartbeatReport beat(const std::string& worker, std::map<std::string, double> progress = {},
                     std::vector<std::string> running = {}) {
  HeartbeatReport r;
  r.worker_id = worker;
  r.progress = std::move(progress);
  r.running = std::move(running);
  return r;
}

struct Fixture {
  TempDir dir;
  CheckpointStore store{dir.path()};
  FakeWorkers workers;
  ControlPlane cp;
  explicit Fixture(ControlPlaneConfig c = config()) : cp(std::move(c), store, workers) {}
};

TEST(RegisterTest, FreshWorkerUnblocksQueuedJob) {
  Fixture f;
  f.cp.submit(gpu_job("j"), 0);
  EXPECT_EQ(f.cp.job_status("j"), "queued");
  f.cp.register_worker(gpu_worker("w1"), 1);
  EXPECT_EQ(f.cp.job_status("j"), "running");
  ASSERT_EQ(f.workers.sent(MessageType::kDispatch).size(), 1u);
  EXPECT_EQ(f.workers.log[0].first, "w1");
}

TEST(RegisterTest, SameDescriptorIsIdempotent) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.submit(gpu_job("j"), 0);
  auto before = f.workers.log.size();
  f.cp.register_worker(gpu_worker("w1"), 1);
  EXPECT_EQ(f.workers.log.size(), before);
  EXPECT_EQ(f.cp.job_status("j"), "running");
  EXPECT_TRUE(f.cp.rollback_log().empty());
}

TEST(RegisterTest, NewCapacityFailsJobsAsIfTheWorkerDied) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.submit(gpu_job("j"), 0);
  f.cp.heartbeat(beat("w1", {{"j", 10}}, {"j"}), 10);
  f.cp.register_worker(gpu_worker("w1", 2), 11);
  ASSERT_EQ(f.cp.rollback_log().size(), 1u);
  EXPECT_EQ(f.cp.rollback_log()[0].service_after, 0.0);
  EXPECT_EQ(f.cp.job_status("j"), "running");  // redispatched on the new record
  EXPECT_EQ(f.workers.sent(MessageType::kDispatch).size(), 2u);
}

TEST(HeartbeatTest, LivenessTimer) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.heartbeat(beat("w1"), 2);
  EXPECT_TRUE(f.cp.detect_failures(7.9).empty());  // 5.9 s silence
  EXPECT_TRUE(f.cp.detect_failures(8.0).empty());  // exactly period × tolerance
  EXPECT_EQ(f.cp.detect_failures(8.1), std::vector<std::string>{"w1"});
  EXPECT_FALSE(f.cp.is_alive("w1"));
}

TEST(HeartbeatTest, UnknownWorkerIsToldToReregister) {
  Fixture f;
  EXPECT_TRUE(f.cp.heartbeat(beat("ghost"), 1).reregister);
}

TEST(HeartbeatTest, ProgressAccruesServiceFromThePrimaryOnly) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.register_worker(gpu_worker("w2"), 0);
  JobSpec gang = gpu_job("g");
  gang.gang_size = 2;
  f.cp.submit(gang, 0);
  ASSERT_EQ(f.cp.job_status("g"), "running");
  f.cp.heartbeat(beat("w1", {{"g", 4}}, {"g"}), 4);
  f.cp.heartbeat(beat("w2", {{"g", 4}}, {"g"}), 4);
  EXPECT_DOUBLE_EQ(f.cp.scheduler().job("g")->executed_time_s, 4);
  EXPECT_DOUBLE_EQ(f.cp.scheduler().job("g")->attained_service, 4);  // whole cluster
}

TEST(HeartbeatTest, ProgressForPreemptedJobIsDiscardedAndStopped) {
  Fixture f(config(5));
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.submit(gpu_job("old"), 0);
  f.cp.heartbeat(beat("w1", {{"old", 6}}, {"old"}), 6);  // demoted to Q2
  f.cp.submit(gpu_job("new"), 6);                         // preempts old
  ASSERT_EQ(f.cp.job_status("old"), "checkpointed");
  ASSERT_EQ(f.cp.job_status("new"), "running");
  double service = f.cp.scheduler().job("old")->attained_service;
  // A stale report still listing the preempted job.
  HeartbeatAck ack = f.cp.heartbeat(beat("w1", {{"old", 3}, {"new", 1}}, {"old", "new"}), 7);
  EXPECT_EQ(ack.stop_jobs, std::vector<std::string>{"old"});
  EXPECT_DOUBLE_EQ(f.cp.scheduler().job("old")->attained_service, service);
}

TEST(HeartbeatTest, CompletionFreesWorkerForNextJob) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.submit(gpu_job("a"), 0);
  f.cp.submit(gpu_job("b"), 0);
  EXPECT_EQ(f.cp.job_status("b"), "queued");
  HeartbeatReport r = beat("w1", {{"a", 3}});
  r.completed = {"a"};
  f.cp.heartbeat(r, 3);
  EXPECT_EQ(f.cp.job_status("a"), "completed");
  EXPECT_EQ(f.cp.job_status("b"), "running");
}

TEST(HeartbeatTest, JobMissingFromReportAfterGraceIsRolledBack) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.submit(gpu_job("j"), 0);
  f.cp.heartbeat(beat("w1", {{"j", 1}}, {}), 1);  // within grace
  EXPECT_TRUE(f.cp.rollback_log().empty());
  f.cp.heartbeat(beat("w1", {}, {}), 5);  // worker restarted and lost it
  ASSERT_EQ(f.cp.rollback_log().size(), 1u);
  EXPECT_EQ(f.cp.job_status("j"), "running");  // redispatched
}

TEST(FailureTest, RollbackToLatestCheckpoint) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.register_worker(gpu_worker("w2"), 0);
  f.cp.submit(gpu_job("j"), 0);
  std::string first = f.cp.scheduler().job("j")->placement[0].worker_id;
  std::string other = first == "w1" ? "w2" : "w1";
  // Two-worker cluster: rate 0.5, so 60 s of work is service 30.
  f.cp.heartbeat(beat(first, {{"j", 60}}, {"j"}), 60);
  f.cp.heartbeat(beat(other), 60);
  ASSERT_DOUBLE_EQ(f.cp.scheduler().job("j")->attained_service, 30);
  PlacementPlan plan{{Assignment{other, gpu_job("j").required}}, false};
  ASSERT_TRUE(f.cp.checkpoint_and_migrate("j", plan, 60));
  f.cp.heartbeat(beat(other, {{"j", 40}}, {"j"}), 61);
  ASSERT_DOUBLE_EQ(f.cp.scheduler().job("j")->attained_service, 50);

  f.workers.workers[other].alive = false;
  f.cp.heartbeat(beat(first), 66);
  EXPECT_EQ(f.cp.detect_failures(68), std::vector<std::string>{other});
  ASSERT_EQ(f.cp.rollback_log().size(), 1u);
  const RollbackEntry& e = f.cp.rollback_log()[0];
  EXPECT_DOUBLE_EQ(e.service_before, 50);
  EXPECT_DOUBLE_EQ(e.service_after, 30);
  EXPECT_EQ(e.checkpoint_version, 1);
  // Replaying the ledger: the checkpoint on disk holds exactly the value used.
  EXPECT_DOUBLE_EQ(f.store.latest("j")->attained_service, e.service_after);
  // Resumed on the survivor from version 1.
  EXPECT_EQ(f.cp.job_status("j"), "running");
  auto resumes = f.workers.sent(MessageType::kResume);
  ASSERT_FALSE(resumes.empty());
  EXPECT_EQ(resumes.back().payload["checkpoint"]["version"], 1);
}

TEST(FailureTest, DeadWorkerWithoutJobsOnlyShrinksCapacity) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.register_worker(gpu_worker("w2"), 0);
  f.cp.mark_worker_dead("w2", 1);
  EXPECT_EQ(f.cp.alive_workers(), std::vector<std::string>{"w1"});
  EXPECT_TRUE(f.cp.rollback_log().empty());
}

TEST(FailureTest, AllWorkersDeadQueuesEverything) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.register_worker(gpu_worker("w2"), 0);
  f.cp.submit(gpu_job("a"), 0);
  f.cp.submit(gpu_job("b"), 0);
  EXPECT_EQ(f.cp.detect_failures(100).size(), 2u);
  EXPECT_EQ(f.cp.job_status("a"), "queued");
  EXPECT_EQ(f.cp.job_status("b"), "queued");
  EXPECT_TRUE(f.cp.alive_workers().empty());
}

TEST(FailureTest, DispatchToUnreachableWorkerRequeues) {
  Fixture f;
  f.workers.workers["w1"].alive = false;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.submit(gpu_job("j"), 0);
  EXPECT_FALSE(f.cp.is_alive("w1"));
  EXPECT_EQ(f.cp.job_status("j"), "queued");
}

TEST(MigrationTest, AccountingAndBlobSurviveTheMove) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.register_worker(gpu_worker("w2"), 0);
  f.cp.submit(gpu_job("j"), 0);
  std::string from = f.cp.scheduler().job("j")->placement[0].worker_id;
  std::string to = from == "w1" ? "w2" : "w1";
  f.cp.heartbeat(beat(from, {{"j", 12.25}}, {"j"}), 13);
  PlacementPlan plan{{Assignment{to, gpu_job("j").required}}, false};
  ASSERT_TRUE(f.cp.checkpoint_and_migrate("j", plan, 14));
  const JobState* j = f.cp.scheduler().job("j");
  EXPECT_EQ(j->executed_time_s, 12.25);
  EXPECT_EQ(j->placement[0].worker_id, to);
  EXPECT_EQ(j->checkpoint_version, 1);
  EXPECT_EQ(j->migrations, 1);
  ASSERT_EQ(f.workers.blobs.size(), 1u);
  EXPECT_EQ(f.workers.workers[to].jobs["j"], f.workers.blobs[0]);
  EXPECT_EQ(f.store.latest("j")->blob, f.workers.blobs[0]);
  EXPECT_TRUE(f.cp.scheduler().check_invariants().empty());
}

TEST(MigrationTest, CheckpointWriteFailureKeepsJobInPlace) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.register_worker(gpu_worker("w2"), 0);
  f.cp.submit(gpu_job("j"), 0);
  std::string from = f.cp.scheduler().job("j")->placement[0].worker_id;
  std::string to = from == "w1" ? "w2" : "w1";
  // A directory squatting on the temporary name makes the write fail.
  fs::path tmp = f.store.path_for("j", 1);
  tmp += ".tmp" + std::to_string(::getpid());
  fs::create_directories(tmp);
  PlacementPlan plan{{Assignment{to, gpu_job("j").required}}, false};
  EXPECT_FALSE(f.cp.checkpoint_and_migrate("j", plan, 5));
  const JobState* j = f.cp.scheduler().job("j");
  EXPECT_EQ(j->status, JobStatus::kRunning);
  EXPECT_EQ(j->placement[0].worker_id, from);
  EXPECT_EQ(j->checkpoint_version, 0);
  EXPECT_TRUE(f.workers.workers[from].jobs.count("j"));
}

TEST(PreemptionTest, PreemptWritesCheckpointAndResumeRestoresSameBytes) {
  Fixture f(config(5));
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.submit(gpu_job("long"), 0);
  f.cp.heartbeat(beat("w1", {{"long", 6}}, {"long"}), 6);
  f.cp.submit(gpu_job("short"), 6);
  EXPECT_EQ(f.cp.job_status("long"), "checkpointed");
  auto ckpt = f.store.latest("long");
  ASSERT_TRUE(ckpt);
  EXPECT_EQ(ckpt->version, 1);
  EXPECT_DOUBLE_EQ(ckpt->attained_service, 6);
  HeartbeatReport done = beat("w1", {{"short", 2}});
  done.completed = {"short"};
  f.cp.heartbeat(done, 8);
  EXPECT_EQ(f.cp.job_status("long"), "running");
  EXPECT_EQ(f.workers.workers["w1"].jobs["long"], ckpt->blob);
}

TEST(RoutingTest, OneHostingWorker) {
  Fixture f;
  f.cp.register_worker(gpu_worker("w1"), 0);
  f.cp.register_worker(gpu_worker("w2"), 0);
  EXPECT_THROW(f.cp.route_inference("ssd_mobilenet_v1"), NoCapacityError);
  f.cp.submit(gpu_job("s1", JobKind::kServing, "ssd_mobilenet_v1"), 0);
  f.cp.submit(gpu_job("t1"), 0);  // training jobs never take requests
  RouteTarget t = f.cp.route_inference("ssd_mobilenet_v1");
  EXPECT_EQ(t.job_id, "s1");
  EXPECT_EQ(t.worker_id, f.cp.scheduler().job("s1")->placement[0].worker_id);
  EXPECT_EQ(t.address, "127.0.0.1:1");
  EXPECT_THROW(f.cp.route_inference("ssd_mobilenet_v1", {t.worker_id}), NoCapacityError);
  EXPECT_THROW(f.cp.route_inference("deeplab_v3"), NoCapacityError);
}

TEST(RoutingTest, UtilizationBreaksTheTie) {
  Fixture f;
  // Serving jobs use half of each worker, so reported load dominates.
  f.cp.register_worker(gpu_worker("w1", 2), 0);
  f.cp.register_worker(gpu_worker("w2", 2), 0);
  f.cp.submit(gpu_job("s1", JobKind::kServing, "m"), 0);
  f.cp.submit(gpu_job("s2", JobKind::kServing, "m"), 0);
  std::map<std::string, std::vector<std::string>> on;
  for (const char* id : {"s1", "s2"}) {
    on[f.cp.scheduler().job(id)->placement[0].worker_id].push_back(id);
  }
  ASSERT_EQ(on.size(), 2u);
  HeartbeatReport a = beat("w1", {}, on["w1"]);
  a.utilization = {0.9, 0.9, 0.9, 0, 0};
  HeartbeatReport b = beat("w2", {}, on["w2"]);
  b.utilization = {0.1, 0.1, 0.1, 0, 0};
  f.cp.heartbeat(a, 1);
  f.cp.heartbeat(b, 1);
  EXPECT_EQ(f.cp.route_inference("m").worker_id, "w2");
}

// Random kills, revivals and checkpoints: rollback never raises service and
// always restarts from the newest checkpoint on disk.
TEST(FailureProperty, RandomWorkerKillsRollBackSafely) {
  std::mt19937_64 rng(99);
  int rollbacks = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Fixture f(config(8));
    const int n = 2 + static_cast<int>(rng() % 3);
    for (int w = 0; w < n; ++w) f.cp.register_worker(gpu_worker("w" + std::to_string(w)), 0);
    for (int j = 0; j < 5; ++j) f.cp.submit(gpu_job("j" + std::to_string(j)), 0);
    double now = 0;
    for (int step = 0; step < 40; ++step) {
      now += 1;
      for (int w = 0; w < n; ++w) {
        std::string id = "w" + std::to_string(w);
        if (!f.cp.is_alive(id)) {
          if (rng() % 4 == 0) {
            f.workers.workers[id].alive = true;
            f.workers.workers[id].jobs.clear();
            f.cp.register_worker(gpu_worker(id), now);
          }
          continue;
        }
        std::map<std::string, double> progress;
        std::vector<std::string> running;
        for (const auto& [job, blob] : f.workers.workers[id].jobs) {
          progress[job] = 1.0;
          running.push_back(job);
        }
        f.cp.heartbeat(beat(id, progress, running), now);
      }
      if (rng() % 3 == 0) {
        std::string victim = "w" + std::to_string(rng() % n);
        if (f.cp.is_alive(victim)) {
          f.workers.workers[victim].alive = false;
          f.cp.mark_worker_dead(victim, now);
        }
      }
      ASSERT_TRUE(f.cp.scheduler().check_invariants().empty());
    }
    for (const RollbackEntry& e : f.cp.rollback_log()) {
      ++rollbacks;
      EXPECT_LE(e.service_after, e.service_before + 1e-12);
    }
    // Every RESUME carried the newest version that existed when it was sent.
    std::map<std::string, int> newest_seen;
    for (const auto& [w, m] : f.workers.log) {
      if (m.type != MessageType::kResume) continue;
      std::string job = m.payload["job_id"];
      int v = m.payload["checkpoint"]["version"];
      EXPECT_GE(v, newest_seen[job]);
      newest_seen[job] = v;
    }
    for (const auto& [id, j] : f.cp.scheduler().jobs()) {
      auto versions = f.store.versions(id);
      if (!versions.empty()) {
        EXPECT_EQ(j.checkpoint_version, versions.back());
      }
    }
  }
  EXPECT_GT(rollbacks, 20);
}

TEST(CheckpointStoreTest, RoundTripAndVersionOrder) {
  TempDir dir;
  CheckpointStore store(dir.path());
  EXPECT_FALSE(store.latest("j"));
  std::string blob("\x00\x01\xff binary", 10);
  CheckpointRecord r1{"j", 1, 3.5, 7.0, blob, 100.0};
  store.write(r1);
  EXPECT_EQ(store.read("j", 1), r1);
  CheckpointRecord r2{"j", 2, 4.0, 8.0, "second", 101.0};
  store.write(r2);
  EXPECT_EQ(store.versions("j"), (std::vector<int>{1, 2}));
  EXPECT_EQ(*store.latest("j"), r2);
  EXPECT_THROW(store.write(r1), CheckpointError);  // not above 2
  EXPECT_TRUE(fs::exists(dir.path() / "j.v2.ckpt"));
}

TEST(CheckpointStoreTest, TemporaryFilesAreInvisibleAndCorruptionIsDetected) {
  TempDir dir;
  CheckpointStore store(dir.path());
  std::ofstream(dir.path() / "j.v5.ckpt.tmp123") << "partial";
  EXPECT_TRUE(store.versions("j").empty());
  std::string bytes = serialize_checkpoint({"k", 1, 0, 0, "abcdef", 0});
  EXPECT_THROW(parse_checkpoint(bytes.substr(0, bytes.size() - 1)), CheckpointError);
  EXPECT_THROW(parse_checkpoint("no newline"), CheckpointError);
  EXPECT_EQ(parse_checkpoint(bytes).blob, "abcdef");
}

TEST(LeaseTest, SingleLeaderAndIncreasingTerms) {
  TempDir dir;
  LeaseManager a(dir.path(), "a", 5.0);
  LeaseManager b(dir.path(), "b", 5.0);
  EXPECT_TRUE(a.try_acquire(100));
  EXPECT_EQ(a.term(), 1);
  EXPECT_FALSE(b.try_acquire(101));  // a's lease still valid
  EXPECT_TRUE(a.try_acquire(103));   // renewal keeps the term
  EXPECT_EQ(a.term(), 1);
  EXPECT_FALSE(b.try_acquire(107.9));
  EXPECT_TRUE(b.try_acquire(108.1));  // expired at 108
  EXPECT_EQ(b.term(), 2);
  EXPECT_FALSE(a.try_acquire(108.2));  // a lost it
  EXPECT_FALSE(a.held(108.2));
  EXPECT_EQ(b.read()->holder_id, "b");
}

TEST(LeaseTest, ReleaseHandsOverImmediately) {
  TempDir dir;
  LeaseManager a(dir.path(), "a", 60.0);
  LeaseManager b(dir.path(), "b", 60.0);
  ASSERT_TRUE(a.try_acquire(0));
  a.release(1);
  EXPECT_TRUE(b.try_acquire(1.5));
  EXPECT_EQ(b.term(), 2);
}

}  // namespace
}  // namespace edgeoffload::cluster
