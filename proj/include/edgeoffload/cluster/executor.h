#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "edgeoffload/cluster/wire.h"
#include "edgeoffload/domain/profile_catalog.h"

namespace edgeoffload::cluster {

struct InferenceResult {
  std::string digest;  // SHA-256 of the request payload
  std::size_t bytes = 0;
  std::string job_id;
  double queue_ms = 0.0;
  double service_ms = 0.0;
  Json result;
};

// Progress not yet acknowledged by the server.
struct ExecutorReport {
  UtilizationVector utilization{};
  std::map<std::string, double> progress;
  std::vector<std::string> completed;
  std::vector<std::string> running;
};

// Stands in for real model execution. Training jobs advance with wall time
// and finish after executor.duration_s seconds of execution; serving jobs run
// until stopped and answer inference requests by sleeping the profile's
// on-prem service time. Thread-safe.
class SyntheticExecutor {
 public:
  SyntheticExecutor(ProfileCatalog catalog, ResourceVector capacity, double jitter_fraction,
                    std::uint64_t seed);

  // A second DISPATCH for a job already running is a no-op.
  void start(const DispatchCommand& command, double now);
  // Returns the checkpoint blob: the job's progress as JSON. Stopping an
  // unknown job returns an empty blob.
  std::string stop(const std::string& job_id, double now);
  bool running(const std::string& job_id) const;

  ExecutorReport report(double now);
  // Marks what `sent` carried as delivered.
  void acknowledge(const ExecutorReport& sent);

  // Throws NoCapacityError when no serving job for the model runs here.
  InferenceResult infer(const std::string& model_name, std::string_view data);

  Device device() const { return device_; }
  double jitter_fraction() const { return jitter_fraction_; }

 private:
  struct Task {
    DispatchCommand command;
    double started_at = 0.0;
    double base_s = 0.0;      // execution before this start
    double reported_s = 0.0;  // execution already reported
    double duration_s = 0.0;  // training only; 0 runs until stopped
  };

  double executed(const Task& t, double now) const;
  void finish_due(double now);

  ProfileCatalog catalog_;
  ResourceVector capacity_;
  Device device_;
  double jitter_fraction_;

  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::map<std::string, Task> tasks_;
  // Finished training jobs with their unreported tail of progress.
  std::map<std::string, double> finished_;
};

// Seconds since the first call; monotonic.
double monotonic_s();

}  // namespace edgeoffload::cluster
