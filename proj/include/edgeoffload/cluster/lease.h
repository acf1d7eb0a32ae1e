#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace edgeoffload::cluster {

struct LeaderLease {
  std::string holder_id;
  std::int64_t term = 0;
  double expires_at = 0.0;  // wall-clock seconds

  bool operator==(const LeaderLease&) const = default;
};

// Single-leader lease kept in <state_dir>/leader.lease. Updates happen under
// an exclusive flock on <state_dir>/leader.lock and are published by rename.
// A contender takes a new term only once the previous lease has expired.
class LeaseManager {
 public:
  LeaseManager(std::filesystem::path state_dir, std::string holder_id, double duration_s);

  // Acquires a new term or renews the one we hold. True if we are leader
  // after the call.
  bool try_acquire(double now);
  // Gives the lease up early so a standby can take over without waiting.
  void release(double now);

  // True if the last successful acquire/renew is still unexpired at `now`.
  bool held(double now) const;
  std::int64_t term() const { return held_ ? held_->term : 0; }
  const std::string& holder_id() const { return holder_id_; }
  double duration_s() const { return duration_s_; }

  // What the lease file says right now.
  std::optional<LeaderLease> read() const;

 private:
  void write(const LeaderLease& lease) const;

  std::filesystem::path state_dir_;
  std::string holder_id_;
  double duration_s_;
  std::optional<LeaderLease> held_;
};

double wall_clock_s();

}  // namespace edgeoffload::cluster
