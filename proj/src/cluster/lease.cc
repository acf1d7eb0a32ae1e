#include "edgeoffload/cluster/lease.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"
#include "edgeoffload/common/json_fields.h"

namespace edgeoffload::cluster {

namespace fs = std::filesystem;

namespace {

class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(fmt::format("cannot open lock file {}", path.string()));
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        throw Error(fmt::format("cannot lock {}", path.string()));
      }
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

double wall_clock_s() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

LeaseManager::LeaseManager(fs::path state_dir, std::string holder_id, double duration_s)
    : state_dir_(std::move(state_dir)), holder_id_(std::move(holder_id)), duration_s_(duration_s) {
  if (!(duration_s_ > 0.0)) throw ConfigError("lease duration must be > 0");
  if (holder_id_.empty()) throw ConfigError("lease holder id must not be empty");
  std::error_code ec;
  fs::create_directories(state_dir_, ec);
  if (ec) throw ConfigError(fmt::format("cannot create state dir {}", state_dir_.string()));
}

std::optional<LeaderLease> LeaseManager::read() const {
  std::ifstream in(state_dir_ / "leader.lease");
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    Json j = Json::parse(ss.str());
    return LeaderLease{j.at("holder_id").get<std::string>(), j.at("term").get<std::int64_t>(),
                       j.at("expires_at").get<double>()};
  } catch (const Json::exception&) {
    // A torn or hand-edited file is treated as no lease; the term sequence
    // restarts above nothing, which only a manual edit can cause.
    return std::nullopt;
  }
}

void LeaseManager::write(const LeaderLease& lease) const {
  Json j{{"holder_id", lease.holder_id}, {"term", lease.term}, {"expires_at", lease.expires_at}};
  fs::path final_path = state_dir_ / "leader.lease";
  fs::path tmp = state_dir_ / fmt::format("leader.lease.tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump() << '\n';
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
  }
  fs::rename(tmp, final_path);
}

bool LeaseManager::try_acquire(double now) {
  FileLock lock(state_dir_ / "leader.lock");
  std::optional<LeaderLease> on_disk = read();
  if (held_ && on_disk && on_disk->holder_id == holder_id_ && on_disk->term == held_->term &&
      now < on_disk->expires_at) {
    held_->expires_at = now + duration_s_;
    write(*held_);
    return true;
  }
  if (on_disk && now < on_disk->expires_at) {
    held_.reset();
    return false;
  }
  LeaderLease next{holder_id_, (on_disk ? on_disk->term : 0) + 1, now + duration_s_};
  write(next);
  held_ = next;
  return true;
}

void LeaseManager::release(double now) {
  if (!held_) return;
  FileLock lock(state_dir_ / "leader.lock");
  std::optional<LeaderLease> on_disk = read();
  if (on_disk && *on_disk == *held_) {
    LeaderLease expired = *held_;
    expired.expires_at = now;
    write(expired);
  }
  held_.reset();
}

bool LeaseManager::held(double now) const { return held_ && now < held_->expires_at; }

}  // namespace edgeoffload::cluster
