#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgeoffload/common/error.h"

namespace edgeoffload::cluster {

class CheckpointError : public Error {
 public:
  using Error::Error;
};

struct CheckpointRecord {
  std::string job_id;
  int version = 0;
  double attained_service = 0.0;
  double executed_time_s = 0.0;
  std::string blob;
  double created_at = 0.0;

  bool operator==(const CheckpointRecord&) const = default;
};

// Versioned checkpoint files, one per (job, version):
//   <dir>/<job_id>.v<version>.ckpt
// A file holds one JSON header line, a 4-byte big-endian blob length and the
// blob. Files are written under a temporary name and renamed into place, so a
// reader sees either the whole record or nothing.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  // Throws CheckpointError on I/O failure or if `record.version` is not above
  // the job's latest stored version.
  void write(const CheckpointRecord& record);
  std::optional<CheckpointRecord> latest(const std::string& job_id) const;
  // Throws CheckpointError if missing or corrupt.
  CheckpointRecord read(const std::string& job_id, int version) const;
  std::vector<int> versions(const std::string& job_id) const;

  std::filesystem::path path_for(const std::string& job_id, int version) const;

 private:
  std::filesystem::path dir_;
};

std::string serialize_checkpoint(const CheckpointRecord& record);
// Throws CheckpointError on a truncated or malformed record.
CheckpointRecord parse_checkpoint(const std::string& bytes);

}  // namespace edgeoffload::cluster
