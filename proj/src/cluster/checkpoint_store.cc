#include "edgeoffload/cluster/checkpoint_store.h"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "edgeoffload/common/json_fields.h"

namespace edgeoffload::cluster {

namespace fs = std::filesystem;

namespace {

// Job ids end up in file names.
void check_job_id(const std::string& job_id) {
  if (job_id.empty() || job_id.find('/') != std::string::npos || job_id == "." || job_id == "..") {
    throw CheckpointError(fmt::format("job id '{}' cannot name a checkpoint file", job_id));
  }
}

}  // namespace

std::string serialize_checkpoint(const CheckpointRecord& record) {
  Json header{{"job_id", record.job_id},
              {"version", record.version},
              {"executed_time_s", record.executed_time_s},
              {"attained_service", record.attained_service},
              {"created_at", record.created_at}};
  std::string out = header.dump();
  out += '\n';
  const auto n = static_cast<std::uint32_t>(record.blob.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += record.blob;
  return out;
}

CheckpointRecord parse_checkpoint(const std::string& bytes) {
  auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw CheckpointError("checkpoint header line missing");
  CheckpointRecord r;
  try {
    Json h = Json::parse(bytes.substr(0, nl));
    r.job_id = h.at("job_id").get<std::string>();
    r.version = h.at("version").get<int>();
    r.executed_time_s = h.at("executed_time_s").get<double>();
    r.attained_service = h.at("attained_service").get<double>();
    r.created_at = h.at("created_at").get<double>();
  } catch (const Json::exception& e) {
    throw CheckpointError(fmt::format("bad checkpoint header: {}", e.what()));
  }
  std::size_t pos = nl + 1;
  if (bytes.size() < pos + 4) throw CheckpointError("checkpoint blob length truncated");
  auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])); };
  std::uint32_t n = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
  pos += 4;
  if (bytes.size() - pos != n) {
    throw CheckpointError(fmt::format("checkpoint declares {} blob bytes but holds {}", n,
                                      bytes.size() - pos));
  }
  r.blob = bytes.substr(pos);
  return r;
}

CheckpointStore::CheckpointStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw CheckpointError(fmt::format("cannot create checkpoint dir {}: {}", dir_.string(),
                                      ec.message()));
  }
}

fs::path CheckpointStore::path_for(const std::string& job_id, int version) const {
  return dir_ / fmt::format("{}.v{}.ckpt", job_id, version);
}

void CheckpointStore::write(const CheckpointRecord& record) {
  check_job_id(record.job_id);
  auto existing = versions(record.job_id);
  if (!existing.empty() && record.version <= existing.back()) {
    throw CheckpointError(fmt::format("checkpoint version {} for job {} not above {}",
                                      record.version, record.job_id, existing.back()));
  }
  fs::path final_path = path_for(record.job_id, record.version);
  fs::path tmp = final_path;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    std::string bytes = serialize_checkpoint(record);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw CheckpointError(fmt::format("cannot write checkpoint {}", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw CheckpointError(fmt::format("cannot publish checkpoint {}", final_path.string()));
  }
}

std::vector<int> CheckpointStore::versions(const std::string& job_id) const {
  std::vector<int> out;
  const std::string prefix = job_id + ".v";
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    std::string name = entry.path().filename().string();
    if (name.size() <= prefix.size() + 5 || name.compare(0, prefix.size(), prefix) != 0) continue;
    if (name.compare(name.size() - 5, 5, ".ckpt") != 0) continue;
    std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - 5);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) continue;
    out.push_back(std::stoi(digits));
  }
  std::sort(out.begin(), out.end());
  return out;
}

CheckpointRecord CheckpointStore::read(const std::string& job_id, int version) const {
  check_job_id(job_id);
  fs::path p = path_for(job_id, version);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CheckpointError(fmt::format("checkpoint {} not found", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  CheckpointRecord r = parse_checkpoint(ss.str());
  if (r.job_id != job_id || r.version != version) {
    throw CheckpointError(fmt::format("checkpoint {} holds {} v{}", p.string(), r.job_id,
                                      r.version));
  }
  return r;
}

std::optional<CheckpointRecord> CheckpointStore::latest(const std::string& job_id) const {
  auto v = versions(job_id);
  if (v.empty()) return std::nullopt;
  return read(job_id, v.back());
}

}  // namespace edgeoffload::cluster
