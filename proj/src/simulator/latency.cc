#include "edgeoffload/simulator/latency.h"

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload::sim {

void LatencyProfile::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0)) throw ValidationError(fmt::format("{} must be >= 0", name));
  };
  check(measured_rtt_ms, "measured_rtt_ms");
  check(uplink_mbps, "uplink_mbps");
  check(downlink_mbps, "downlink_mbps");
  check(propagation_ms, "propagation_ms");
  check(service_time_ms, "service_time_ms");
  check(result_bytes, "result_bytes");
  check(jitter_fraction, "jitter_fraction");
  if (jitter_fraction >= 1.0) throw ValidationError("jitter_fraction must be < 1");
}

double LatencyProfile::mean_ms(double payload_bytes) const {
  if (mode == Mode::kMeasured) return measured_rtt_ms;
  auto transfer_ms = [](double bytes, double mbps) {
    return mbps > 0.0 ? bytes * 8.0 / (mbps * 1000.0) : 0.0;
  };
  return transfer_ms(payload_bytes, uplink_mbps) + propagation_ms + service_time_ms +
         transfer_ms(result_bytes, downlink_mbps) + propagation_ms;
}

JitterStream::JitterStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  rng_.seed(seq);
}

double JitterStream::next() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double roundtrip_latency(const LatencyProfile& profile, double payload_bytes,
                         JitterStream& stream) {
  double mean = profile.mean_ms(payload_bytes);
  if (profile.jitter_fraction == 0.0) return mean;
  return mean * (1.0 + profile.jitter_fraction * stream.next());
}

LatencyProfile read_latency_profile(const Json& j, const std::string& path,
                                    FieldErrors& errors, const ProfileCatalog* catalog) {
  LatencyProfile p;
  FieldReader r(j, path, errors);
  if (!r.ok()) return p;
  r.reject_unknown({"mode", "measured_rtt_ms", "uplink_mbps", "downlink_mbps", "propagation_ms",
                    "service_time_ms", "result_bytes", "jitter_fraction", "model", "site",
                    "device"});
  std::string mode = r.string_or("mode", "measured");
  if (mode == "measured") {
    p.mode = LatencyProfile::Mode::kMeasured;
  } else if (mode == "composite") {
    p.mode = LatencyProfile::Mode::kComposite;
  } else {
    errors.add(r.child_path("mode"), fmt::format("unknown mode '{}' (measured|composite)", mode));
  }
  std::optional<double> default_jitter;
  if (r.has("model")) {
    // A catalog cell: {"model": "ssd_mobilenet_v1", "site": "onprem", "device": "gpu"}.
    std::string model = r.string("model");
    Site site = Site::kOnPrem;
    Device device = Device::kGpu;
    try {
      site = parse_site(r.string_or("site", "onprem"));
      device = parse_device(r.string_or("device", "gpu"));
    } catch (const ValidationError& e) {
      errors.add(path, e.what());
    }
    const ModelProfile* m = catalog == nullptr ? nullptr : catalog->find(model);
    auto cell = m == nullptr ? std::nullopt : m->service_time(site, device);
    if (!cell) {
      errors.add(r.child_path("model"),
                 fmt::format("no {}/{} latency for '{}' in the profile catalog",
                             to_string(site), to_string(device), model));
    } else if (p.mode == LatencyProfile::Mode::kMeasured) {
      p.measured_rtt_ms = *cell;
    } else {
      p.service_time_ms = *cell;
    }
    if (catalog != nullptr) {
      auto it = catalog->jitter_fraction.find(site);
      if (it != catalog->jitter_fraction.end()) default_jitter = it->second;
    }
  }
  p.measured_rtt_ms = r.number_or("measured_rtt_ms", p.measured_rtt_ms);
  p.uplink_mbps = r.number_or("uplink_mbps", 0.0);
  p.downlink_mbps = r.number_or("downlink_mbps", 0.0);
  p.propagation_ms = r.number_or("propagation_ms", 0.0);
  p.service_time_ms = r.number_or("service_time_ms", p.service_time_ms);
  p.result_bytes = r.number_or("result_bytes", 0.0);
  p.jitter_fraction = r.number_or("jitter_fraction", default_jitter.value_or(0.0));
  if (p.mode == LatencyProfile::Mode::kMeasured && !r.has("measured_rtt_ms") &&
      !r.has("model")) {
    errors.add(r.child_path("measured_rtt_ms"), "required in measured mode");
  }
  try {
    p.validate();
  } catch (const ValidationError& e) {
    errors.add(path, e.what());
  }
  return p;
}

std::string preset_key(const std::string& model, Site site, Device device) {
  return fmt::format("{}/{}/{}", model, to_string(site), to_string(device));
}

std::map<std::string, LatencyProfile> preset_profiles(const ProfileCatalog& catalog) {
  std::map<std::string, LatencyProfile> out;
  for (const auto& m : catalog.models) {
    for (const auto& [cell, ms] : m.service_time_ms) {
      LatencyProfile p;
      p.measured_rtt_ms = ms;
      auto it = catalog.jitter_fraction.find(cell.first);
      p.jitter_fraction = it == catalog.jitter_fraction.end() ? 0.0 : it->second;
      out.emplace(preset_key(m.model_name, cell.first, cell.second), p);
    }
  }
  return out;
}

}  // namespace edgeoffload::sim
