#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "edgeoffload/common/json_fields.h"
#include "edgeoffload/domain/profile_catalog.h"

namespace edgeoffload::sim {

struct LatencyProfile {
  enum class Mode { kMeasured, kComposite };

  Mode mode = Mode::kMeasured;
  double measured_rtt_ms = 0.0;
  // Composite mode. A zero rate means the link is not a bottleneck.
  double uplink_mbps = 0.0;
  double downlink_mbps = 0.0;
  double propagation_ms = 0.0;  // one way
  double service_time_ms = 0.0;
  double result_bytes = 0.0;
  double jitter_fraction = 0.0;

  // Throws ValidationError on negative fields or jitter >= 1.
  void validate() const;
  // RTT before jitter.
  double mean_ms(double payload_bytes) const;
};

// Uniform draws in [-1, 1) from a seeded 64-bit Mersenne Twister.
class JitterStream {
 public:
  explicit JitterStream(std::uint64_t seed) : rng_(seed) {}
  JitterStream(std::uint64_t seed, std::uint64_t stream);
  double next();

 private:
  std::mt19937_64 rng_;
};

// mean × (1 + jitter·u), u from `stream`.
double roundtrip_latency(const LatencyProfile& profile, double payload_bytes,
                         JitterStream& stream);

LatencyProfile read_latency_profile(const Json& j, const std::string& path,
                                    FieldErrors& errors, const ProfileCatalog* catalog);

// Measured-mode profiles for every (model, site, device) cell of the catalog,
// keyed "model/site/device", jittered with the catalog's per-site default.
std::map<std::string, LatencyProfile> preset_profiles(const ProfileCatalog& catalog);
std::string preset_key(const std::string& model, Site site, Device device);

}  // namespace edgeoffload::sim
