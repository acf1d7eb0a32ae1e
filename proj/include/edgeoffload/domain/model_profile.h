#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edgeoffload {

enum class Site { kCloud, kOnPrem };
enum class Device { kGpu, kCpu };

std::string_view to_string(Site site);
std::string_view to_string(Device device);
Site parse_site(std::string_view text);
Device parse_device(std::string_view text);

// Coefficient of variation (population SD / mean) of per-layer parameter
// sizes. Throws DomainError for an empty list, a negative entry or a zero mean.
double skewness_factor(std::span<const double> layer_param_sizes);

struct ModelProfile {
  std::string model_name;
  double model_size_mb = 0.0;
  std::vector<double> layer_param_sizes;
  // Derived from layer_param_sizes when those are known; otherwise whatever
  // the profile file declared (0 by default).
  double skewness = 0.0;
  std::map<std::pair<Site, Device>, double> service_time_ms;

  // Sets layer_param_sizes and recomputes skewness.
  void set_layers(std::vector<double> sizes);

  std::optional<double> service_time(Site site, Device device) const;

  // Throws ValidationError if a service time is not > 0 or the stored
  // skewness disagrees with the layer sizes.
  void validate() const;

  bool operator==(const ModelProfile&) const = default;
};

}  // namespace edgeoffload
