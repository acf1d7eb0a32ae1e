#include "edgeoffload/domain/model_profile.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload {

std::string_view to_string(Site site) {
  return site == Site::kCloud ? "cloud" : "onprem";
}

std::string_view to_string(Device device) {
  return device == Device::kGpu ? "gpu" : "cpu";
}

Site parse_site(std::string_view text) {
  if (text == "cloud") return Site::kCloud;
  if (text == "onprem") return Site::kOnPrem;
  throw ValidationError(fmt::format("unknown site '{}' (expected cloud|onprem)", text));
}

Device parse_device(std::string_view text) {
  if (text == "gpu") return Device::kGpu;
  if (text == "cpu") return Device::kCpu;
  throw ValidationError(fmt::format("unknown device '{}' (expected gpu|cpu)", text));
}

double skewness_factor(std::span<const double> layer_param_sizes) {
  if (layer_param_sizes.empty()) {
    throw DomainError("skewness of an empty layer list is undefined");
  }
  double sum = 0.0;
  for (double x : layer_param_sizes) {
    if (!(x >= 0.0)) {
      throw DomainError(fmt::format("layer parameter size must be >= 0, got {}", x));
    }
    sum += x;
  }
  const double n = static_cast<double>(layer_param_sizes.size());
  const double mean = sum / n;
  if (!(mean > 0.0)) {
    throw DomainError("skewness of layers with zero mean size is undefined");
  }
  double sq = 0.0;
  for (double x : layer_param_sizes) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / n) / mean;
}

void ModelProfile::set_layers(std::vector<double> sizes) {
  skewness = skewness_factor(sizes);
  layer_param_sizes = std::move(sizes);
}

std::optional<double> ModelProfile::service_time(Site site, Device device) const {
  auto it = service_time_ms.find({site, device});
  if (it == service_time_ms.end()) return std::nullopt;
  return it->second;
}

void ModelProfile::validate() const {
  for (const auto& [key, ms] : service_time_ms) {
    if (!(ms > 0.0)) {
      throw ValidationError(fmt::format("model {}: service time {}/{} must be > 0",
                                        model_name, to_string(key.first),
                                        to_string(key.second)));
    }
  }
  if (!layer_param_sizes.empty()) {
    double expected = skewness_factor(layer_param_sizes);
    if (std::abs(expected - skewness) > 1e-9 * std::max(1.0, expected)) {
      throw ValidationError(fmt::format(
          "model {}: skewness {} does not match layer sizes ({})", model_name,
          skewness, expected));
    }
  } else if (!(skewness >= 0.0)) {
    throw ValidationError(fmt::format("model {}: skewness must be >= 0", model_name));
  }
}

}  // namespace edgeoffload
