#include "edgeoffload/domain/resources.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload {

namespace {

// Absorbs rounding noise from repeated add/sub of fractional demands.
constexpr double kSlack = 1e-9;

constexpr std::array<std::string_view, kNumDimensions> kNames = {
    "gpus", "cpu_cores", "memory_mb", "disk_mb", "bandwidth_mbps"};

}  // namespace

std::string_view dimension_name(std::size_t index) {
  if (index >= kNumDimensions) {
    throw DomainError(fmt::format("resource dimension {} out of range", index));
  }
  return kNames[index];
}

double ResourceVector::operator[](std::size_t i) const {
  switch (i) {
    case 0: return gpus;
    case 1: return cpu_cores;
    case 2: return memory_mb;
    case 3: return disk_mb;
    case 4: return bandwidth_mbps;
  }
  throw DomainError(fmt::format("resource dimension {} out of range", i));
}

double& ResourceVector::operator[](std::size_t i) {
  switch (i) {
    case 0: return gpus;
    case 1: return cpu_cores;
    case 2: return memory_mb;
    case 3: return disk_mb;
    case 4: return bandwidth_mbps;
  }
  throw DomainError(fmt::format("resource dimension {} out of range", i));
}

ResourceVector& ResourceVector::operator+=(const ResourceVector& other) {
  for (std::size_t d = 0; d < kNumDimensions; ++d) (*this)[d] += other[d];
  return *this;
}

ResourceVector& ResourceVector::operator-=(const ResourceVector& other) {
  ResourceVector result = *this;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    double v = result[d] - other[d];
    if (v < 0.0) {
      if (v < -kSlack * std::max(1.0, std::abs(result[d]))) {
        throw DomainError(fmt::format("resource subtraction {} - {} goes negative",
                                      to_string(), other.to_string()));
      }
      v = 0.0;
    }
    result[d] = v;
  }
  *this = result;
  return *this;
}

bool ResourceVector::is_zero() const {
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    if ((*this)[d] != 0.0) return false;
  }
  return true;
}

bool ResourceVector::non_negative() const {
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    if (!((*this)[d] >= 0.0)) return false;
  }
  return true;
}

std::string ResourceVector::to_string() const {
  return fmt::format("{{gpus:{}, cpu_cores:{}, memory_mb:{}, disk_mb:{}, bandwidth_mbps:{}}}",
                     gpus, cpu_cores, memory_mb, disk_mb, bandwidth_mbps);
}

ResourceVector operator+(ResourceVector lhs, const ResourceVector& rhs) {
  lhs += rhs;
  return lhs;
}

ResourceVector operator-(ResourceVector lhs, const ResourceVector& rhs) {
  lhs -= rhs;
  return lhs;
}

ResourceVector operator*(ResourceVector v, double k) {
  for (std::size_t d = 0; d < kNumDimensions; ++d) v[d] *= k;
  return v;
}

ResourceVector operator*(double k, ResourceVector v) { return std::move(v) * k; }

double ResourceWeights::operator[](std::size_t i) const {
  switch (i) {
    case 0: return gpus;
    case 1: return cpu_cores;
    case 2: return memory_mb;
    case 3: return disk_mb;
    case 4: return bandwidth_mbps;
  }
  throw DomainError(fmt::format("weight dimension {} out of range", i));
}

double& ResourceWeights::operator[](std::size_t i) {
  switch (i) {
    case 0: return gpus;
    case 1: return cpu_cores;
    case 2: return memory_mb;
    case 3: return disk_mb;
    case 4: return bandwidth_mbps;
  }
  throw DomainError(fmt::format("weight dimension {} out of range", i));
}

void ResourceWeights::validate() const {
  double sum = 0.0;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    double w = (*this)[d];
    if (!(w >= 0.0)) {
      throw ConfigError(fmt::format("weight for {} must be >= 0, got {}", kNames[d], w));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("resource weights must sum to 1, got {}", sum));
  }
}

bool fits(const ResourceVector& demand, const ResourceVector& free) {
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    if (demand[d] > free[d] + kSlack) return false;
  }
  return true;
}

double normalized_demand(const ResourceVector& demand,
                         const ResourceVector& capacity,
                         const ResourceWeights& weights) {
  double total = 0.0;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    double w = weights[d];
    if (w == 0.0) continue;
    if (!(capacity[d] > 0.0)) {
      throw ConfigError(fmt::format(
          "capacity for weighted dimension {} is zero", kNames[d]));
    }
    total += w * (demand[d] / capacity[d]);
  }
  return total;
}

}  // namespace edgeoffload
