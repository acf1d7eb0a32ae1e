#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace edgeoffload {

// Index order shared by ResourceVector, ResourceWeights and UtilizationVector.
enum class Dimension : std::size_t {
  kGpus = 0,
  kCpuCores = 1,
  kMemoryMb = 2,
  kDiskMb = 3,
  kBandwidthMbps = 4,
};

inline constexpr std::size_t kNumDimensions = 5;

std::string_view dimension_name(std::size_t index);

// Multi-dimensional capacity or demand. All components are non-negative;
// operator-= throws DomainError instead of going below zero.
struct ResourceVector {
  double gpus = 0.0;
  double cpu_cores = 0.0;
  double memory_mb = 0.0;
  double disk_mb = 0.0;
  double bandwidth_mbps = 0.0;

  double operator[](std::size_t i) const;
  double& operator[](std::size_t i);

  ResourceVector& operator+=(const ResourceVector& other);
  ResourceVector& operator-=(const ResourceVector& other);

  bool is_zero() const;
  bool non_negative() const;
  bool operator==(const ResourceVector& other) const = default;

  std::string to_string() const;
};

ResourceVector operator+(ResourceVector lhs, const ResourceVector& rhs);
ResourceVector operator-(ResourceVector lhs, const ResourceVector& rhs);
ResourceVector operator*(ResourceVector v, double k);
ResourceVector operator*(double k, ResourceVector v);

// Per-dimension fractions used to collapse a ResourceVector into one number.
// Defaults favour the GPU dimension.
struct ResourceWeights {
  double gpus = 0.5;
  double cpu_cores = 0.25;
  double memory_mb = 0.25;
  double disk_mb = 0.0;
  double bandwidth_mbps = 0.0;

  double operator[](std::size_t i) const;
  double& operator[](std::size_t i);
  bool operator==(const ResourceWeights& other) const = default;

  // Throws ConfigError unless every weight is >= 0 and they sum to 1.
  void validate() const;
};

// Fraction of capacity in use per dimension, as reported by a worker.
using UtilizationVector = std::array<double, kNumDimensions>;

// True iff every component of `demand` is <= the matching component of `free`.
bool fits(const ResourceVector& demand, const ResourceVector& free);

// sum_d weight_d * demand_d / capacity_d. Throws ConfigError when a dimension
// with nonzero weight has zero capacity.
double normalized_demand(const ResourceVector& demand,
                         const ResourceVector& capacity,
                         const ResourceWeights& weights);

}  // namespace edgeoffload
