#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgeoffload/common/json_fields.h"

namespace edgeoffload::sim {

enum class CostMode { kInstance, kPerMinute, kPerImageFps, kOnPrem };

std::string_view to_string(CostMode mode);
CostMode parse_cost_mode(std::string_view text);

// Rates for one offering. Only the fields its mode needs must be present.
struct PricingTable {
  std::optional<double> hourly_instance_usd;
  std::optional<double> per_minute_video_usd;
  std::optional<double> per_1000_images_usd;
  std::optional<double> workstation_capex_usd;
  std::optional<double> workstation_power_kw;
  std::optional<double> electricity_usd_per_kwh;
  double month_hours = 744.0;

  // Throws ValidationError on a negative rate or month_hours <= 0.
  void validate() const;
};

struct MonthlyCost {
  double monthly_usd = 0.0;
  double one_time_usd = 0.0;  // on-prem hardware
};

// Throws ConfigError when a field the mode needs is missing.
MonthlyCost monthly_cost(const PricingTable& pricing, CostMode mode, double fps = 1.0);

struct CostRow {
  std::string label;
  CostMode mode = CostMode::kInstance;
  double fps = 1.0;
  PricingTable pricing;
};

struct PricingFile {
  double month_hours = 744.0;
  std::vector<CostRow> rows;
};

PricingFile read_pricing_file(const Json& j, const std::string& path, FieldErrors& errors);
// Bundled name ("table1_pricing") or a file path.
PricingFile load_pricing_file(const std::string& name_or_path);

struct CostLine {
  std::string label;
  CostMode mode = CostMode::kInstance;
  MonthlyCost cost;
  long long monthly_rounded = 0;
};

std::vector<CostLine> cost_table(const PricingFile& file);
std::string format_cost_table(const std::vector<CostLine>& lines, double month_hours);

}  // namespace edgeoffload::sim
