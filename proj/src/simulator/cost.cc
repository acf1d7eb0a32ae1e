#include "edgeoffload/simulator/cost.h"

#include <cmath>

#include <fmt/format.h>

#include "edgeoffload/common/bundled.h"
#include "edgeoffload/common/error.h"

namespace edgeoffload::sim {

std::string_view to_string(CostMode mode) {
  switch (mode) {
    case CostMode::kInstance:
      return "instance";
    case CostMode::kPerMinute:
      return "per_minute";
    case CostMode::kPerImageFps:
      return "per_image_fps";
    case CostMode::kOnPrem:
      return "onprem";
  }
  return "?";
}

CostMode parse_cost_mode(std::string_view text) {
  if (text == "instance") return CostMode::kInstance;
  if (text == "per_minute") return CostMode::kPerMinute;
  if (text == "per_image_fps") return CostMode::kPerImageFps;
  if (text == "onprem") return CostMode::kOnPrem;
  throw ValidationError(fmt::format(
      "unknown cost mode '{}' (instance|per_minute|per_image_fps|onprem)", text));
}

void PricingTable::validate() const {
  auto check = [](const std::optional<double>& v, const char* name) {
    if (v && !(*v >= 0.0)) throw ValidationError(fmt::format("{} must be >= 0", name));
  };
  check(hourly_instance_usd, "hourly_instance_usd");
  check(per_minute_video_usd, "per_minute_video_usd");
  check(per_1000_images_usd, "per_1000_images_usd");
  check(workstation_capex_usd, "workstation_capex_usd");
  check(workstation_power_kw, "workstation_power_kw");
  check(electricity_usd_per_kwh, "electricity_usd_per_kwh");
  if (!(month_hours > 0.0)) throw ValidationError("month_hours must be > 0");
}

namespace {

double need(const std::optional<double>& v, const char* field, CostMode mode) {
  if (!v) {
    throw ConfigError(fmt::format("{} pricing needs {}", to_string(mode), field));
  }
  return *v;
}

}  // namespace

MonthlyCost monthly_cost(const PricingTable& p, CostMode mode, double fps) {
  MonthlyCost c;
  switch (mode) {
    case CostMode::kInstance:
      c.monthly_usd = need(p.hourly_instance_usd, "hourly_instance_usd", mode) * p.month_hours;
      break;
    case CostMode::kPerMinute:
      c.monthly_usd =
          need(p.per_minute_video_usd, "per_minute_video_usd", mode) * p.month_hours * 60.0;
      break;
    case CostMode::kPerImageFps:
      c.monthly_usd = need(p.per_1000_images_usd, "per_1000_images_usd", mode) / 1000.0 * fps *
                      p.month_hours * 3600.0;
      break;
    case CostMode::kOnPrem:
      c.one_time_usd = need(p.workstation_capex_usd, "workstation_capex_usd", mode);
      c.monthly_usd = need(p.workstation_power_kw, "workstation_power_kw", mode) * p.month_hours *
                      need(p.electricity_usd_per_kwh, "electricity_usd_per_kwh", mode);
      break;
  }
  return c;
}

PricingFile read_pricing_file(const Json& j, const std::string& path, FieldErrors& errors) {
  PricingFile f;
  FieldReader r(j, path, errors);
  if (!r.ok()) return f;
  r.reject_unknown({"description", "month_hours", "rows"});
  f.month_hours = r.number_or("month_hours", 744.0);
  if (!(f.month_hours > 0.0)) errors.add(r.child_path("month_hours"), "must be > 0");
  const Json* rows = r.array("rows");
  if (rows == nullptr) return f;
  for (std::size_t i = 0; i < rows->size(); ++i) {
    FieldReader rr((*rows)[i], fmt::format("{}[{}]", r.child_path("rows"), i), errors);
    if (!rr.ok()) continue;
    rr.reject_unknown({"label", "mode", "fps", "hourly_instance_usd", "per_minute_video_usd",
                       "per_1000_images_usd", "workstation_capex_usd", "workstation_power_kw",
                       "electricity_usd_per_kwh"});
    CostRow row;
    row.label = rr.string("label");
    try {
      row.mode = parse_cost_mode(rr.string("mode"));
    } catch (const ValidationError& e) {
      errors.add(rr.child_path("mode"), e.what());
    }
    row.fps = rr.number_or("fps", 1.0);
    if (!(row.fps >= 0.0)) errors.add(rr.child_path("fps"), "must be >= 0");
    auto rate = [&](const char* key) -> std::optional<double> {
      auto v = rr.optional_number(key);
      if (v && *v < 0.0) errors.add(rr.child_path(key), "must be >= 0");
      return v;
    };
    row.pricing.hourly_instance_usd = rate("hourly_instance_usd");
    row.pricing.per_minute_video_usd = rate("per_minute_video_usd");
    row.pricing.per_1000_images_usd = rate("per_1000_images_usd");
    row.pricing.workstation_capex_usd = rate("workstation_capex_usd");
    row.pricing.workstation_power_kw = rate("workstation_power_kw");
    row.pricing.electricity_usd_per_kwh = rate("electricity_usd_per_kwh");
    row.pricing.month_hours = f.month_hours;
    try {
      monthly_cost(row.pricing, row.mode, row.fps);
    } catch (const ConfigError& e) {
      errors.add(rr.path(), e.what());
    }
    f.rows.push_back(std::move(row));
  }
  return f;
}

PricingFile load_pricing_file(const std::string& name_or_path) {
  std::string source;
  std::string text = load_bundled_or_file(name_or_path, &source);
  Json j = parse_json_text(text, source);
  JsonLocator locator(text);
  FieldErrors errors;
  PricingFile f = read_pricing_file(j, "", errors);
  errors.throw_if_any(source, &locator);
  return f;
}

std::vector<CostLine> cost_table(const PricingFile& file) {
  std::vector<CostLine> out;
  for (const auto& row : file.rows) {
    CostLine line;
    line.label = row.label;
    line.mode = row.mode;
    line.cost = monthly_cost(row.pricing, row.mode, row.fps);
    line.monthly_rounded = std::lround(line.cost.monthly_usd);
    out.push_back(std::move(line));
  }
  return out;
}

std::string format_cost_table(const std::vector<CostLine>& lines, double month_hours) {
  std::size_t width = 8;
  for (const auto& l : lines) width = std::max(width, l.label.size());
  std::string out = fmt::format("Monthly cost of one video stream ({:g} h month)\n", month_hours);
  out += fmt::format("{:<{}}  {:<13}  {:>12}  {:>9}  {:>12}\n", "offering", width, "mode",
                     "monthly_usd", "rounded", "one_time_usd");
  for (const auto& l : lines) {
    out += fmt::format("{:<{}}  {:<13}  {:>12.2f}  {:>9}  {:>12.2f}\n", l.label, width,
                       to_string(l.mode), l.cost.monthly_usd, l.monthly_rounded,
                       l.cost.one_time_usd);
  }
  return out;
}

}  // namespace edgeoffload::sim
