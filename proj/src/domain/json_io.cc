#include "edgeoffload/domain/json_io.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "edgeoffload/common/error.h"

namespace edgeoffload {

namespace {

}  // namespace

Json to_json(const ResourceVector& v) {
  Json j = Json::object();
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    if (v[d] != 0.0) j[std::string(dimension_name(d))] = v[d];
  }
  return j;
}

Json to_json(const ResourceWeights& w) {
  Json j = Json::object();
  for (std::size_t d = 0; d < kNumDimensions; ++d) j[std::string(dimension_name(d))] = w[d];
  return j;
}

Json to_json(const WorkerDescriptor& d) {
  return Json{{"id", d.worker_id},
              {"capacity", to_json(d.capacity)},
              {"tags", d.tags},
              {"address", d.address}};
}

Json to_json(const ModelProfile& m) {
  Json j{{"name", m.model_name}, {"model_size_mb", m.model_size_mb}, {"skewness", m.skewness}};
  if (!m.layer_param_sizes.empty()) j["layer_param_sizes"] = m.layer_param_sizes;
  if (!m.service_time_ms.empty()) {
    Json st = Json::object();
    for (const auto& [key, ms] : m.service_time_ms) {
      st[std::string(to_string(key.first))][std::string(to_string(key.second))] = ms;
    }
    j["service_time_ms"] = st;
  }
  return j;
}

Json to_json(const JobSpec& spec) {
  Json j{{"id", spec.job_id},
         {"kind", to_string(spec.kind)},
         {"required", to_json(spec.required)},
         {"gang_size", spec.gang_size},
         {"model", to_json(spec.model)},
         {"locality_tags", spec.locality_tags},
         {"arrival_time", spec.arrival_time}};
  if (spec.latency_threshold_ms) j["latency_threshold_ms"] = *spec.latency_threshold_ms;
  if (!spec.executor_args.empty()) j["executor"] = Json::parse(spec.executor_args);
  return j;
}

Json to_json(const Assignment& a) {
  return Json{{"worker", a.worker_id}, {"resources", to_json(a.resources)}};
}

ResourceVector read_resources(const Json& j, const std::string& path, FieldErrors& errors) {
  FieldReader r(j, path, errors);
  ResourceVector v;
  if (!r.ok()) return v;
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    auto key = dimension_name(d);
    v[d] = r.number_or(key, 0.0);
    if (v[d] < 0.0) errors.add(r.child_path(key), "must be >= 0");
  }
  r.reject_unknown({"gpus", "cpu_cores", "memory_mb", "disk_mb", "bandwidth_mbps"});
  return v;
}

ResourceWeights read_weights(const Json& j, const std::string& path, FieldErrors& errors) {
  FieldReader r(j, path, errors);
  ResourceWeights w;
  if (!r.ok()) return w;
  // A weights object replaces the defaults entirely; absent keys mean 0.
  for (std::size_t d = 0; d < kNumDimensions; ++d) w[d] = r.number_or(dimension_name(d), 0.0);
  r.reject_unknown({"gpus", "cpu_cores", "memory_mb", "disk_mb", "bandwidth_mbps"});
  try {
    w.validate();
  } catch (const ConfigError& e) {
    errors.add(path, e.what());
  }
  return w;
}

WorkerDescriptor read_worker_descriptor(const Json& j, const std::string& path,
                                        FieldErrors& errors) {
  FieldReader r(j, path, errors);
  WorkerDescriptor d;
  if (!r.ok()) return d;
  d.worker_id = r.string("id");
  if (const Json* cap = r.object("capacity")) {
    d.capacity = read_resources(*cap, r.child_path("capacity"), errors);
  }
  d.tags = r.string_set_or_empty("tags");
  d.address = r.string_or("address", "");
  r.reject_unknown({"id", "capacity", "tags", "address"});
  if (d.worker_id.empty() && r.has("id")) errors.add(r.child_path("id"), "must not be empty");
  if (d.capacity.is_zero() && r.has("capacity")) {
    errors.add(r.child_path("capacity"), "must be > 0 in at least one dimension");
  }
  return d;
}

ModelProfile read_model_profile(const Json& j, const std::string& path, FieldErrors& errors) {
  ModelProfile m;
  if (j.is_string()) {
    m.model_name = j.get<std::string>();
    return m;
  }
  FieldReader r(j, path, errors);
  if (!r.ok()) return m;
  m.model_name = r.string("name");
  m.model_size_mb = r.number_or("model_size_mb", 0.0);
  if (const Json* layers = r.array("layer_param_sizes", true)) {
    std::vector<double> sizes;
    for (std::size_t i = 0; i < layers->size(); ++i) {
      const Json& x = (*layers)[i];
      if (!x.is_number() || x.get<double>() < 0.0) {
        errors.add(fmt::format("{}[{}]", r.child_path("layer_param_sizes"), i),
                   "expected a number >= 0");
        continue;
      }
      sizes.push_back(x.get<double>());
    }
    try {
      m.set_layers(std::move(sizes));
    } catch (const DomainError& e) {
      errors.add(r.child_path("layer_param_sizes"), e.what());
    }
    if (r.has("skewness")) {
      double declared = r.number("skewness");
      if (std::abs(declared - m.skewness) > 1e-6 * std::max(1.0, m.skewness)) {
        errors.add(r.child_path("skewness"),
                   fmt::format("declared {} but layer sizes give {}", declared, m.skewness));
      }
    }
  } else {
    m.skewness = r.number_or("skewness", 0.0);
    if (m.skewness < 0.0) errors.add(r.child_path("skewness"), "must be >= 0");
  }
  if (const Json* st = r.object("service_time_ms", true)) {
    FieldReader sites(*st, r.child_path("service_time_ms"), errors);
    for (auto it = st->begin(); it != st->end(); ++it) {
      std::string site_path = sites.child_path(it.key());
      Site site;
      try {
        site = parse_site(it.key());
      } catch (const ValidationError& e) {
        errors.add(site_path, e.what());
        continue;
      }
      FieldReader devices(*it, site_path, errors);
      if (!devices.ok()) continue;
      for (auto dit = it->begin(); dit != it->end(); ++dit) {
        std::string dev_path = devices.child_path(dit.key());
        Device device;
        try {
          device = parse_device(dit.key());
        } catch (const ValidationError& e) {
          errors.add(dev_path, e.what());
          continue;
        }
        if (!dit->is_number() || !(dit->get<double>() > 0.0)) {
          errors.add(dev_path, "service time must be a number > 0");
          continue;
        }
        m.service_time_ms[{site, device}] = dit->get<double>();
      }
    }
  }
  r.reject_unknown({"name", "display_name", "model_size_mb", "layer_param_sizes", "skewness",
                    "service_time_ms"});
  return m;
}

JobSpec read_job_spec(const Json& j, const std::string& path, FieldErrors& errors) {
  FieldReader r(j, path, errors);
  JobSpec s;
  if (!r.ok()) return s;
  s.job_id = r.string("id");
  if (r.has("id") && s.job_id.empty()) errors.add(r.child_path("id"), "must not be empty");
  std::string kind = r.string_or("kind", "training");
  try {
    s.kind = parse_job_kind(kind);
  } catch (const ValidationError& e) {
    errors.add(r.child_path("kind"), e.what());
  }
  if (const Json* req = r.object("required")) {
    s.required = read_resources(*req, r.child_path("required"), errors);
  }
  s.gang_size = static_cast<int>(r.integer_or("gang_size", 1));
  if (s.gang_size < 1) errors.add(r.child_path("gang_size"), "must be >= 1");
  if (r.has("model")) {
    s.model = read_model_profile(j.at("model"), r.child_path("model"), errors);
  }
  s.locality_tags = r.string_set_or_empty("locality_tags");
  s.latency_threshold_ms = r.optional_number("latency_threshold_ms");
  s.arrival_time = r.number_or("arrival_time", 0.0);
  if (s.arrival_time < 0.0) errors.add(r.child_path("arrival_time"), "must be >= 0");
  if (r.has("executor")) s.executor_args = j.at("executor").dump();
  return s;
}

Assignment read_assignment(const Json& j, const std::string& path, FieldErrors& errors) {
  FieldReader r(j, path, errors);
  Assignment a;
  if (!r.ok()) return a;
  a.worker_id = r.string("worker");
  if (const Json* res = r.object("resources")) {
    a.resources = read_resources(*res, r.child_path("resources"), errors);
  }
  return a;
}

ResourceVector resources_from_json(const Json& j) {
  FieldErrors errors;
  auto v = read_resources(j, "resources", errors);
  errors.throw_if_any("resource vector");
  return v;
}

WorkerDescriptor worker_descriptor_from_json(const Json& j) {
  FieldErrors errors;
  auto d = read_worker_descriptor(j, "worker", errors);
  errors.throw_if_any("worker descriptor");
  return d;
}

JobSpec job_spec_from_json(const Json& j) {
  FieldErrors errors;
  auto s = read_job_spec(j, "job", errors);
  errors.throw_if_any("job spec");
  return s;
}

ResourceVector parse_resource_list(const std::string& text) {
  ResourceVector v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(fmt::format("capacity entry '{}' is not key=value", item));
    }
    std::string key = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    std::size_t dim = kNumDimensions;
    for (std::size_t d = 0; d < kNumDimensions; ++d) {
      if (dimension_name(d) == key) dim = d;
    }
    if (dim == kNumDimensions) {
      throw ValidationError(fmt::format("unknown resource dimension '{}'", key));
    }
    double x = 0.0;
    try {
      std::size_t used = 0;
      x = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("'{}' is not a number for {}", value, key));
    }
    if (x < 0.0) throw ValidationError(fmt::format("{} must be >= 0", key));
    v[dim] = x;
  }
  return v;
}

}  // namespace edgeoffload
