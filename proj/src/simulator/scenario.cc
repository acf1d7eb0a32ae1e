#include "edgeoffload/simulator/scenario.h"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "edgeoffload/common/bundled.h"
#include "edgeoffload/common/error.h"
#include "edgeoffload/domain/json_io.h"
#include "edgeoffload/placement/placement.h"
#include "edgeoffload/scheduler/config_io.h"

namespace edgeoffload::sim {

std::string_view to_string(Policy policy) {
  switch (policy) {
    case Policy::kStLas:
      return "st-las";
    case Policy::kFifo:
      return "fifo";
    case Policy::kSrsfOracle:
      return "srsf-oracle";
  }
  return "?";
}

Policy parse_policy(std::string_view text) {
  std::string t;
  for (char c : text) t += c == '_' ? '-' : static_cast<char>(std::tolower(c));
  if (t == "st-las") return Policy::kStLas;
  if (t == "fifo") return Policy::kFifo;
  if (t == "srsf-oracle") return Policy::kSrsfOracle;
  throw ValidationError(fmt::format("unknown policy '{}' (st-las|fifo|srsf-oracle)", text));
}

ResourceVector Scenario::total_capacity() const {
  ResourceVector total;
  for (const auto& w : workers) total += w.capacity;
  return total;
}

namespace {

std::string at(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

}  // namespace

Scenario read_scenario(const Json& j, FieldErrors& errors, const ProfileCatalog& catalog) {
  Scenario s;
  FieldReader r(j, "", errors);
  if (!r.ok()) return s;
  r.reject_unknown({"name", "description", "policy", "seed", "scheduler", "cluster", "jobs",
                    "failures", "checkpoint_interval_s", "profiles", "requests", "pricing",
                    "tracking"});
  s.name = r.string_or("name", "scenario");
  s.description = r.string_or("description", "");
  try {
    s.policy = parse_policy(r.string_or("policy", "st-las"));
  } catch (const ValidationError& e) {
    errors.add("policy", e.what());
  }
  long long seed = r.integer_or("seed", 1);
  if (seed < 0) errors.add("seed", "must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);
  if (const Json* sc = r.object("scheduler", true)) {
    s.scheduler = read_scheduler_config(*sc, "scheduler", errors);
    try {
      s.scheduler.validate();
    } catch (const Error& e) {
      errors.add("scheduler", e.what());
    }
  }

  std::set<std::string> worker_ids;
  if (const Json* cluster = r.object("cluster")) {
    FieldReader cr(*cluster, "cluster", errors);
    cr.reject_unknown({"workers"});
    if (const Json* ws = cr.array("workers")) {
      for (std::size_t i = 0; i < ws->size(); ++i) {
        std::string path = at("cluster.workers", i);
        WorkerDescriptor d = read_worker_descriptor((*ws)[i], path, errors);
        if (!d.worker_id.empty() && !worker_ids.insert(d.worker_id).second) {
          errors.add(path + ".id", fmt::format("duplicate worker id '{}'", d.worker_id));
        }
        if (!d.worker_id.empty()) {
          try {
            d.validate();
          } catch (const ValidationError& e) {
            errors.add(path, e.what());
          }
        }
        s.workers.push_back(std::move(d));
      }
      if (ws->empty()) errors.add("cluster.workers", "at least one worker is required");
    }
  }
  ResourceVector capacity = s.total_capacity();
  ClusterView idle;
  for (const auto& w : s.workers) {
    WorkerRecord rec;
    rec.descriptor = w;
    idle.upsert(rec);
  }

  std::set<std::string> job_ids;
  if (const Json* js = r.array("jobs", true)) {
    for (std::size_t i = 0; i < js->size(); ++i) {
      std::string path = at("jobs", i);
      const Json& jj = (*js)[i];
      ScenarioJob job;
      if (jj.is_object()) {
        // true_duration_s is simulator-only; the domain reader must not see it.
        Json spec_json = jj;
        spec_json.erase("true_duration_s");
        FieldReader jr(spec_json, path, errors);
        jr.reject_unknown({"id", "kind", "required", "gang_size", "model", "locality_tags",
                           "latency_threshold_ms", "arrival_time", "executor"});
        job.spec = read_job_spec(spec_json, path, errors);
        FieldReader dr(jj, path, errors);
        job.true_duration_s = dr.optional_number("true_duration_s");
      } else {
        errors.add(path, "expected an object");
        continue;
      }
      if (const ModelProfile* m = catalog.find(job.spec.model.model_name);
          m != nullptr && job.spec.model.service_time_ms.empty() &&
          job.spec.model.layer_param_sizes.empty()) {
        job.spec.model = *m;
      }
      if (!job.spec.job_id.empty() && !job_ids.insert(job.spec.job_id).second) {
        errors.add(path + ".id", fmt::format("duplicate job id '{}'", job.spec.job_id));
      }
      if (job.true_duration_s) {
        if (!(*job.true_duration_s > 0.0)) errors.add(path + ".true_duration_s", "must be > 0");
      } else if (job.spec.kind == JobKind::kTraining) {
        errors.add(path + ".true_duration_s", "training jobs need a duration");
      }
      if (!s.workers.empty() && !fits(job.spec.total_demand(), capacity)) {
        errors.add(path + ".required",
                   fmt::format("gang demand {} exceeds cluster capacity {}",
                               job.spec.total_demand().to_string(), capacity.to_string()));
      } else if (!s.workers.empty() && !place_gang(job.spec, idle, s.scheduler.placement)) {
        errors.add(path + ".required", "gang cannot be placed even on an idle cluster");
      }
      s.jobs.push_back(std::move(job));
    }
  }

  if (const Json* fs = r.array("failures", true)) {
    for (std::size_t i = 0; i < fs->size(); ++i) {
      std::string path = at("failures", i);
      FieldReader fr((*fs)[i], path, errors);
      if (!fr.ok()) continue;
      fr.reject_unknown({"worker", "time", "recover_at"});
      WorkerFailure f;
      f.worker_id = fr.string("worker");
      f.time = fr.number("time");
      f.recover_at = fr.optional_number("recover_at");
      if (!f.worker_id.empty() && !worker_ids.count(f.worker_id)) {
        errors.add(path + ".worker", fmt::format("unknown worker '{}'", f.worker_id));
      }
      if (f.time < 0.0) errors.add(path + ".time", "must be >= 0");
      if (f.recover_at && !(*f.recover_at > f.time)) {
        errors.add(path + ".recover_at", "must be after time");
      }
      s.failures.push_back(std::move(f));
    }
  }
  s.checkpoint_interval_s = r.number_or("checkpoint_interval_s", 0.0);
  if (s.checkpoint_interval_s < 0.0) errors.add("checkpoint_interval_s", "must be >= 0");

  if (const Json* ps = r.object("profiles", true)) {
    for (auto it = ps->begin(); it != ps->end(); ++it) {
      s.profiles[it.key()] =
          read_latency_profile(it.value(), "profiles." + it.key(), errors, &catalog);
    }
  }
  if (const Json* rs = r.array("requests", true)) {
    for (std::size_t i = 0; i < rs->size(); ++i) {
      std::string path = at("requests", i);
      FieldReader rr((*rs)[i], path, errors);
      if (!rr.ok()) continue;
      rr.reject_unknown({"profile", "count", "payload_bytes", "start_s", "interval_s"});
      RequestStream q;
      q.profile = rr.string("profile");
      q.count = static_cast<int>(rr.integer("count"));
      q.payload_bytes = rr.number_or("payload_bytes", q.payload_bytes);
      q.start_s = rr.number_or("start_s", 0.0);
      q.interval_s = rr.number_or("interval_s", 1.0);
      if (!q.profile.empty() && !s.profiles.count(q.profile)) {
        errors.add(path + ".profile", fmt::format("unknown profile '{}'", q.profile));
      }
      if (q.count < 1) errors.add(path + ".count", "must be >= 1");
      if (q.payload_bytes < 0.0) errors.add(path + ".payload_bytes", "must be >= 0");
      if (q.start_s < 0.0) errors.add(path + ".start_s", "must be >= 0");
      if (!(q.interval_s > 0.0)) errors.add(path + ".interval_s", "must be > 0");
      s.requests.push_back(std::move(q));
    }
  }
  if (const Json* p = r.object("pricing", true)) s.pricing = read_pricing_file(*p, "pricing", errors);
  if (const Json* t = r.object("tracking", true)) {
    s.tracking = read_tracking_config(*t, "tracking", errors);
  }
  return s;
}

Scenario load_scenario(const std::string& name_or_path) {
  std::string source;
  std::string text = load_bundled_or_file(name_or_path, &source);
  Json j = parse_json_text(text, source);
  JsonLocator locator(text);
  ProfileCatalog catalog = load_profile_catalog("table2_profiles");
  FieldErrors errors;
  Scenario s = read_scenario(j, errors, catalog);
  errors.throw_if_any(fmt::format("scenario {}", source), &locator);
  return s;
}

}  // namespace edgeoffload::sim
