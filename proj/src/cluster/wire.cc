#include "edgeoffload/cluster/wire.h"

#include <fmt/format.h>

#include "edgeoffload/domain/json_io.h"
#include "edgeoffload/protocol/encoding.h"

namespace edgeoffload::cluster {

namespace {

std::vector<std::string> string_list(FieldReader& r, std::string_view key) {
  std::vector<std::string> out;
  const Json* a = r.array(key, true);
  if (a == nullptr) return out;
  for (std::size_t i = 0; i < a->size(); ++i) {
    if (!(*a)[i].is_string()) {
      r.errors().add(fmt::format("{}[{}]", r.child_path(key), i), "expected a string");
      continue;
    }
    out.push_back((*a)[i].get<std::string>());
  }
  return out;
}

}  // namespace

Json to_json(const HeartbeatReport& report) {
  Json progress = Json::object();
  for (const auto& [job, delta] : report.progress) progress[job] = delta;
  return Json{{"worker_id", report.worker_id},
              {"utilization", report.utilization},
              {"progress", progress},
              {"completed", report.completed},
              {"running", report.running}};
}

HeartbeatReport heartbeat_report_from_json(const Json& payload) {
  FieldErrors errors;
  FieldReader r(payload, "payload", errors);
  HeartbeatReport report;
  report.worker_id = r.string("worker_id");
  if (const Json* u = r.array("utilization", true)) {
    if (u->size() != kNumDimensions) {
      errors.add(r.child_path("utilization"),
                 fmt::format("expected {} fractions", kNumDimensions));
    } else {
      for (std::size_t i = 0; i < kNumDimensions; ++i) {
        const Json& x = (*u)[i];
        if (!x.is_number() || x.get<double>() < 0.0) {
          errors.add(fmt::format("{}[{}]", r.child_path("utilization"), i),
                     "expected a number >= 0");
        } else {
          report.utilization[i] = x.get<double>();
        }
      }
    }
  }
  if (const Json* p = r.object("progress", true)) {
    for (auto it = p->begin(); it != p->end(); ++it) {
      if (!it.value().is_number()) {
        errors.add(fmt::format("{}.{}", r.child_path("progress"), it.key()), "expected a number");
        continue;
      }
      report.progress[it.key()] = it.value().get<double>();
    }
  }
  report.completed = string_list(r, "completed");
  report.running = string_list(r, "running");
  errors.throw_if_any("heartbeat");
  return report;
}

Json to_json(const HeartbeatAck& ack) {
  return Json{{"reregister", ack.reregister}, {"stop_jobs", ack.stop_jobs}};
}

HeartbeatAck heartbeat_ack_from_json(const Json& payload) {
  FieldErrors errors;
  FieldReader r(payload, "payload", errors);
  HeartbeatAck ack;
  ack.reregister = r.boolean_or("reregister", false);
  ack.stop_jobs = string_list(r, "stop_jobs");
  errors.throw_if_any("heartbeat ack");
  return ack;
}

DispatchCommand dispatch_command_from_json(const Json& payload) {
  FieldErrors errors;
  FieldReader r(payload, "payload", errors);
  DispatchCommand c;
  c.job_id = r.string("job_id");
  if (const Json* job = r.object("job")) c.job = read_job_spec(*job, r.child_path("job"), errors);
  if (const Json* res = r.object("resources", true)) {
    c.resources = read_resources(*res, r.child_path("resources"), errors);
  } else {
    c.resources = c.job.required;
  }
  c.primary = r.boolean_or("primary", true);
  if (const Json* ck = r.object("checkpoint", true)) {
    FieldReader cr(*ck, r.child_path("checkpoint"), errors);
    c.checkpoint_version = static_cast<int>(cr.integer("version"));
    c.executed_time_s = cr.number_or("executed_time_s", 0.0);
    std::string blob = cr.string("blob");
    try {
      c.blob = protocol::base64_decode(blob);
    } catch (const std::exception& e) {
      errors.add(cr.child_path("blob"), e.what());
    }
  }
  errors.throw_if_any("dispatch command");
  return c;
}

}  // namespace edgeoffload::cluster
