#pragma once

#include <string>

#include "edgeoffload/common/json_fields.h"
#include "edgeoffload/domain/job.h"
#include "edgeoffload/domain/model_profile.h"
#include "edgeoffload/domain/resources.h"
#include "edgeoffload/domain/worker.h"

// JSON mappings for the domain types. The read_* functions record problems in
// `errors` and keep going; the *_from_json wrappers throw ValidationError.
namespace edgeoffload {

Json to_json(const ResourceVector& v);
Json to_json(const ResourceWeights& w);
Json to_json(const WorkerDescriptor& d);
Json to_json(const ModelProfile& m);
Json to_json(const JobSpec& spec);
Json to_json(const Assignment& a);

ResourceVector read_resources(const Json& j, const std::string& path, FieldErrors& errors);
ResourceWeights read_weights(const Json& j, const std::string& path, FieldErrors& errors);
WorkerDescriptor read_worker_descriptor(const Json& j, const std::string& path,
                                        FieldErrors& errors);
ModelProfile read_model_profile(const Json& j, const std::string& path, FieldErrors& errors);
JobSpec read_job_spec(const Json& j, const std::string& path, FieldErrors& errors);
Assignment read_assignment(const Json& j, const std::string& path, FieldErrors& errors);

ResourceVector resources_from_json(const Json& j);
WorkerDescriptor worker_descriptor_from_json(const Json& j);
JobSpec job_spec_from_json(const Json& j);

// Parses "gpus=1,cpu_cores=4,memory_mb=8192" (the CLI capacity syntax).
ResourceVector parse_resource_list(const std::string& text);

}  // namespace edgeoffload
