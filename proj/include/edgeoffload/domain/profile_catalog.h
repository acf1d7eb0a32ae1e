#pragma once

#include <map>
#include <string>
#include <vector>

#include "edgeoffload/common/json_fields.h"
#include "edgeoffload/domain/model_profile.h"

namespace edgeoffload {

// A named set of model latency profiles (the bundled "table2_profiles" file
// or a user-supplied one).
struct ProfileCatalog {
  std::vector<ModelProfile> models;  // file order
  std::map<std::string, std::string> display_names;
  double payload_bytes = 196608;
  std::map<Site, double> jitter_fraction{{Site::kCloud, 0.3}, {Site::kOnPrem, 0.05}};

  // nullptr when the catalog has no such model.
  const ModelProfile* find(const std::string& model_name) const;
  std::string display_name(const std::string& model_name) const;
};

ProfileCatalog read_profile_catalog(const Json& j, const std::string& path, FieldErrors& errors);
// Bundled name or file path. Throws ParseError / ValidationError.
ProfileCatalog load_profile_catalog(const std::string& name_or_path);

}  // namespace edgeoffload
