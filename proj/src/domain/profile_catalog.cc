#include "edgeoffload/domain/profile_catalog.h"

#include <set>

#include <fmt/format.h>

#include "edgeoffload/common/bundled.h"
#include "edgeoffload/common/error.h"
#include "edgeoffload/domain/json_io.h"

namespace edgeoffload {

const ModelProfile* ProfileCatalog::find(const std::string& model_name) const {
  for (const auto& m : models) {
    if (m.model_name == model_name) return &m;
  }
  return nullptr;
}

std::string ProfileCatalog::display_name(const std::string& model_name) const {
  auto it = display_names.find(model_name);
  return it == display_names.end() ? model_name : it->second;
}

ProfileCatalog read_profile_catalog(const Json& j, const std::string& path, FieldErrors& errors) {
  ProfileCatalog catalog;
  FieldReader r(j, path, errors);
  if (!r.ok()) return catalog;
  catalog.payload_bytes = r.number_or("payload_bytes", catalog.payload_bytes);
  if (catalog.payload_bytes < 0) errors.add(r.child_path("payload_bytes"), "must be >= 0");
  if (const Json* jitter = r.object("jitter_fraction", true)) {
    FieldReader jr(*jitter, r.child_path("jitter_fraction"), errors);
    for (Site site : {Site::kCloud, Site::kOnPrem}) {
      std::string key(to_string(site));
      double f = jr.number_or(key, catalog.jitter_fraction[site]);
      if (f < 0) errors.add(jr.child_path(key), "must be >= 0");
      catalog.jitter_fraction[site] = f;
    }
    jr.reject_unknown({"cloud", "onprem"});
  }
  std::set<std::string> seen;
  if (const Json* models = r.array("models")) {
    for (std::size_t i = 0; i < models->size(); ++i) {
      std::string item_path = fmt::format("{}[{}]", r.child_path("models"), i);
      const Json& item = (*models)[i];
      ModelProfile m = read_model_profile(item, item_path, errors);
      if (m.model_name.empty()) continue;
      if (!seen.insert(m.model_name).second) {
        errors.add(item_path + ".name", fmt::format("duplicate model '{}'", m.model_name));
        continue;
      }
      if (item.is_object() && item.contains("display_name") && item["display_name"].is_string()) {
        catalog.display_names[m.model_name] = item["display_name"].get<std::string>();
      }
      catalog.models.push_back(std::move(m));
    }
  }
  r.reject_unknown({"description", "payload_bytes", "jitter_fraction", "models"});
  return catalog;
}

ProfileCatalog load_profile_catalog(const std::string& name_or_path) {
  std::string source;
  std::string text = load_bundled_or_file(name_or_path, &source);
  Json j = parse_json_text(text, source);
  FieldErrors errors;
  ProfileCatalog catalog = read_profile_catalog(j, "profiles", errors);
  errors.throw_if_any(source);
  return catalog;
}

}  // namespace edgeoffload
