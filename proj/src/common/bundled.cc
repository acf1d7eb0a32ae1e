#include "edgeoffload/common/bundled.h"

#include "edgeoffload/common/json_fields.h"

namespace edgeoffload {

std::optional<std::string_view> bundled_file(const std::string& name) {
  const auto& files = bundled_files();
  auto it = files.find(name);
  if (it == files.end()) return std::nullopt;
  return it->second;
}

std::string load_bundled_or_file(const std::string& name_or_path, std::string* source_name) {
  if (auto text = bundled_file(name_or_path)) {
    if (source_name != nullptr) *source_name = "<bundled:" + name_or_path + ">";
    return std::string(*text);
  }
  if (source_name != nullptr) *source_name = name_or_path;
  return read_text_file(name_or_path);
}

}  // namespace edgeoffload
