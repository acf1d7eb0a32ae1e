#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace edgeoffload {

// Fixture files shipped in data/, keyed by file stem ("ab_demo",
// "table1_pricing", ...). Compiled in at build time.
const std::map<std::string, std::string_view>& bundled_files();

// Contents of the bundled file `name`, if there is one.
std::optional<std::string_view> bundled_file(const std::string& name);

// `name_or_path` is looked up among the bundled files first, then read from
// disk. `source_name` receives the label to use in diagnostics.
std::string load_bundled_or_file(const std::string& name_or_path, std::string* source_name);

}  // namespace edgeoffload
