#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "edgeoffload/common/json_fields.h"

namespace edgeoffload::protocol {

// Frame bodies carry base64 payloads of a few hundred kilobytes; these go
// through RapidJSON's reader and writer instead of nlohmann's.

// Compact JSON. Non-finite numbers are written as null.
std::string write_json(const Json& value);

struct JsonSyntaxError {
  std::size_t offset = 0;
  std::string message;
};

// Strict RFC 8259 parse with UTF-8 validation and exact doubles. Duplicate
// keys keep the last value. Throws JsonSyntaxError.
Json read_json(std::string_view text);

}  // namespace edgeoffload::protocol
