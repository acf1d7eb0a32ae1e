#pragma once

#include <string>
#include <string_view>

namespace edgeoffload::protocol {

std::string base64_encode(std::string_view bytes);
// Throws ProtocolError(kSchema) on malformed input.
std::string base64_decode(std::string_view text);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace edgeoffload::protocol
