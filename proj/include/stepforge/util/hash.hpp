#pragma once

#include <string>
#include <string_view>

namespace stepforge::util {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Short stable identifier: prefix + first `length` hex chars of the digest.
std::string short_id(std::string_view prefix, std::string_view material, std::size_t length = 12);

}  // namespace stepforge::util
