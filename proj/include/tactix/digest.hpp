#pragma once

#include <string>
#include <string_view>

namespace tactix {

/// Lowercase hex SHA-256 of bytes.
std::string sha256_hex(std::string_view bytes);

/// Reads a whole file as bytes; throws std::runtime_error if unreadable.
std::string read_file(const std::string& path);

} // namespace tactix
