#pragma once

#include <string>

namespace spires {

// 64-char lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(const std::string& data);

} // namespace spires
