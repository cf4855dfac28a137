#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fpscore::detail {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::uint32_t crc32(std::string_view data);

} // namespace fpscore::detail
