#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace speeji {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Throws InputError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace speeji
