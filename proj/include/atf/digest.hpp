#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace atf {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

} // namespace atf
