#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace atf::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;
bool contains_word(const std::vector<std::string>& words, std::string_view w);

/// ASCII alphanumerics plus every non-ASCII byte count as word characters,
/// so UTF-8 letters stay inside words.
bool is_word_byte(char c) noexcept;

/// Lowercased maximal runs of word characters.
std::vector<std::string> word_tokens(std::string_view s);

/// Splits a column header into name components: underscores, whitespace and
/// lower-to-upper camel-case boundaries separate components. Lowercased.
std::vector<std::string> header_components(std::string_view header);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace atf::text
