#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace atf {

/// The first balanced JSON object in `text`, tolerating code fences and
/// surrounding prose. Throws ParseError.
nlohmann::json extract_json_object(std::string_view text);

/// Entity name (lowercased, trimmed) to confidence clamped to [0,1].
/// Throws ParseError when no usable entry is found.
std::map<std::string, double> parse_entity_response(std::string_view text);

/// A bracketed list of single- or double-quoted strings. Throws ParseError.
std::vector<std::string> parse_string_list(std::string_view text);

struct ColumnMatch {
    std::vector<std::string> matched;
    std::vector<std::string> unmatched;
};

/// Exact header match first, then case-insensitive on trimmed names.
/// Duplicates are dropped; matched names keep response order.
ColumnMatch match_columns(std::span<const std::string> names, std::span<const std::string> headers);

/// `header: text` lines keyed by header. The longest header that prefixes a
/// line wins, so headers containing ':' still parse. Unknown lines are skipped.
std::map<std::string, std::string> parse_column_lines(std::string_view text, std::span<const std::string> headers);

/// `header: score` lines, scores clamped to [0,1]. Throws ParseError when no
/// line yields a score.
std::map<std::string, double> parse_score_lines(std::string_view text, std::span<const std::string> headers);

} // namespace atf
