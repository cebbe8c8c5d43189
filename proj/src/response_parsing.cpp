#include "atf/response_parsing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include "atf/errors.hpp"
#include "atf/text.hpp"

namespace atf {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        out.push_back(line);
        start = end + 1;
    }
    return out;
}

// Drops list bullets, numbering and markdown emphasis around a line.
std::string clean_line(std::string_view line) {
    std::string_view s = text::trim(line);
    if (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '+') && s.size() > 1 &&
        s[1] == ' ') {
        s.remove_prefix(2);
    }
    std::size_t digits = 0;
    while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) {
        ++digits;
    }
    if (digits > 0 && digits + 1 < s.size() && (s[digits] == '.' || s[digits] == ')') && s[digits + 1] == ' ') {
        s.remove_prefix(digits + 2);
    }
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '`' || (s[i] == '*' && i + 1 < s.size() && s[i + 1] == '*')) {
            if (s[i] == '*') {
                ++i;
            }
            continue;
        }
        out.push_back(s[i]);
    }
    return std::string(text::trim(out));
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && text::iequals(s.substr(0, prefix.size()), prefix);
}

// Returns the header and the text after its ':' separator.
bool split_header_line(const std::string& line, std::span<const std::string> headers, std::string& header,
                       std::string& rest) {
    std::size_t best_len = 0;
    bool found = false;
    for (int pass = 0; pass < 2 && !found; ++pass) {
        for (const auto& h : headers) {
            const bool ok = pass == 0 ? line.compare(0, h.size(), h) == 0 : starts_with_ci(line, h);
            if (!ok || h.size() < best_len) {
                continue;
            }
            std::size_t i = h.size();
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '"' || line[i] == '\'')) {
                ++i;
            }
            if (i < line.size() && line[i] == ':') {
                best_len = h.size();
                header = h;
                rest = std::string(text::trim(std::string_view(line).substr(i + 1)));
                found = true;
            }
        }
    }
    return found;
}

} // namespace

nlohmann::json extract_json_object(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                auto parsed = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!parsed.is_discarded() && parsed.is_object()) {
                    return parsed;
                }
                break;
            }
        }
    }
    throw ParseError("response contains no JSON object");
}

std::map<std::string, double> parse_entity_response(std::string_view text) {
    const auto obj = extract_json_object(text);
    std::map<std::string, double> out;
    for (const auto& [key, value] : obj.items()) {
        double v = 0.0;
        if (value.is_number()) {
            v = value.get<double>();
        } else if (value.is_string()) {
            const std::string s = value.get<std::string>();
            char* end = nullptr;
            v = std::strtod(s.c_str(), &end);
            if (end == s.c_str()) {
                continue;
            }
        } else {
            continue;
        }
        if (!std::isfinite(v)) {
            continue;
        }
        const std::string name = text::to_lower(text::trim(key));
        if (name.empty()) {
            continue;
        }
        out[name] = std::clamp(v, 0.0, 1.0);
    }
    if (out.empty()) {
        throw ParseError("entity response has no numeric entries");
    }
    return out;
}

std::vector<std::string> parse_string_list(std::string_view text) {
    const std::size_t open = text.find('[');
    if (open == std::string_view::npos) {
        throw ParseError("response contains no list");
    }
    std::vector<std::string> out;
    std::size_t i = open + 1;
    for (;;) {
        while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ',')) {
            ++i;
        }
        if (i >= text.size()) {
            throw ParseError("unterminated list");
        }
        if (text[i] == ']') {
            return out;
        }
        const char quote = text[i];
        if (quote != '"' && quote != '\'') {
            throw ParseError("list element is not a quoted string");
        }
        ++i;
        std::string item;
        bool closed = false;
        while (i < text.size()) {
            const char c = text[i++];
            if (c == '\\' && i < text.size()) {
                item.push_back(text[i++]);
            } else if (c == quote) {
                closed = true;
                break;
            } else {
                item.push_back(c);
            }
        }
        if (!closed) {
            throw ParseError("unterminated string in list");
        }
        out.push_back(std::move(item));
    }
}

ColumnMatch match_columns(std::span<const std::string> names, std::span<const std::string> headers) {
    ColumnMatch m;
    std::set<std::string> seen;
    for (const auto& name : names) {
        const std::string* hit = nullptr;
        for (const auto& h : headers) {
            if (h == name) {
                hit = &h;
                break;
            }
        }
        if (hit == nullptr) {
            const auto trimmed = text::trim(name);
            for (const auto& h : headers) {
                if (text::iequals(text::trim(h), trimmed)) {
                    hit = &h;
                    break;
                }
            }
        }
        if (hit == nullptr) {
            m.unmatched.push_back(name);
        } else if (seen.insert(*hit).second) {
            m.matched.push_back(*hit);
        }
    }
    return m;
}

std::map<std::string, std::string> parse_column_lines(std::string_view text, std::span<const std::string> headers) {
    std::map<std::string, std::string> out;
    for (auto raw : split_lines(text)) {
        const std::string line = clean_line(raw);
        std::string header;
        std::string rest;
        if (split_header_line(line, headers, header, rest) && !rest.empty() && out.count(header) == 0) {
            out.emplace(header, rest);
        }
    }
    return out;
}

std::map<std::string, double> parse_score_lines(std::string_view text, std::span<const std::string> headers) {
    std::map<std::string, double> out;
    for (auto raw : split_lines(text)) {
        const std::string line = clean_line(raw);
        std::string header;
        std::string rest;
        if (!split_header_line(line, headers, header, rest)) {
            continue;
        }
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str() || !std::isfinite(v) || out.count(header) > 0) {
            continue;
        }
        out.emplace(header, std::clamp(v, 0.0, 1.0));
    }
    if (out.empty()) {
        throw ParseError("score response has no 'column: score' lines");
    }
    return out;
}

} // namespace atf
