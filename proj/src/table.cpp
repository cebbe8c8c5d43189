#include "atf/table.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "atf/errors.hpp"
#include "atf/log.hpp"
#include "atf/random.hpp"
#include "atf/text.hpp"
#include "atf/tokenizer.hpp"

namespace atf {

// ---------------------------------------------------------------------------
// logging (lives here to avoid a translation unit of its own)

namespace {

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

LogSink& log_sink() {
    static LogSink sink = [](LogLevel level, std::string_view msg) {
        if (level >= LogLevel::warning) {
            std::cerr << (level == LogLevel::error ? "error: " : "warning: ") << msg << '\n';
        }
    };
    return sink;
}

} // namespace

void set_log_sink(LogSink sink) {
    std::lock_guard lock(log_mutex());
    log_sink() = std::move(sink);
}

void log(LogLevel level, std::string_view message) {
    std::lock_guard lock(log_mutex());
    if (log_sink()) {
        log_sink()(level, message);
    }
}

// ---------------------------------------------------------------------------
// Table

Table::Table(std::vector<std::string> headers, std::vector<std::vector<std::string>> rows,
             std::optional<std::string> source_id)
    : headers_(std::move(headers)), rows_(std::move(rows)), source_id_(std::move(source_id)) {
    if (headers_.empty()) {
        throw SchemaError("table has no headers");
    }
    std::unordered_set<std::string> seen;
    for (auto& h : headers_) {
        h = std::string(text::trim(h));
        if (h.empty()) {
            throw SchemaError("table has an empty header");
        }
        if (!seen.insert(h).second) {
            throw SchemaError("duplicate header: '" + h + "'");
        }
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].size() != headers_.size()) {
            throw SchemaError("row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                              " cells, expected " + std::to_string(headers_.size()));
        }
    }
}

std::size_t Table::column_index(std::string_view name) const {
    auto it = std::find(headers_.begin(), headers_.end(), name);
    if (it == headers_.end()) {
        throw UnknownColumn(std::string(name));
    }
    return static_cast<std::size_t>(it - headers_.begin());
}

bool Table::has_column(std::string_view name) const noexcept {
    return std::find(headers_.begin(), headers_.end(), name) != headers_.end();
}

const std::string& Table::cell(std::size_t row, std::size_t col) const {
    if (row >= rows_.size()) {
        throw RowOutOfRange("row " + std::to_string(row) + " out of range (n=" + std::to_string(rows_.size()) + ")");
    }
    return rows_[row].at(col);
}

const std::string& Table::cell(std::size_t row, std::string_view column) const {
    return cell(row, column_index(column));
}

Table Table::select(std::span<const std::string> columns, std::span<const std::size_t> rows) const {
    std::vector<std::size_t> cols;
    cols.reserve(columns.size());
    for (const auto& c : columns) {
        cols.push_back(column_index(c));
    }
    std::vector<std::vector<std::string>> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= rows_.size()) {
            throw RowOutOfRange("row " + std::to_string(r) + " out of range (n=" + std::to_string(rows_.size()) + ")");
        }
        std::vector<std::string> row;
        row.reserve(cols.size());
        for (std::size_t c : cols) {
            row.push_back(rows_[r][c]);
        }
        out.push_back(std::move(row));
    }
    return Table(std::vector<std::string>(columns.begin(), columns.end()), std::move(out), source_id_);
}

// ---------------------------------------------------------------------------
// loading

namespace {

// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view src) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool record_has_content = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        // A record consisting of a single empty, unquoted field is a blank line.
        if (record_has_content) {
            records.push_back(std::move(record));
        }
        record.clear();
        record_has_content = false;
    };

    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < src.size() && src[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                in_quotes = false;
                ++i;
                continue;
            }
            field.push_back(c);
            ++i;
            continue;
        }
        switch (c) {
        case '"':
            if (!text::trim(field).empty() || field_was_quoted) {
                throw ParseError("unexpected quote inside unquoted CSV field at byte " + std::to_string(i));
            }
            field.clear();
            in_quotes = true;
            field_was_quoted = true;
            record_has_content = true;
            ++i;
            break;
        case ',':
            end_field();
            record_has_content = true;
            ++i;
            break;
        case '\r':
            ++i;
            if (i < src.size() && src[i] == '\n') {
                ++i;
            }
            end_record();
            break;
        case '\n':
            ++i;
            end_record();
            break;
        default:
            if (field_was_quoted && !std::isspace(static_cast<unsigned char>(c))) {
                throw ParseError("characters after closing quote at byte " + std::to_string(i));
            }
            if (!field_was_quoted) {
                field.push_back(c);
            }
            if (!std::isspace(static_cast<unsigned char>(c))) {
                record_has_content = true;
            }
            ++i;
            break;
        }
    }
    if (in_quotes) {
        throw ParseError("unterminated quoted CSV field");
    }
    if (!field.empty() || !record.empty() || record_has_content) {
        end_record();
    }
    return records;
}

Table table_from_csv(std::string_view src) {
    // Strip a UTF-8 byte order mark.
    if (src.size() >= 3 && src.substr(0, 3) == "\xEF\xBB\xBF") {
        src.remove_prefix(3);
    }
    auto records = parse_csv_records(src);
    if (records.empty()) {
        throw SchemaError("CSV input has no header record");
    }
    std::vector<std::string> headers = std::move(records.front());
    const std::size_t width = headers.size();
    std::vector<std::vector<std::string>> rows;
    rows.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        auto& rec = records[r];
        if (rec.size() > width) {
            throw SchemaError("CSV row " + std::to_string(r - 1) + " has " + std::to_string(rec.size()) +
                              " fields, more than the " + std::to_string(width) + " headers");
        }
        if (rec.size() < width) {
            log_warning("CSV row " + std::to_string(r - 1) + " has " + std::to_string(rec.size()) +
                        " fields; padding to " + std::to_string(width));
            rec.resize(width);
        }
        for (auto& cell : rec) {
            cell = std::string(text::trim(cell));
        }
        rows.push_back(std::move(rec));
    }
    return Table(std::move(headers), std::move(rows));
}

std::string cell_text(const nlohmann::json& v) {
    if (v.is_string()) {
        return std::string(text::trim(v.get<std::string>()));
    }
    if (v.is_null()) {
        return {};
    }
    if (v.is_number() || v.is_boolean()) {
        return v.dump();
    }
    throw SchemaError("table cells must be scalars");
}

} // namespace

Table table_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("headers") || !j["headers"].is_array()) {
        throw SchemaError("JSON table needs a \"headers\" array");
    }
    std::vector<std::string> headers;
    for (const auto& h : j["headers"]) {
        if (!h.is_string()) {
            throw SchemaError("headers must be strings");
        }
        headers.push_back(h.get<std::string>());
    }
    const std::size_t width = headers.size();
    std::vector<std::vector<std::string>> rows;
    if (j.contains("rows")) {
        if (!j["rows"].is_array()) {
            throw SchemaError("\"rows\" must be an array");
        }
        std::size_t r = 0;
        for (const auto& row : j["rows"]) {
            if (!row.is_array()) {
                throw SchemaError("each row must be an array");
            }
            if (row.size() > width) {
                throw SchemaError("JSON row " + std::to_string(r) + " is wider than the headers");
            }
            std::vector<std::string> cells;
            for (const auto& v : row) {
                cells.push_back(cell_text(v));
            }
            if (cells.size() < width) {
                log_warning("JSON row " + std::to_string(r) + " padded to " + std::to_string(width) + " cells");
                cells.resize(width);
            }
            rows.push_back(std::move(cells));
            ++r;
        }
    }
    std::optional<std::string> source;
    if (j.contains("source_id") && j["source_id"].is_string()) {
        source = j["source_id"].get<std::string>();
    }
    return Table(std::move(headers), std::move(rows), std::move(source));
}

Table load_table(std::string_view source, TableFormat format) {
    if (format == TableFormat::csv) {
        return table_from_csv(source);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(source);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON table: ") + e.what());
    }
    return table_from_json(j);
}

Table load_table(std::istream& source, TableFormat format) {
    std::ostringstream buf;
    buf << source.rdbuf();
    return load_table(buf.str(), format);
}

Table load_table_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open table file: " + path);
    }
    const bool is_json = path.size() >= 5 && text::iequals(std::string_view(path).substr(path.size() - 5), ".json");
    return load_table(in, is_json ? TableFormat::json : TableFormat::csv);
}

// ---------------------------------------------------------------------------
// serialization

namespace {

std::string csv_field(const std::string& v) {
    const bool needs_quotes = v.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) {
        return v;
    }
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void append_csv_record(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out.push_back(',');
        }
        out += csv_field(fields[i]);
    }
    // A lone empty field would read back as a blank line.
    if (fields.size() == 1 && fields[0].empty()) {
        out += "\"\"";
    }
    out.push_back('\n');
}

} // namespace

std::string to_csv(const Table& table) {
    std::string out;
    append_csv_record(out, table.headers());
    for (const auto& row : table.rows()) {
        append_csv_record(out, row);
    }
    return out;
}

nlohmann::json to_json(const Table& table) {
    nlohmann::json j;
    j["headers"] = table.headers();
    j["rows"] = table.rows();
    if (table.source_id()) {
        j["source_id"] = *table.source_id();
    }
    return j;
}

// ---------------------------------------------------------------------------
// operations

std::vector<std::string> sample_cell_values(const Table& table, std::string_view column, std::size_t k,
                                            std::uint64_t seed) {
    const std::size_t col = table.column_index(column);
    if (k == 0) {
        throw RangeError("sample size k must be >= 1");
    }
    const std::size_t n = table.n_rows();
    std::vector<std::size_t> positions(n);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    if (n > k) {
        // Partial Fisher-Yates: the first k slots are a uniform k-subset.
        Rng rng(seed);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(positions[i], positions[j]);
        }
        positions.resize(k);
        std::sort(positions.begin(), positions.end());
    }
    std::vector<std::string> out;
    out.reserve(positions.size());
    for (std::size_t r : positions) {
        out.push_back(table.rows()[r][col]);
    }
    return out;
}

std::string flatten_row_text(const Table& table, std::size_t row_index, std::span<const std::string> columns) {
    if (row_index >= table.n_rows()) {
        throw RowOutOfRange("row " + std::to_string(row_index) + " out of range (n=" +
                            std::to_string(table.n_rows()) + ")");
    }
    std::string out;
    for (const auto& c : columns) {
        const auto& v = table.rows()[row_index][table.column_index(c)];
        if (v.empty()) {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += v;
    }
    return out;
}

Linearized linearize_table(const Table& table, std::string_view tokenizer_name,
                           std::span<const std::size_t> row_labels) {
    const auto& counter = tokenizer(tokenizer_name);
    if (!row_labels.empty() && row_labels.size() != table.n_rows()) {
        throw LengthMismatch("row label count does not match row count");
    }
    std::string out = "col: ";
    out += text::join(table.headers(), " | ");
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        out += "\nrow ";
        out += std::to_string(row_labels.empty() ? r : row_labels[r]);
        out += ": ";
        out += text::join(table.rows()[r], " | ");
    }
    Linearized result;
    result.token_count = counter(out);
    result.text = std::move(out);
    return result;
}

Linearized linearize_table(const FilteredTable& filtered, std::string_view tokenizer_name) {
    return linearize_table(filtered.table, tokenizer_name, filtered.selected_row_indices);
}

namespace {

ReductionStats stats_for(const Table& raw, const Table& kept, std::span<const std::size_t> kept_labels,
                         std::string_view tokenizer_name) {
    ReductionStats s;
    s.raw_rows = raw.n_rows();
    s.raw_cols = raw.n_cols();
    s.kept_rows = kept.n_rows();
    s.kept_cols = kept.n_cols();
    s.raw_cells = s.raw_rows * s.raw_cols;
    s.kept_cells = s.kept_rows * s.kept_cols;
    s.cell_reduction_ratio =
        s.raw_cells == 0 ? 0.0
                         : static_cast<double>(s.raw_cells - s.kept_cells) / static_cast<double>(s.raw_cells);
    s.tokenizer = std::string(tokenizer_name);
    s.raw_tokens = linearize_table(raw, tokenizer_name).token_count;
    s.kept_tokens = linearize_table(kept, tokenizer_name, kept_labels).token_count;
    if (s.raw_tokens > 0 && s.kept_tokens < s.raw_tokens) {
        s.token_reduction_ratio =
            static_cast<double>(s.raw_tokens - s.kept_tokens) / static_cast<double>(s.raw_tokens);
    }
    return s;
}

} // namespace

FilteredTable make_filtered_table(const Table& raw, std::vector<std::string> columns, std::vector<std::size_t> rows,
                                  std::string_view tokenizer_name) {
    Table t = raw.select(columns, rows);
    ReductionStats stats = stats_for(raw, t, rows, tokenizer_name);
    return FilteredTable{std::move(columns), std::move(rows), std::move(t), std::move(stats)};
}

ReductionStats compute_reduction_stats(const Table& raw, const FilteredTable& filtered,
                                       std::string_view tokenizer_name) {
    const auto& cols = filtered.selected_columns;
    const auto& rows = filtered.selected_row_indices;
    if (filtered.table.headers() != cols || filtered.table.n_rows() != rows.size()) {
        throw MismatchedProvenance("filtered table shape disagrees with its selection");
    }
    std::vector<std::size_t> col_idx;
    for (const auto& c : cols) {
        if (!raw.has_column(c)) {
            throw MismatchedProvenance("selected column '" + c + "' is not in the raw table");
        }
        col_idx.push_back(raw.column_index(c));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= raw.n_rows()) {
            throw MismatchedProvenance("selected row " + std::to_string(rows[i]) + " is not in the raw table");
        }
        for (std::size_t j = 0; j < col_idx.size(); ++j) {
            if (filtered.table.rows()[i][j] != raw.rows()[rows[i]][col_idx[j]]) {
                throw MismatchedProvenance("cell (" + std::to_string(rows[i]) + ", " + cols[j] +
                                           ") differs from the raw table");
            }
        }
    }
    return stats_for(raw, filtered.table, rows, tokenizer_name);
}

} // namespace atf
