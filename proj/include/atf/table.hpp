#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace atf {

enum class TableFormat { csv, json };

/// Ordered headers plus a row-major grid of string cells.
///
/// Immutable after construction. Every row holds exactly one cell per
/// header, headers are non-empty, trimmed and unique.
class Table {
public:
    Table(std::vector<std::string> headers, std::vector<std::vector<std::string>> rows,
          std::optional<std::string> source_id = std::nullopt);

    const std::vector<std::string>& headers() const noexcept { return headers_; }
    const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
    const std::optional<std::string>& source_id() const noexcept { return source_id_; }

    std::size_t n_rows() const noexcept { return rows_.size(); }
    std::size_t n_cols() const noexcept { return headers_.size(); }

    /// Throws UnknownColumn.
    std::size_t column_index(std::string_view name) const;
    bool has_column(std::string_view name) const noexcept;

    const std::string& cell(std::size_t row, std::size_t col) const;
    const std::string& cell(std::size_t row, std::string_view column) const;

    /// T[rows, columns] in the given orders.
    Table select(std::span<const std::string> columns, std::span<const std::size_t> rows) const;

    friend bool operator==(const Table& a, const Table& b) {
        return a.headers_ == b.headers_ && a.rows_ == b.rows_;
    }

private:
    std::vector<std::string> headers_;
    std::vector<std::vector<std::string>> rows_;
    std::optional<std::string> source_id_;
};

struct CellAddress {
    std::size_t row_index = 0;
    std::string column_name;
};

struct ReductionStats {
    std::size_t raw_rows = 0;
    std::size_t raw_cols = 0;
    std::size_t kept_rows = 0;
    std::size_t kept_cols = 0;
    std::size_t raw_cells = 0;
    std::size_t kept_cells = 0;
    double cell_reduction_ratio = 0.0;
    std::string tokenizer = "whitespace";
    std::size_t raw_tokens = 0;
    std::size_t kept_tokens = 0;
    double token_reduction_ratio = 0.0;

    std::size_t cells_removed() const noexcept { return raw_cells - kept_cells; }
    std::size_t columns_removed() const noexcept { return raw_cols - kept_cols; }
    std::size_t rows_removed() const noexcept { return raw_rows - kept_rows; }
};

/// The result of filtering: T[R', C'] plus the selection that produced it.
struct FilteredTable {
    std::vector<std::string> selected_columns;
    std::vector<std::size_t> selected_row_indices;
    Table table;
    ReductionStats stats;
    nlohmann::json trace = nlohmann::json::object();
};

Table load_table(std::istream& source, TableFormat format);
Table load_table(std::string_view source, TableFormat format);
Table load_table_file(const std::string& path);

std::string to_csv(const Table& table);
nlohmann::json to_json(const Table& table);
Table table_from_json(const nlohmann::json& j);

/// Up to k cell values drawn from distinct row positions, returned in row order.
std::vector<std::string> sample_cell_values(const Table& table, std::string_view column, std::size_t k,
                                            std::uint64_t seed);

/// Non-empty cells of `columns` joined by a single space.
std::string flatten_row_text(const Table& table, std::size_t row_index, std::span<const std::string> columns);

struct Linearized {
    std::string text;
    std::size_t token_count = 0;
};

/// `col: h1 | h2 ...` followed by one `row i: v1 | v2 ...` line per row.
/// `row_labels` overrides the printed row numbers (original indices for filtered tables).
Linearized linearize_table(const Table& table, std::string_view tokenizer = "whitespace",
                           std::span<const std::size_t> row_labels = {});
Linearized linearize_table(const FilteredTable& filtered, std::string_view tokenizer = "whitespace");

/// Builds T[R', C'] with statistics. Throws UnknownColumn / RowOutOfRange.
FilteredTable make_filtered_table(const Table& raw, std::vector<std::string> columns, std::vector<std::size_t> rows,
                                  std::string_view tokenizer = "whitespace");

/// Throws MismatchedProvenance when `filtered` is not a sub-table of `raw`.
ReductionStats compute_reduction_stats(const Table& raw, const FilteredTable& filtered,
                                       std::string_view tokenizer = "whitespace");

} // namespace atf
