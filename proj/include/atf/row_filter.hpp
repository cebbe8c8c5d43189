#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atf/table.hpp"

namespace atf {

struct FusionConfig {
    double w_tfidf = 0.4;
    double w_bm25 = 0.3;
    double w_dense = 0.3;
    double alpha = 0.4;
    double k1 = 1.5;
    double b = 0.75;

    /// Throws ConfigError on negative weights, weights not summing to 1, or alpha outside (0, 1].
    void validate() const;
};

/// Lowercased alphanumeric runs; the tokenization shared by both sparse scorers.
std::vector<std::string> row_tokens(std::string_view text);

/// Cosine between smoothed-idf TF-IDF vectors fitted on the row texts.
std::vector<double> tfidf_scores(std::string_view question, std::span<const std::string> row_texts);

/// Okapi BM25 over the row texts.
std::vector<double> bm25_scores(std::string_view question, std::span<const std::string> row_texts,
                                double k1 = 1.5, double b = 0.75);

/// Cosine between the question embedding and each row embedding, clamped to [-1, 1].
std::vector<double> dense_scores(std::span<const double> question_vector,
                                 std::span<const std::vector<double>> row_vectors);

std::vector<double> softmax(std::span<const double> values);

/// ceil(alpha * n) clamped to [1, n].
std::size_t adaptive_k(std::size_t n, double alpha) noexcept;

struct RowScore {
    double s_tfidf = 0.0;
    double s_bm25 = 0.0;
    double s_dense = 0.0;
    double t_tfidf = 0.0;
    double t_bm25 = 0.0;
    double t_dense = 0.0;
    double fused = 0.0;
    bool selected = false;
};

struct RowSelection {
    std::vector<RowScore> rows;
    /// Selected row indices, highest fused score first.
    std::vector<std::size_t> selected;
    std::size_t k = 0;
};

/// Throws LengthMismatch unless the three vectors have the same non-zero length.
RowSelection fuse_and_select(std::span<const double> tfidf, std::span<const double> bm25,
                             std::span<const double> dense, const FusionConfig& config = {});

/// T[rows, columns]; rows are re-sorted ascending when keep_original_order is set.
FilteredTable build_filtered_table(const Table& table, std::vector<std::string> columns,
                                   std::vector<std::size_t> rows, bool keep_original_order = false,
                                   std::string_view tokenizer = "whitespace");

nlohmann::json to_json(const RowSelection& selection);

} // namespace atf
