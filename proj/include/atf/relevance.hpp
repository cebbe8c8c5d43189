#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace atf {

/// Per-column scores from the N scoring passes. A column missing from a pass
/// simply has fewer entries (its effective N is the list length).
struct IterationRecord {
    std::map<std::string, std::vector<double>> scores;

    std::size_t n_effective(const std::string& column) const;
};

struct AggregatedScore {
    double mu = 0.0;
    double sigma = 0.0;
    double llm_final = 0.0;
};

/// mu = mean, sigma = population standard deviation, final = mu / (1 + sigma).
AggregatedScore aggregate_scores(std::span<const double> scores);

/// Throws EmptyIterations when any column has no scores.
std::map<std::string, AggregatedScore> aggregate_iterations(const IterationRecord& records);

/// (x - min) / (max - min); every value becomes 0.5 when max == min.
std::map<std::string, double> minmax_normalize(const std::map<std::string, double>& scores);
std::vector<double> minmax_normalize(std::span<const double> scores);

/// The 2-D point fed to clustering, plus the internals kept for tracing.
struct ColumnScorePair {
    std::string column;
    double llm_final = 0.0;
    double emb_norm = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double emb_raw = 0.0;

    /// mean(llm_final, emb_norm): the per-column relevance used by cluster selection.
    double mean_score() const noexcept { return 0.5 * (llm_final + emb_norm); }
};

/// One pair per column in `column_order`. Throws KeyMismatch unless both maps
/// cover exactly the columns of `column_order`.
std::vector<ColumnScorePair> build_score_pairs(std::span<const std::string> column_order,
                                               const std::map<std::string, AggregatedScore>& agg,
                                               const std::map<std::string, double>& emb_norm,
                                               const std::map<std::string, double>& emb_raw = {});

/// The text embedded for a column: header and description joined by ": ".
std::string column_embedding_text(const std::string& header, const std::string& description);

} // namespace atf
