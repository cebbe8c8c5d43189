#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "atf/table.hpp"

namespace atf::metrics {

enum class Task { qa, tfv };

struct Prediction {
    std::string id;
    std::string predicted;
    std::vector<std::string> gold;
    Task task = Task::qa;
};

struct ItemScore {
    std::string id;
    int exact = 0;
    double f1 = 0.0;
};

struct EvalReport {
    Task task = Task::qa;
    double em = 0.0;
    double f1 = 0.0;
    /// TFV: label accuracy (macro-averaged when requested). QA: equals em.
    double accuracy = 0.0;
    bool macro = false;
    std::size_t n = 0;
    std::vector<ItemScore> items;
};

/// Lowercase, trim, drop digit-group commas, strip punctuation (keeping decimal
/// points between digits), turn integral floats into integers, collapse spaces.
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view pred, std::span<const std::string> golds);
double f1_score(std::string_view pred, std::span<const std::string> golds);

/// Throws MixedTask when any item is not TFV and Error on empty input.
double accuracy(std::span<const Prediction> preds, bool macro = false);

/// One report per task present in `preds`, qa first.
std::vector<EvalReport> evaluate(std::span<const Prediction> preds, bool macro_accuracy = false);

Prediction prediction_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalReport& report);
std::vector<Prediction> read_predictions_jsonl(std::istream& in);

// ---------------------------------------------------------------------------
// token budget overflow

struct OverflowRatio {
    double raw = 0.0;
    double filtered = 0.0;
    std::size_t total = 0;
};

/// `budget` of nullopt means unlimited. Exceeding means token_count > budget.
OverflowRatio overflow_ratio(std::span<const std::pair<Table, Table>> pairs, std::optional<std::size_t> budget,
                             std::string_view tokenizer = "whitespace");
OverflowRatio overflow_ratio(std::span<const ReductionStats> stats, std::optional<std::size_t> budget);

// ---------------------------------------------------------------------------
// reduction distributions

struct RatioHistogram {
    /// counts[i] covers [i/10, (i+1)/10); the last bin is closed at 1.0.
    std::vector<std::size_t> counts = std::vector<std::size_t>(10, 0);
};

struct ReductionHistograms {
    std::map<std::size_t, std::size_t> columns_removed;
    std::map<std::size_t, std::size_t> rows_kept;
    RatioHistogram cell_reduction;
    RatioHistogram token_reduction;
    std::size_t records = 0;
};

std::size_t ratio_bin(double ratio) noexcept;

ReductionHistograms reduction_distributions(std::span<const ReductionStats> stats);

/// `histogram,bin,lower,upper,count` rows.
std::string histograms_csv(const ReductionHistograms& h);
nlohmann::json to_json(const ReductionHistograms& h);

} // namespace atf::metrics
