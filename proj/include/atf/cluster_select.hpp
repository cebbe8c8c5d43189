#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atf/kmeans.hpp"
#include "atf/relevance.hpp"

namespace atf {

enum class QuestionType { aggregation, filtering, lookup, exploration };

std::string_view to_string(QuestionType t) noexcept;

/// Keyword rules, checked in the order aggregation, filtering, lookup.
QuestionType classify_question(std::string_view question);

struct QuestionComplexity {
    int q_c = 1;
    int conjunctions = 0;
    int comparatives = 0;
    int aggregations = 0;
    int numerics = 0;
};

QuestionComplexity question_complexity(std::string_view question);

/// Preferred cluster size for a complexity score: min(3 q_c, 10).
std::size_t optimal_cluster_size(int q_c) noexcept;

std::vector<Point2> score_points(std::span<const ColumnScorePair> pairs);

struct ClusterQuality {
    double cohesion = 0.0;
    double separation = 0.0;
    double quality = 0.0;
};

std::vector<ClusterQuality> cluster_quality(const ClusterModel& model, std::span<const Point2> points);

/// cosine(question, mean member embedding) clamped to [0,1], times quality.
/// `column_vectors` is aligned with the model's points.
std::vector<double> score_semantic(const ClusterModel& model, std::span<const ClusterQuality> quality,
                                   std::span<const double> question_vector,
                                   std::span<const std::vector<double>> column_vectors);

struct McdmScore {
    double relevance = 0.0;
    double diversity = 0.0;
    double info_density = 0.0;
    double size_match = 0.0;
    double score = 0.0;
};

struct McdmOptions {
    double tau_info = 0.7;
    double alpha_size = 0.5;
    double epsilon = 1e-6;
};

std::vector<McdmScore> score_mcdm(const ClusterModel& model, std::span<const ColumnScorePair> pairs,
                                  const QuestionComplexity& complexity, const McdmOptions& options = {});

struct ConfidenceScore {
    double consistency = 0.0;
    double strength = 0.0;
    double type_prior = 0.0;
    double confidence = 0.0;
};

struct ConfidenceResult {
    std::vector<ConfidenceScore> clusters;
    double mean = 0.0;
    double stddev = 0.0;
    double threshold = 0.0;
    std::vector<std::size_t> candidates;
    bool fallback = false;
};

double type_prior(QuestionType type, std::size_t cluster_size) noexcept;

/// Threshold mean - 0.5 stddev over per-cluster confidences; clusters strictly
/// above it are candidates, else the max-confidence cluster is the fallback.
/// Leaves `clusters` empty.
ConfidenceResult confidence_candidates(std::span<const double> confidences);

ConfidenceResult score_confidence(const ClusterModel& model, std::span<const ColumnScorePair> pairs,
                                  QuestionType type);

enum class Strategy { semantic, mcdm, confidence };

std::string_view to_string(Strategy s) noexcept;

struct StrategyPick {
    Strategy strategy = Strategy::semantic;
    std::size_t cluster = 0;
    double score = 0.0;
    /// Comparable across strategies; used only when all three picks differ.
    double normalized_score = 0.0;
};

struct SelectionVerdict {
    std::array<StrategyPick, 3> picks{};
    std::size_t winner = 0;
    bool tie_broken = false;
};

/// Majority of the three picks; with three distinct picks the highest
/// normalized score wins, then the lower cluster id.
SelectionVerdict ensemble_vote(std::span<const StrategyPick> picks);

/// Members of `winner`, the best `k_other` columns of every other cluster
/// and the essential columns, in header order. Essential names that are not
/// headers are ignored.
std::vector<std::string> assemble_final_columns(std::size_t winner, const ClusterModel& model,
                                                std::span<const ColumnScorePair> pairs,
                                                std::span<const std::string> essential, std::size_t k_other = 1);

double l2_score(const ColumnScorePair& p) noexcept;

/// Column count kept by the L2 baseline: all if m < 3, 3 if m < 10, else ceil(0.4 m).
std::size_t topk_l2_count(std::size_t m) noexcept;

/// Highest-L2 columns, returned in header order.
std::vector<std::string> topk_l2_baseline(std::span<const ColumnScorePair> pairs);

struct KDiagnostic {
    std::size_t k = 0;
    double inertia = 0.0;
    double silhouette = 0.0;
};

/// Every k must satisfy 2 <= k <= m - 1, otherwise RangeError.
std::vector<KDiagnostic> k_diagnostics(std::span<const Point2> points, std::span<const std::size_t> ks,
                                       std::uint64_t seed = 42, std::size_t restarts = 10);

struct SelectionInput {
    std::string question;
    std::vector<ColumnScorePair> pairs;
    std::vector<double> question_vector;
    /// Embedding of header plus description, aligned with `pairs`.
    std::vector<std::vector<double>> column_vectors;
    std::vector<std::string> essential;
};

struct SelectionOptions {
    KMeansOptions kmeans;
    McdmOptions mcdm;
    std::size_t k_other = 1;
};

struct ColumnSelection {
    std::vector<std::string> columns;
    ClusterModel model;
    std::vector<ClusterQuality> quality;
    std::vector<double> semantic;
    std::vector<McdmScore> mcdm;
    ConfidenceResult confidence;
    QuestionComplexity complexity;
    QuestionType question_type = QuestionType::exploration;
    SelectionVerdict verdict;
};

ColumnSelection select_columns(const SelectionInput& input, const SelectionOptions& options = {});

nlohmann::json to_json(const ColumnSelection& selection, std::span<const ColumnScorePair> pairs);

} // namespace atf
