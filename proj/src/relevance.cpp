#include "atf/relevance.hpp"

#include <algorithm>
#include <cmath>

#include "atf/errors.hpp"

namespace atf {

std::size_t IterationRecord::n_effective(const std::string& column) const {
    auto it = scores.find(column);
    return it == scores.end() ? 0 : it->second.size();
}

AggregatedScore aggregate_scores(std::span<const double> scores) {
    if (scores.empty()) {
        throw EmptyIterations("cannot aggregate an empty score list");
    }
    AggregatedScore a;
    if (std::all_of(scores.begin(), scores.end(), [&](double s) { return s == scores.front(); })) {
        // Exact: summation rounding must not leak a spurious sigma.
        a.mu = scores.front();
        a.llm_final = a.mu;
        return a;
    }
    const double n = static_cast<double>(scores.size());
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    a.mu = sum / n;
    double ss = 0.0;
    for (double s : scores) {
        ss += (s - a.mu) * (s - a.mu);
    }
    a.sigma = std::sqrt(ss / n);
    a.llm_final = a.mu * (1.0 / (1.0 + a.sigma));
    return a;
}

std::map<std::string, AggregatedScore> aggregate_iterations(const IterationRecord& records) {
    std::map<std::string, AggregatedScore> out;
    for (const auto& [column, scores] : records.scores) {
        if (scores.empty()) {
            throw EmptyIterations("column '" + column + "' has no scoring iterations");
        }
        out.emplace(column, aggregate_scores(scores));
    }
    return out;
}

std::vector<double> minmax_normalize(std::span<const double> scores) {
    std::vector<double> out(scores.size(), 0.5);
    if (scores.empty()) {
        return out;
    }
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::clamp((scores[i] - *lo) / range, 0.0, 1.0);
    }
    return out;
}

std::map<std::string, double> minmax_normalize(const std::map<std::string, double>& scores) {
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& [_, v] : scores) {
        values.push_back(v);
    }
    const auto norm = minmax_normalize(std::span<const double>(values));
    std::map<std::string, double> out;
    std::size_t i = 0;
    for (const auto& [k, _] : scores) {
        out.emplace(k, norm[i++]);
    }
    return out;
}

std::vector<ColumnScorePair> build_score_pairs(std::span<const std::string> column_order,
                                               const std::map<std::string, AggregatedScore>& agg,
                                               const std::map<std::string, double>& emb_norm,
                                               const std::map<std::string, double>& emb_raw) {
    if (agg.size() != column_order.size() || emb_norm.size() != column_order.size()) {
        throw KeyMismatch("score maps do not cover the same columns");
    }
    std::vector<ColumnScorePair> out;
    out.reserve(column_order.size());
    for (const auto& column : column_order) {
        auto a = agg.find(column);
        auto e = emb_norm.find(column);
        if (a == agg.end() || e == emb_norm.end()) {
            throw KeyMismatch("column '" + column + "' is missing from a score map");
        }
        ColumnScorePair p;
        p.column = column;
        p.llm_final = a->second.llm_final;
        p.mu = a->second.mu;
        p.sigma = a->second.sigma;
        p.emb_norm = e->second;
        if (auto r = emb_raw.find(column); r != emb_raw.end()) {
            p.emb_raw = r->second;
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::string column_embedding_text(const std::string& header, const std::string& description) {
    return header + ": " + description;
}

} // namespace atf
