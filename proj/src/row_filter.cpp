#include "atf/row_filter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "atf/errors.hpp"
#include "atf/text.hpp"

namespace atf {

void FusionConfig::validate() const {
    if (w_tfidf < 0.0 || w_bm25 < 0.0 || w_dense < 0.0) {
        throw ConfigError("fusion weights must be non-negative");
    }
    if (std::abs(w_tfidf + w_bm25 + w_dense - 1.0) > 1e-9) {
        throw ConfigError("fusion weights must sum to 1");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ConfigError("row ratio alpha must be in (0, 1]");
    }
    if (k1 < 0.0 || b < 0.0 || b > 1.0) {
        throw ConfigError("BM25 parameters out of range");
    }
}

std::vector<std::string> row_tokens(std::string_view text) { return text::word_tokens(text); }

namespace {

using Counts = std::map<std::string, double>;

Counts term_counts(const std::vector<std::string>& tokens) {
    Counts c;
    for (const auto& t : tokens) {
        c[t] += 1.0;
    }
    return c;
}

std::map<std::string, std::size_t> document_frequency(const std::vector<Counts>& docs) {
    std::map<std::string, std::size_t> df;
    for (const auto& d : docs) {
        for (const auto& [term, _] : d) {
            ++df[term];
        }
    }
    return df;
}

} // namespace

std::vector<double> tfidf_scores(std::string_view question, std::span<const std::string> row_texts) {
    const std::size_t n = row_texts.size();
    std::vector<Counts> docs;
    docs.reserve(n);
    for (const auto& r : row_texts) {
        docs.push_back(term_counts(row_tokens(r)));
    }
    const auto df = document_frequency(docs);
    auto idf = [&](const std::string& term) {
        const double d = static_cast<double>(df.at(term));
        return std::log((1.0 + static_cast<double>(n)) / (1.0 + d)) + 1.0;
    };

    Counts q;
    for (const auto& [term, count] : term_counts(row_tokens(question))) {
        if (df.count(term) > 0) {
            q[term] = count * idf(term);
        }
    }
    double q_norm = 0.0;
    for (const auto& [_, w] : q) {
        q_norm += w * w;
    }
    q_norm = std::sqrt(q_norm);

    std::vector<double> out(n, 0.0);
    if (q_norm == 0.0) {
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        double d_norm = 0.0;
        for (const auto& [term, count] : docs[i]) {
            const double w = count * idf(term);
            d_norm += w * w;
            if (auto it = q.find(term); it != q.end()) {
                dot += w * it->second;
            }
        }
        if (d_norm > 0.0) {
            out[i] = std::clamp(dot / (q_norm * std::sqrt(d_norm)), 0.0, 1.0);
        }
    }
    return out;
}

std::vector<double> bm25_scores(std::string_view question, std::span<const std::string> row_texts, double k1,
                                double b) {
    const std::size_t n = row_texts.size();
    std::vector<Counts> docs;
    std::vector<double> lengths;
    docs.reserve(n);
    for (const auto& r : row_texts) {
        const auto tokens = row_tokens(r);
        lengths.push_back(static_cast<double>(tokens.size()));
        docs.push_back(term_counts(tokens));
    }
    const auto df = document_frequency(docs);
    const double avgdl = n > 0 ? std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(n) : 0.0;
    const auto query = row_tokens(question);

    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double norm = avgdl > 0.0 ? lengths[i] / avgdl : 0.0;
        double score = 0.0;
        for (const auto& term : query) {
            auto f = docs[i].find(term);
            if (f == docs[i].end()) {
                continue;
            }
            const double d = static_cast<double>(df.at(term));
            const double idf = std::log(1.0 + (static_cast<double>(n) - d + 0.5) / (d + 0.5));
            score += idf * f->second * (k1 + 1.0) / (f->second + k1 * (1.0 - b + b * norm));
        }
        out[i] = score;
    }
    return out;
}

std::vector<double> dense_scores(std::span<const double> question_vector,
                                 std::span<const std::vector<double>> row_vectors) {
    double qn = 0.0;
    for (double x : question_vector) {
        qn += x * x;
    }
    qn = std::sqrt(qn);
    std::vector<double> out;
    out.reserve(row_vectors.size());
    for (const auto& v : row_vectors) {
        if (v.size() != question_vector.size()) {
            throw LengthMismatch("row embedding dimension differs from the question embedding");
        }
        double dot = 0.0;
        double vn = 0.0;
        for (std::size_t d = 0; d < v.size(); ++d) {
            dot += question_vector[d] * v[d];
            vn += v[d] * v[d];
        }
        vn = std::sqrt(vn);
        out.push_back(qn > 0.0 && vn > 0.0 ? std::clamp(dot / (qn * vn), -1.0, 1.0) : 0.0);
    }
    return out;
}

std::vector<double> softmax(std::span<const double> values) {
    std::vector<double> out(values.size());
    if (values.empty()) {
        return out;
    }
    const double hi = *std::max_element(values.begin(), values.end());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::exp(values[i] - hi);
        total += out[i];
    }
    for (double& x : out) {
        x /= total;
    }
    return out;
}

std::size_t adaptive_k(std::size_t n, double alpha) noexcept {
    if (n == 0) {
        return 0;
    }
    // The epsilon keeps exact products such as 0.4 * 10 from rounding up.
    const double raw = std::ceil(alpha * static_cast<double>(n) - 1e-9);
    return std::clamp<std::size_t>(raw < 1.0 ? 1 : static_cast<std::size_t>(raw), 1, n);
}

RowSelection fuse_and_select(std::span<const double> tfidf, std::span<const double> bm25,
                             std::span<const double> dense, const FusionConfig& config) {
    const std::size_t n = tfidf.size();
    if (bm25.size() != n || dense.size() != n) {
        throw LengthMismatch("row score vectors differ in length");
    }
    if (n == 0) {
        throw LengthMismatch("row score vectors are empty");
    }
    const auto t1 = softmax(tfidf);
    const auto t2 = softmax(bm25);
    const auto t3 = softmax(dense);

    RowSelection sel;
    sel.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        RowScore& r = sel.rows[i];
        r.s_tfidf = tfidf[i];
        r.s_bm25 = bm25[i];
        r.s_dense = dense[i];
        r.t_tfidf = t1[i];
        r.t_bm25 = t2[i];
        r.t_dense = t3[i];
        r.fused = config.w_tfidf * t1[i] + config.w_bm25 * t2[i] + config.w_dense * t3[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sel.rows[a].fused > sel.rows[b].fused; });
    sel.k = adaptive_k(n, config.alpha);
    sel.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sel.k));
    for (std::size_t i : sel.selected) {
        sel.rows[i].selected = true;
    }
    return sel;
}

FilteredTable build_filtered_table(const Table& table, std::vector<std::string> columns,
                                   std::vector<std::size_t> rows, bool keep_original_order,
                                   std::string_view tokenizer) {
    if (keep_original_order) {
        std::sort(rows.begin(), rows.end());
    }
    return make_filtered_table(table, std::move(columns), std::move(rows), tokenizer);
}

nlohmann::json to_json(const RowSelection& selection) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < selection.rows.size(); ++i) {
        const auto& r = selection.rows[i];
        rows.push_back({{"index", i},
                        {"raw", {r.s_tfidf, r.s_bm25, r.s_dense}},
                        {"softmax", {r.t_tfidf, r.t_bm25, r.t_dense}},
                        {"fused", r.fused},
                        {"selected", r.selected}});
    }
    return {{"k", selection.k}, {"selected", selection.selected}, {"rows", rows}};
}

} // namespace atf
