#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "atf/cluster_select.hpp"
#include "atf/kmeans.hpp"
#include "atf/metrics.hpp"
#include "atf/pipeline.hpp"
#include "atf/relevance.hpp"
#include "atf/row_filter.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace atf;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            if (!pass) {
                detail << "; ";
            }
            pass = false;
            detail << what;
        }
    }
};

using Check = Outcome (*)();

std::set<std::string> as_set(const nlohmann::json& j) {
    const auto v = j.get<std::vector<std::string>>();
    return {v.begin(), v.end()};
}

std::string join_rows(const std::vector<std::size_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + std::to_string(v[i]);
    }
    return s + "]";
}

// Lloyd fixpoint: every point is at least as close to its own centroid as to any other.
bool lloyd_fixpoint(const std::vector<Point2>& pts, const std::vector<std::size_t>& assign,
                    const std::vector<Point2>& centroids) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double own = squared_distance(pts[i], centroids[assign[i]]);
        for (const auto& c : centroids) {
            if (own > squared_distance(pts[i], c) + 1e-12) {
                return false;
            }
        }
    }
    return true;
}

bool replay_fixpoint(const nlohmann::json& trace) {
    std::vector<Point2> pts;
    std::vector<std::size_t> assign;
    for (const auto& cs : trace["column_scores"]) {
        pts.push_back({cs["llm_final"].get<double>(), cs["emb_norm"].get<double>()});
        assign.push_back(trace["selection"]["assignments"][cs["column"].get<std::string>()].get<std::size_t>());
    }
    std::vector<Point2> centroids;
    for (const auto& c : trace["selection"]["clusters"]) {
        centroids.push_back({c["centroid"][0].get<double>(), c["centroid"][1].get<double>()});
    }
    return lloyd_fixpoint(pts, assign, centroids);
}

const char* kCases[] = {"openwiki_777", "tabfact_77_7", "aitqa_77"};

Outcome case_replay() {
    Outcome o;
    for (const char* id : kCases) {
        std::optional<support::Replay> replay;
        try {
            replay = support::replay_case(id);
        } catch (const std::exception& e) {
            o.expect(false, std::string(id) + " threw: " + e.what());
            continue;
        }
        const auto& r = *replay;
        const auto& want = r.c.expected;
        const auto& f = r.out.filtered;
        const std::set<std::string> got_cols(f.selected_columns.begin(), f.selected_columns.end());
        o.expect(got_cols == as_set(want["columns"]), std::string(id) + " columns differ");
        const auto want_rows = want["rows"].get<std::vector<std::size_t>>();
        o.expect(f.selected_row_indices == want_rows, std::string(id) + " rows " + join_rows(f.selected_row_indices) +
                                                          " != " + join_rows(want_rows));
        const auto fused = want["fused"].get<std::vector<double>>();
        if (f.selected_row_indices == want_rows) {
            for (std::size_t i = 0; i < fused.size(); ++i) {
                const double got = r.out.trace["rows"]["rows"][want_rows[i]]["fused"].get<double>();
                o.expect(std::abs(got - fused[i]) <= 5e-4, std::string(id) + " fused score " + std::to_string(i));
            }
        }
        o.expect(r.seconds < 1.0, std::string(id) + " took " + std::to_string(r.seconds) + " s");
    }
    return o;
}

Outcome reduction_arithmetic() {
    Outcome o;
    const auto raw = support::synthetic_table(44, 19, 1);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(44), b(44), c(44);
    for (std::size_t i = 0; i < 44; ++i) {
        a[i] = u(rng);
        b[i] = u(rng);
        c[i] = u(rng);
    }
    const auto sel = fuse_and_select(a, b, c);
    o.expect(sel.k == 18, "k = " + std::to_string(sel.k));
    o.expect(adaptive_k(44, 0.4) == 18, "adaptive_k(44, 0.4) != 18");
    const auto f = build_filtered_table(raw, {raw.headers()[2], raw.headers()[7], raw.headers()[11]}, sel.selected);
    o.expect(f.stats.raw_cells == 836 && f.stats.kept_cells == 54, "cell counts");
    o.expect(f.stats.cells_removed() == 782, "cells removed = " + std::to_string(f.stats.cells_removed()));
    o.expect(f.stats.columns_removed() == 16 && f.stats.rows_removed() == 26, "row/column removal counts");
    return o;
}

Outcome aggregation_oracle() {
    Outcome o;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> s(1 + rng() % 8);
        for (double& x : s) {
            x = u(rng);
        }
        const auto want = oracle::aggregate(s);
        if (std::abs(aggregate_scores(s).llm_final - static_cast<double>(want.final_score)) > 1e-12) {
            ++bad;
        }
        const std::vector<double> flat(s.size(), s[0]);
        if (aggregate_scores(flat).llm_final != s[0]) {
            ++bad;
        }
    }
    o.expect(bad == 0, std::to_string(bad) + " mismatches");
    return o;
}

Outcome kmeans_oracle() {
    Outcome o;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t bad = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng() % 7;
        std::vector<Point2> pts(n);
        std::vector<oracle::P> ps;
        for (auto& p : pts) {
            p = {u(rng), u(rng)};
            ps.push_back({p[0], p[1]});
        }
        KMeansOptions opts;
        opts.restarts = 10;
        opts.seed = static_cast<std::uint64_t>(trial);
        const auto m = kmeans_2d(pts, opts);
        const double best = oracle::exhaustive_min_inertia(ps, 3);
        if (std::abs(m.inertia - best) > 1e-9 * std::max(1.0, best) || !lloyd_fixpoint(pts, m.assignments, m.centroids)) {
            ++bad;
        }
    }
    o.expect(bad == 0, std::to_string(bad) + " of 50 instances miss the optimum");
    for (const char* id : kCases) {
        try {
            o.expect(replay_fixpoint(support::replay_case(id).out.trace), std::string(id) + " is not a Lloyd fixpoint");
        } catch (const std::exception& e) {
            o.expect(false, std::string(id) + " threw: " + e.what());
        }
    }
    return o;
}

std::vector<std::string> toy_corpus(std::mt19937_64& rng) {
    std::vector<std::string> docs(1 + rng() % 8);
    for (auto& d : docs) {
        const std::size_t len = rng() % 13;
        for (std::size_t t = 0; t < len; ++t) {
            d += oracle::random_word(rng, 8) + (rng() % 3 ? " " : "; ");
        }
    }
    return docs;
}

Outcome sparse_oracles() {
    Outcome o;
    std::mt19937_64 rng(5);
    std::size_t bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto docs = toy_corpus(rng);
        std::string q;
        for (std::size_t t = 0, n = 1 + rng() % 4; t < n; ++t) {
            q += oracle::random_word(rng, 12) + " ";
        }
        const auto t1 = tfidf_scores(q, docs);
        const auto t2 = oracle::tfidf(q, docs);
        const auto b1 = bm25_scores(q, docs);
        const auto b2 = oracle::bm25(q, docs, 1.5, 0.75);
        for (std::size_t i = 0; i < docs.size(); ++i) {
            bad += std::abs(t1[i] - t2[i]) > 1e-9;
            bad += std::abs(b1[i] - b2[i]) > 1e-9;
        }
    }
    o.expect(bad == 0, std::to_string(bad) + " score mismatches");
    return o;
}

Outcome fusion_properties() {
    Outcome o;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2.0, 4.0);
    std::size_t bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 60;
        std::vector<double> a(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = u(rng);
            b[i] = u(rng) * 5;
            c[i] = u(rng) / 4;
        }
        for (const auto* v : {&a, &b, &c}) {
            const auto s = softmax(*v);
            bad += std::abs(std::accumulate(s.begin(), s.end(), 0.0) - 1.0) > 1e-9;
        }
        const auto sel = fuse_and_select(a, b, c);
        for (const auto& r : sel.rows) {
            bad += r.fused < std::min({r.t_tfidf, r.t_bm25, r.t_dense}) - 1e-15;
            bad += r.fused > std::max({r.t_tfidf, r.t_bm25, r.t_dense}) + 1e-15;
        }
        const double da = u(rng) * 10;
        const double db = u(rng) * 10;
        const double dc = u(rng) * 10;
        auto sa = a, sb = b, sc = c;
        for (std::size_t i = 0; i < n; ++i) {
            sa[i] += da;
            sb[i] += db;
            sc[i] += dc;
        }
        bad += fuse_and_select(sa, sb, sc).selected != sel.selected;
    }
    o.expect(bad == 0, std::to_string(bad) + " violations");
    return o;
}

Outcome selection_guarantees() {
    Outcome o;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t n = 1; n <= 500; ++n) {
        std::vector<double> a(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
            c[i] = u(rng);
        }
        const auto k = fuse_and_select(a, b, c).selected.size();
        const auto want = static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(n) - 1e-9));
        if (k != want || k < 1) {
            o.expect(false, "n=" + std::to_string(n) + " kept " + std::to_string(k));
        }
    }
    static const char* questions[] = {"how many titles", "who won in 1999", "list all teams", "describe it",
                                      "which city and year"};
    std::size_t missing = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        SelectionInput in;
        in.question = questions[trial % 5];
        in.question_vector = {u(rng), u(rng), u(rng)};
        const std::size_t m = 1 + rng() % 20;
        for (std::size_t i = 0; i < m; ++i) {
            ColumnScorePair p;
            p.column = "c" + std::to_string(i);
            p.llm_final = u(rng);
            p.emb_norm = u(rng);
            in.pairs.push_back(p);
            in.column_vectors.push_back({u(rng), u(rng), u(rng)});
            if (rng() % 4 == 0) {
                in.essential.push_back(p.column);
            }
        }
        in.essential.push_back("absent");
        SelectionOptions opts;
        opts.kmeans.seed = static_cast<std::uint64_t>(trial);
        const auto s = select_columns(in, opts);
        for (const auto& e : in.essential) {
            const bool present = std::find(s.columns.begin(), s.columns.end(), e) != s.columns.end();
            missing += (e == "absent") == present;
        }
    }
    o.expect(missing == 0, std::to_string(missing) + " essential-column violations");
    return o;
}

Outcome metric_normalization() {
    Outcome o;
    o.expect(metrics::normalize_answer("11,327") == "11327", "\"11,327\"");
    o.expect(metrics::normalize_answer("11327.0") == "11327", "\"11327.0\"");
    std::size_t bad = 0;
    for (const auto& s : oracle::fuzz_strings(10000, 8)) {
        const auto once = metrics::normalize_answer(s);
        bad += metrics::normalize_answer(once) != once;
        const std::vector<std::string> gold{s};
        bad += metrics::exact_match(s, gold) == 1 && metrics::f1_score(s, gold) != 1.0;
    }
    o.expect(bad == 0, std::to_string(bad) + " fuzz violations");
    return o;
}

Outcome determinism() {
    Outcome o;
    const auto items = support::synthetic_corpus(200, 9);
    const auto dir = std::filesystem::temp_directory_path() / "atf_acceptance_cache";
    std::filesystem::remove_all(dir);
    PipelineConfig config;
    config.backend.cache_dir = dir.string();
    Pipeline cold(config);
    const auto first = support::report_bytes(cold.run_batch(items, 4));
    Pipeline warm(config);
    const auto second = support::report_bytes(warm.run_batch(items, 4));
    o.expect(first == second, "warm-cache re-run differs");
    o.expect(warm.gateway().counters().backend_calls == 0, "warm run still called the backend");
    std::filesystem::remove_all(dir);

    const auto p1 = support::report_bytes(Pipeline(PipelineConfig{}).run_batch(items, 1));
    const auto p8 = support::report_bytes(Pipeline(PipelineConfig{}).run_batch(items, 8));
    o.expect(p1 == p8, "parallelism 1 and 8 differ");

    const auto big = support::synthetic_table(1000, 50, 10);
    Pipeline mock(PipelineConfig{});
    const auto start = std::chrono::steady_clock::now();
    const auto out = mock.run(big, "Who is the player from north with the highest score in 1999?");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.expect(secs < 1.0, "1000x50 mock run took " + std::to_string(secs) + " s");
    o.expect(out.filtered.selected_row_indices.size() == 400, "1000x50 run kept wrong row count");
    return o;
}

Outcome baseline_ablation() {
    Outcome o;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t m = 1; m <= 40; ++m) {
        const std::size_t want = m < 3 ? m : (m < 10 ? 3 : static_cast<std::size_t>(std::ceil(0.4 * m - 1e-9)));
        std::vector<ColumnScorePair> pairs(m);
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = 0; i < m; ++i) {
            pairs[i].column = "c" + std::to_string(i);
            pairs[i].llm_final = u(rng);
            pairs[i].emb_norm = u(rng);
            ranked.push_back({-std::sqrt(pairs[i].llm_final * pairs[i].llm_final + pairs[i].emb_norm * pairs[i].emb_norm), i});
        }
        std::sort(ranked.begin(), ranked.end());
        std::vector<std::size_t> top;
        for (std::size_t i = 0; i < want; ++i) {
            top.push_back(ranked[i].second);
        }
        std::sort(top.begin(), top.end());
        std::vector<std::string> expected;
        for (std::size_t i : top) {
            expected.push_back(pairs[i].column);
        }
        const bool ok = topk_l2_count(m) == want && topk_l2_baseline(pairs) == expected;
        if (!ok) {
            o.expect(false, "m=" + std::to_string(m));
        }
    }
    return o;
}

} // namespace

int main() {
    const std::pair<const char*, Check> criteria[] = {
        {"case-study replay", case_replay},
        {"reduction arithmetic", reduction_arithmetic},
        {"aggregation oracle", aggregation_oracle},
        {"k-means oracle", kmeans_oracle},
        {"sparse retrieval oracles", sparse_oracles},
        {"softmax and fusion properties", fusion_properties},
        {"selection guarantees", selection_guarantees},
        {"metric normalization", metric_normalization},
        {"determinism and mock throughput", determinism},
        {"baseline ablation harness", baseline_ablation},
    };
    int failed = 0;
    int n = 0;
    for (const auto& [name, check] : criteria) {
        ++n;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.expect(false, std::string("threw: ") + e.what());
        }
        std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << name;
        if (!o.pass) {
            std::cout << "  (" << o.detail.str() << ")";
            ++failed;
        }
        std::cout << "\n";
    }
    std::cout << (n - failed) << "/" << n << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
