#include <doctest.h>

#include <algorithm>
#include <random>

#include "atf/cluster_select.hpp"
#include "atf/errors.hpp"

using namespace atf;

namespace {

ColumnScorePair pair(std::string name, double llm, double emb) {
    ColumnScorePair p;
    p.column = std::move(name);
    p.llm_final = llm;
    p.mu = llm;
    p.emb_norm = emb;
    return p;
}

ClusterModel model_of(std::vector<std::size_t> assignments, std::vector<Point2> centroids) {
    ClusterModel m;
    m.k = centroids.size();
    m.assignments = std::move(assignments);
    m.centroids = std::move(centroids);
    return m;
}

} // namespace

TEST_CASE("question classification") {
    CHECK(classify_question("How many players are from the United States?") == QuestionType::aggregation);
    CHECK(classify_question("total revenue of delta") == QuestionType::aggregation);
    CHECK(classify_question("list all players with a score below 280") == QuestionType::filtering);
    CHECK(classify_question("which player won at least 3 titles") == QuestionType::filtering);
    CHECK(classify_question("Who was the president in 1790?") == QuestionType::lookup);
    CHECK(classify_question("kristofer martin have be nominate for a award") == QuestionType::exploration);
    CHECK(to_string(QuestionType::lookup) == "lookup");
}

TEST_CASE("question complexity") {
    const auto c = question_complexity("score of the player and money in 1999 and 2000");
    CHECK(c.conjunctions == 2);
    CHECK(c.numerics == 2);
    CHECK(c.q_c == 4);
    CHECK(question_complexity("who won").q_c == 1);
    CHECK(question_complexity("what was 70-66-73-69=278").numerics == 1);
    CHECK(optimal_cluster_size(1) == 3);
    CHECK(optimal_cluster_size(3) == 9);
    CHECK(optimal_cluster_size(4) == 10);
}

TEST_CASE("cluster quality") {
    const std::vector<Point2> pts{{0, 0}, {1, 1}};
    const auto m = model_of({0, 1}, {{0, 0}, {1, 1}});
    const auto q = cluster_quality(m, pts);
    CHECK(q[0].separation == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q[0].cohesion == 1.0);
    CHECK(q[0].quality == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<Point2> same{{0.2, 0.2}, {0.2, 0.2}, {0.2, 0.2}};
    const auto one = model_of({0, 0, 0}, {{0.2, 0.2}});
    const auto q1 = cluster_quality(one, same);
    CHECK(q1[0].cohesion == 1.0);
    CHECK(q1[0].separation == 0.0);
    CHECK(q1[0].quality == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("semantic scoring") {
    const auto m = model_of({0, 1, 2}, {{0, 0}, {0.5, 0.5}, {1, 1}});
    const std::vector<ClusterQuality> quality{{1, 1, 1.0}, {1, 1, 1.0}, {1, 1, 0.0}};
    const std::vector<double> q{1.0, 0.0};
    const std::vector<std::vector<double>> cols{{1.0, 0.0}, {0.6, 0.8}, {1.0, 0.0}};
    const auto s = score_semantic(m, quality, q, cols);
    CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(s[2] == 0.0);
    const std::vector<std::vector<double>> short_cols{{1.0, 0.0}};
    CHECK_THROWS_AS(score_semantic(m, quality, q, short_cols), LengthMismatch);
}

TEST_CASE("mcdm scoring") {
    const std::vector<ColumnScorePair> pairs{pair("Score", 1.0, 1.0), pair("Money_", 1.0, 0.9339),
                                             pair("Country", 0.0, 0.0)};
    const auto m = model_of({0, 0, 1}, {{1.0, 0.96695}, {0, 0}});
    QuestionComplexity c;
    c.q_c = 1;
    const auto s = score_mcdm(m, pairs, c);
    CHECK(s[0].relevance == doctest::Approx((1.0 + 0.96695) / 2).epsilon(1e-12));
    CHECK(s[0].info_density == 1.0);
    CHECK(s[1].info_density == 0.0);
    CHECK(s[0].size_match == doctest::Approx(1.0 / 1.5).epsilon(1e-12));
    CHECK(s[0].diversity <= 1.0);

    const auto three = model_of({0, 0, 0}, {{0.6, 0.6}});
    CHECK(score_mcdm(three, pairs, c)[0].size_match == 1.0);
}

TEST_CASE("confidence thresholds") {
    const std::vector<double> conf{0.8, 0.4};
    const auto r = confidence_candidates(conf);
    CHECK(r.mean == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(r.stddev == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.threshold == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.candidates == std::vector<std::size_t>{0});
    CHECK(!r.fallback);

    const std::vector<double> flat{0.5, 0.5, 0.5};
    const auto f = confidence_candidates(flat);
    CHECK(f.threshold == 0.5);
    CHECK(f.fallback);
    CHECK(f.candidates == std::vector<std::size_t>{0});

    const std::vector<ColumnScorePair> pairs{pair("a", 0.5, 0.5), pair("b", 0.5, 0.5)};
    const auto m = model_of({0, 0}, {{0.5, 0.5}});
    const auto sc = score_confidence(m, pairs, QuestionType::lookup);
    CHECK(sc.clusters[0].consistency == 1.0);
    CHECK(sc.clusters[0].type_prior == 0.5);
    CHECK(type_prior(QuestionType::aggregation, 10) == 1.0);
    CHECK(type_prior(QuestionType::exploration, 2) == 0.5);
}

TEST_CASE("ensemble vote") {
    auto pick = [](Strategy s, std::size_t c, double n) { return StrategyPick{s, c, n, n}; };
    const std::vector<StrategyPick> majority{pick(Strategy::semantic, 0, 0.1), pick(Strategy::mcdm, 0, 0.2),
                                             pick(Strategy::confidence, 1, 0.9)};
    const auto v = ensemble_vote(majority);
    CHECK(v.winner == 0);
    CHECK(!v.tie_broken);

    const std::vector<StrategyPick> split{pick(Strategy::semantic, 0, 0.9), pick(Strategy::mcdm, 1, 0.5),
                                          pick(Strategy::confidence, 2, 0.7)};
    const auto t = ensemble_vote(split);
    CHECK(t.winner == 0);
    CHECK(t.tie_broken);

    const std::vector<StrategyPick> even{pick(Strategy::semantic, 2, 0.5), pick(Strategy::mcdm, 1, 0.5),
                                         pick(Strategy::confidence, 0, 0.4)};
    CHECK(ensemble_vote(even).winner == 1);
    CHECK_THROWS_AS(ensemble_vote(std::span<const StrategyPick>(split.data(), 2)), RangeError);
}

TEST_CASE("final column assembly") {
    const std::vector<ColumnScorePair> pairs{pair("Place", 0.1, 0.3),  pair("Player", 0.2, 0.4),
                                             pair("Country", 0.0, 0.0), pair("Score", 1.0, 1.0),
                                             pair("To_par", 0.3, 0.6),  pair("Money_", 1.0, 0.93)};
    const auto m = model_of({0, 0, 1, 2, 0, 2}, {{0.2, 0.43}, {0, 0}, {1, 0.965}});
    const std::vector<std::string> essential{"Score", "Money_"};
    CHECK(assemble_final_columns(2, m, pairs, essential) ==
          std::vector<std::string>{"Country", "Score", "To_par", "Money_"});
    const std::vector<std::string> odd{"Nope", "Place"};
    CHECK(assemble_final_columns(2, m, pairs, odd) ==
          std::vector<std::string>{"Place", "Country", "Score", "To_par", "Money_"});
    CHECK(assemble_final_columns(2, m, pairs, {}, 0) == std::vector<std::string>{"Score", "Money_"});
    CHECK_THROWS_AS(assemble_final_columns(3, m, pairs, {}), RangeError);
}

TEST_CASE("top-k L2 baseline") {
    CHECK(l2_score(pair("x", 1.0, 1.0)) == doctest::Approx(1.4142).epsilon(1e-4));
    CHECK(topk_l2_count(6) == 3);
    CHECK(topk_l2_count(20) == 8);
    CHECK(topk_l2_count(2) == 2);
    CHECK(topk_l2_count(10) == 4);
    const std::vector<ColumnScorePair> pairs{pair("a", 0.1, 0.1), pair("b", 0.9, 0.9), pair("c", 0.5, 0.5),
                                             pair("d", 0.5, 0.5), pair("e", 0.2, 0.9)};
    CHECK(topk_l2_baseline(pairs) == std::vector<std::string>{"b", "c", "e"});
}

TEST_CASE("k diagnostics") {
    const std::vector<Point2> pts{{0, 0}, {0.01, 0}, {1, 0}, {1.01, 0}, {0, 1}, {0.01, 1}};
    const std::vector<std::size_t> ks{2, 3};
    const auto d = k_diagnostics(pts, ks);
    CHECK(d[1].silhouette > d[0].silhouette);
    CHECK(d[1].inertia < d[0].inertia);
    const std::vector<std::size_t> last{5};
    CHECK_NOTHROW(k_diagnostics(pts, last));
    const std::vector<std::size_t> too_big{6};
    CHECK_THROWS_AS(k_diagnostics(pts, too_big), RangeError);
    const std::vector<std::size_t> too_small{1};
    CHECK_THROWS_AS(k_diagnostics(pts, too_small), RangeError);
}

TEST_CASE("essential columns always survive selection") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        SelectionInput in;
        in.question = trial % 2 ? "how many wins" : "who won in 1999";
        const std::size_t m = 1 + rng() % 12;
        in.question_vector = {u(rng), u(rng)};
        for (std::size_t i = 0; i < m; ++i) {
            in.pairs.push_back(pair("col" + std::to_string(i), u(rng), u(rng)));
            in.column_vectors.push_back({u(rng), u(rng)});
            if (rng() % 3 == 0) {
                in.essential.push_back("col" + std::to_string(i));
            }
        }
        in.essential.push_back("not_a_header");
        const auto s = select_columns(in);
        for (const auto& e : in.essential) {
            if (e != "not_a_header") {
                CHECK(std::find(s.columns.begin(), s.columns.end(), e) != s.columns.end());
            }
        }
        CHECK(std::find(s.columns.begin(), s.columns.end(), "not_a_header") == s.columns.end());
        CHECK(!s.columns.empty());
    }
}
