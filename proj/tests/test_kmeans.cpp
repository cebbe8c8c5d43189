#include <doctest.h>

#include <random>

#include "atf/errors.hpp"
#include "atf/kmeans.hpp"
#include "oracles.hpp"

using namespace atf;

namespace {

std::vector<Point2> random_points(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts(n);
    for (auto& p : pts) {
        p = {u(rng), u(rng)};
    }
    return pts;
}

std::vector<oracle::P> as_pairs(const std::vector<Point2>& pts) {
    std::vector<oracle::P> out;
    for (const auto& p : pts) {
        out.push_back({p[0], p[1]});
    }
    return out;
}

void check_fixpoint(const std::vector<Point2>& pts, const ClusterModel& m) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double own = squared_distance(pts[i], m.centroids[m.assignments[i]]);
        for (const auto& c : m.centroids) {
            CHECK(own <= squared_distance(pts[i], c) + 1e-12);
        }
    }
}

} // namespace

TEST_CASE("degenerate inputs") {
    const std::vector<Point2> two{{0.0, 0.0}, {1.0, 1.0}};
    const auto m = kmeans_2d(two, {});
    CHECK(m.k == 2);
    CHECK(m.assignments == std::vector<std::size_t>{0, 1});
    CHECK(m.inertia == 0.0);
    CHECK_THROWS_AS(kmeans_2d(std::vector<Point2>{}, {}), RangeError);
    KMeansOptions zero;
    zero.k = 0;
    CHECK_THROWS_AS(kmeans_2d(two, zero), RangeError);
}

TEST_CASE("well separated pairs are recovered") {
    const std::vector<Point2> pts{{0.0, 0.0}, {0.9, 0.9}, {0.02, 0.01}, {0.5, 0.0}, {0.91, 0.92}, {0.51, 0.02}};
    const auto m = kmeans_2d(pts, {});
    CHECK(m.k == 3);
    CHECK(m.assignments == std::vector<std::size_t>{0, 1, 0, 2, 1, 2});
    CHECK(m.inertia == doctest::Approx(oracle::exhaustive_min_inertia(as_pairs(pts), 3)).epsilon(1e-12));
}

TEST_CASE("best of restarts reaches the exhaustive optimum") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng() % 7;
        const auto pts = random_points(rng, n);
        KMeansOptions opts;
        opts.seed = static_cast<std::uint64_t>(trial);
        const auto m = kmeans_2d(pts, opts);
        CHECK(m.inertia == doctest::Approx(oracle::exhaustive_min_inertia(as_pairs(pts), 3)).epsilon(1e-9));
        check_fixpoint(pts, m);
    }
}

TEST_CASE("model invariants") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto pts = random_points(rng, 4 + rng() % 30);
        const auto m = kmeans_2d(pts, {});
        CHECK(m.k == 3);
        const auto members = m.members();
        for (const auto& g : members) {
            CHECK(!g.empty());
        }
        // Canonical ids follow the first appearance of each cluster.
        std::size_t seen = 0;
        for (std::size_t a : m.assignments) {
            CHECK(a <= seen);
            if (a == seen) {
                ++seen;
            }
        }
        for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
            CHECK(m.inertia_history[i] <= m.inertia_history[i - 1] + 1e-12);
        }
        CHECK(m.inertia == doctest::Approx(partition_inertia(pts, m.assignments, m.k)).epsilon(1e-12));
        check_fixpoint(pts, m);
        const auto again = kmeans_2d(pts, {});
        CHECK(again.assignments == m.assignments);
    }
}

TEST_CASE("coincident points") {
    const std::vector<Point2> same(6, Point2{0.5, 0.5});
    const auto m = kmeans_2d(same, {});
    CHECK(m.k == 3);
    CHECK(m.inertia == 0.0);
}

TEST_CASE("silhouette") {
    const std::vector<Point2> pts{{0, 0}, {0.01, 0}, {1, 0}, {1.01, 0}, {0, 1}, {0.01, 1}};
    const std::vector<std::size_t> three{0, 0, 1, 1, 2, 2};
    const std::vector<std::size_t> two{0, 0, 1, 1, 0, 0};
    CHECK(silhouette_score(pts, three, 3) > silhouette_score(pts, two, 2));
    CHECK(silhouette_score(pts, three, 3) > 0.9);
}
