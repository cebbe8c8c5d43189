#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace atf {

using Point2 = std::array<double, 2>;

double squared_distance(const Point2& a, const Point2& b) noexcept;
double distance(const Point2& a, const Point2& b) noexcept;

struct KMeansOptions {
    std::size_t k = 3;
    std::uint64_t seed = 42;
    std::size_t restarts = 10;
    std::size_t max_iterations = 100;
};

/// A converged partition of 2-D points.
///
/// Cluster ids are canonical: cluster 0 holds the first point, cluster 1 the
/// first point not in cluster 0, and so on. Every cluster is non-empty.
struct ClusterModel {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    std::vector<Point2> centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    /// Inertia after each Lloyd update of the winning restart.
    std::vector<double> inertia_history;

    std::vector<std::vector<std::size_t>> members() const;
};

/// Seeded k-means++ initialisation followed by Lloyd iterations until the
/// assignment is a fixpoint (or max_iterations); best inertia over restarts.
/// With m <= k points each point is its own cluster.
ClusterModel kmeans_2d(std::span<const Point2> points, const KMeansOptions& options = {});

/// Sum of squared distances from each point to its cluster mean.
double partition_inertia(std::span<const Point2> points, std::span<const std::size_t> assignments, std::size_t k);

/// Mean silhouette coefficient with Euclidean distance. Points in singleton
/// clusters contribute 0.
double silhouette_score(std::span<const Point2> points, std::span<const std::size_t> assignments, std::size_t k);

} // namespace atf
