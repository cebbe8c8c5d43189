#include "atf/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atf/errors.hpp"
#include "atf/random.hpp"

namespace atf {

double squared_distance(const Point2& a, const Point2& b) noexcept {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

double distance(const Point2& a, const Point2& b) noexcept { return std::sqrt(squared_distance(a, b)); }

std::vector<std::vector<std::size_t>> ClusterModel::members() const {
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        out[assignments[i]].push_back(i);
    }
    return out;
}

namespace {

std::vector<Point2> cluster_means(std::span<const Point2> points, std::span<const std::size_t> assignments,
                                  std::size_t k) {
    std::vector<Point2> sums(k, Point2{0.0, 0.0});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        sums[assignments[i]][0] += points[i][0];
        sums[assignments[i]][1] += points[i][1];
        ++counts[assignments[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] > 0) {
            sums[j][0] /= static_cast<double>(counts[j]);
            sums[j][1] /= static_cast<double>(counts[j]);
        }
    }
    return sums;
}

std::size_t nearest(const Point2& p, std::span<const Point2> centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
        const double d = squared_distance(p, centroids[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

std::vector<Point2> kmeanspp_init(std::span<const Point2> points, std::size_t k, Rng& rng) {
    const std::size_t m = points.size();
    std::vector<Point2> centers;
    centers.reserve(k);
    std::vector<bool> used(m, false);
    const std::size_t first = static_cast<std::size_t>(rng.below(m));
    centers.push_back(points[first]);
    used[first] = true;

    std::vector<double> d2(m);
    for (std::size_t i = 0; i < m; ++i) {
        d2[i] = squared_distance(points[i], centers[0]);
    }
    while (centers.size() < k) {
        double total = 0.0;
        for (double d : d2) {
            total += d;
        }
        std::size_t pick = m;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == m) {
                // Rounding left target beyond the last positive weight.
                for (std::size_t i = m; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // All points coincide with a centre: take any unused point.
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < m; ++i) {
                if (!used[i]) {
                    free.push_back(i);
                }
            }
            pick = free[static_cast<std::size_t>(rng.below(free.size()))];
        }
        used[pick] = true;
        centers.push_back(points[pick]);
        for (std::size_t i = 0; i < m; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
        }
    }
    return centers;
}

// Moves the point farthest from its centroid (taken from a cluster with more
// than one member) into each empty cluster.
void repair_empty_clusters(std::span<const Point2> points, std::vector<std::size_t>& assignments,
                           std::vector<Point2>& centroids) {
    const std::size_t k = centroids.size();
    for (;;) {
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t a : assignments) {
            ++counts[a];
        }
        auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
        if (empty == counts.end()) {
            return;
        }
        const std::size_t target = static_cast<std::size_t>(empty - counts.begin());
        std::size_t donor = points.size();
        double worst = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (counts[assignments[i]] < 2) {
                continue;
            }
            const double d = squared_distance(points[i], centroids[assignments[i]]);
            if (d > worst) {
                worst = d;
                donor = i;
            }
        }
        if (donor == points.size()) {
            return; // fewer points than clusters; cannot happen when m > k
        }
        assignments[donor] = target;
        centroids[target] = points[donor];
    }
}

// Single-point transfers that lower the inertia (Hartigan's rule). Lloyd
// stops at any partition where each point sits nearest its own centroid;
// these moves escape the ones a transfer can still improve.
bool transfer_points(std::span<const Point2> points, std::vector<std::size_t>& assignments,
                     std::vector<Point2>& centroids) {
    const std::size_t k = centroids.size();
    std::vector<double> counts(k, 0.0);
    for (std::size_t a : assignments) {
        counts[a] += 1.0;
    }
    bool moved_any = false;
    for (bool moved = true; moved;) {
        moved = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t from = assignments[i];
            if (counts[from] < 2.0) {
                continue;
            }
            const double removal = counts[from] / (counts[from] - 1.0) * squared_distance(points[i], centroids[from]);
            std::size_t best = from;
            double best_gain = 1e-12;
            for (std::size_t to = 0; to < k; ++to) {
                if (to == from) {
                    continue;
                }
                const double addition = counts[to] / (counts[to] + 1.0) * squared_distance(points[i], centroids[to]);
                if (removal - addition > best_gain) {
                    best_gain = removal - addition;
                    best = to;
                }
            }
            if (best == from) {
                continue;
            }
            for (int d = 0; d < 2; ++d) {
                centroids[from][d] = (centroids[from][d] * counts[from] - points[i][d]) / (counts[from] - 1.0);
                centroids[best][d] = (centroids[best][d] * counts[best] + points[i][d]) / (counts[best] + 1.0);
            }
            counts[from] -= 1.0;
            counts[best] += 1.0;
            assignments[i] = best;
            moved = moved_any = true;
        }
    }
    return moved_any;
}

struct RunResult {
    std::vector<std::size_t> assignments;
    std::vector<Point2> centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> history;
};

RunResult lloyd(std::span<const Point2> points, std::vector<Point2> centroids, std::size_t max_iterations) {
    const std::size_t m = points.size();
    RunResult r;
    r.assignments.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        r.assignments[i] = nearest(points[i], centroids);
    }
    repair_empty_clusters(points, r.assignments, centroids);
    centroids = cluster_means(points, r.assignments, centroids.size());
    r.history.push_back(partition_inertia(points, r.assignments, centroids.size()));

    for (std::size_t it = 0; it < max_iterations; ++it) {
        ++r.iterations;
        std::vector<std::size_t> next(m);
        for (std::size_t i = 0; i < m; ++i) {
            next[i] = nearest(points[i], centroids);
        }
        repair_empty_clusters(points, next, centroids);
        const bool converged = next == r.assignments;
        r.assignments = std::move(next);
        centroids = cluster_means(points, r.assignments, centroids.size());
        if (converged) {
            break;
        }
        r.history.push_back(partition_inertia(points, r.assignments, centroids.size()));
    }
    if (transfer_points(points, r.assignments, centroids)) {
        centroids = cluster_means(points, r.assignments, centroids.size());
        r.history.push_back(partition_inertia(points, r.assignments, centroids.size()));
    }
    r.centroids = std::move(centroids);
    r.inertia = partition_inertia(points, r.assignments, r.centroids.size());
    return r;
}

ClusterModel canonical(RunResult r, std::size_t k) {
    std::vector<std::size_t> relabel(k, k);
    std::size_t next = 0;
    for (std::size_t a : r.assignments) {
        if (relabel[a] == k) {
            relabel[a] = next++;
        }
    }
    ClusterModel model;
    model.k = next;
    model.centroids.assign(next, Point2{0.0, 0.0});
    for (std::size_t j = 0; j < k; ++j) {
        if (relabel[j] < k) {
            model.centroids[relabel[j]] = r.centroids[j];
        }
    }
    model.assignments.reserve(r.assignments.size());
    for (std::size_t a : r.assignments) {
        model.assignments.push_back(relabel[a]);
    }
    model.inertia = r.inertia;
    model.iterations = r.iterations;
    model.inertia_history = std::move(r.history);
    return model;
}

} // namespace

double partition_inertia(std::span<const Point2> points, std::span<const std::size_t> assignments, std::size_t k) {
    const auto means = cluster_means(points, assignments, k);
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        total += squared_distance(points[i], means[assignments[i]]);
    }
    return total;
}

ClusterModel kmeans_2d(std::span<const Point2> points, const KMeansOptions& options) {
    if (points.empty()) {
        throw RangeError("kmeans_2d needs at least one point");
    }
    if (options.k == 0) {
        throw RangeError("kmeans_2d needs k >= 1");
    }
    const std::size_t m = points.size();
    if (m <= options.k) {
        ClusterModel model;
        model.k = m;
        for (std::size_t i = 0; i < m; ++i) {
            model.assignments.push_back(i);
            model.centroids.push_back(points[i]);
        }
        model.inertia_history.push_back(0.0);
        return model;
    }

    const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
    RunResult best;
    bool have_best = false;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(options.seed, "kmeans++", r));
        auto run = lloyd(points, kmeanspp_init(points, options.k, rng), options.max_iterations);
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }
    return canonical(std::move(best), options.k);
}

double silhouette_score(std::span<const Point2> points, std::span<const std::size_t> assignments, std::size_t k) {
    const std::size_t m = points.size();
    if (m == 0) {
        return 0.0;
    }
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assignments) {
        ++sizes[a];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t own = assignments[i];
        if (sizes[own] <= 1) {
            continue;
        }
        std::vector<double> sum(k, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            if (j != i) {
                sum[assignments[j]] += distance(points[i], points[j]);
            }
        }
        const double a = sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own && sizes[c] > 0) {
                b = std::min(b, sum[c] / static_cast<double>(sizes[c]));
            }
        }
        if (!std::isfinite(b)) {
            continue;
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(m);
}

} // namespace atf
