#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "common.hpp"
#include "dense.hpp"

namespace ceforge {

struct KmeansOptions {
    std::uint64_t seed = 0;
    size_t max_iters = 100;
    double tol = 1e-6;
};

// One clustering of the test nodes: unit centroids, per-point cluster
// assignment, and per-point cap-overlap boundary weights (filled in by the
// index builder once centroids are known).
struct Partition {
    DenseMatrix centroids;               // m x d, unit rows
    std::vector<std::uint32_t> assignment;
    std::vector<double> weights;
    std::vector<double> objective_trace;  // weighted-cosine objective per iteration
    bool converged = false;

    size_t num_clusters() const { return centroids.rows; }
};

namespace detail {

// Greedy farthest-first seeding in angular distance: first pick random,
// then repeatedly take the point minimizing max-cosine to chosen seeds.
inline std::vector<size_t> farthest_first_seeds(const DenseMatrix& points, size_t m,
                                                std::uint64_t seed) {
    const size_t n = points.rows;
    std::mt19937_64 rng(seed);
    std::vector<size_t> chosen;
    chosen.reserve(m);
    chosen.push_back(std::uniform_int_distribution<size_t>(0, n - 1)(rng));
    std::vector<double> closest(n, -2.0);  // max cosine to any chosen seed
    while (chosen.size() < m) {
        const auto last = points.row(chosen.back());
        for (size_t i = 0; i < n; ++i) {
            closest[i] = std::max(closest[i], dot(points.row(i), last));
        }
        size_t best = 0;
        double best_val = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            if (closest[i] < best_val) {
                best_val = closest[i];
                best = i;
            }
        }
        chosen.push_back(best);
    }
    return chosen;
}

} // namespace detail

// Weighted spherical k-means: maximizes sum_i sum_{v in c_i} w_v cos(x_v, mu_i)
// by alternating max-cosine assignment and weighted-mean centroid updates
// (centroids re-normalized to unit length, which keeps the alternation a
// monotone ascent). Assignment ties break to the lowest cluster id. An
// emptied cluster is reseeded with the point of lowest weighted similarity
// to its current centroid, and that point becomes the new centroid.
inline Partition weighted_kmeans(const DenseMatrix& points, const std::vector<double>& weights,
                                 size_t m, const KmeansOptions& opts) {
    const size_t n = points.rows;
    const size_t d = points.cols;
    if (m < 1) fail("weighted_kmeans: m must be >= 1");
    if (n < m) {
        fail("weighted_kmeans: fewer points (" + std::to_string(n) + ") than clusters (" +
             std::to_string(m) + ")");
    }
    if (weights.size() != n) fail("weighted_kmeans: weights size mismatch");
    double weight_sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) fail("weighted_kmeans: weights must be non-negative");
        weight_sum += w;
    }
    if (weight_sum == 0.0) fail("weighted_kmeans: weights must not all be zero");

    Partition part;
    part.centroids = DenseMatrix(m, d);
    part.assignment.assign(n, 0);
    const auto seeds = detail::farthest_first_seeds(points, m, opts.seed);
    for (size_t i = 0; i < m; ++i) {
        auto src = points.row(seeds[i]);
        std::copy(src.begin(), src.end(), part.centroids.row(i).begin());
    }

    std::vector<size_t> cluster_size(m, 0);
    double prev_obj = -std::numeric_limits<double>::infinity();
    for (size_t iter = 0; iter < opts.max_iters; ++iter) {
        // Assignment step.
        parallel_for(n, [&](size_t v) {
            auto x = points.row(v);
            size_t best = 0;
            double best_dot = dot(x, part.centroids.row(0));
            for (size_t i = 1; i < m; ++i) {
                const double dv = dot(x, part.centroids.row(i));
                if (dv > best_dot) {
                    best_dot = dv;
                    best = i;
                }
            }
            part.assignment[v] = static_cast<std::uint32_t>(best);
        }, 256);

        std::fill(cluster_size.begin(), cluster_size.end(), 0);
        for (size_t v = 0; v < n; ++v) ++cluster_size[part.assignment[v]];

        // Reseed empty clusters. Moving the worst-fitting point to its own
        // cluster (centroid := the point) cannot decrease the objective.
        for (size_t i = 0; i < m; ++i) {
            if (cluster_size[i] != 0) continue;
            size_t worst = static_cast<size_t>(-1);
            double worst_val = std::numeric_limits<double>::infinity();
            for (size_t v = 0; v < n; ++v) {
                if (cluster_size[part.assignment[v]] <= 1) continue;
                const double val = weights[v] * dot(points.row(v), part.centroids.row(part.assignment[v]));
                if (val < worst_val) {
                    worst_val = val;
                    worst = v;
                }
            }
            if (worst == static_cast<size_t>(-1)) continue;  // all clusters singleton
            --cluster_size[part.assignment[worst]];
            part.assignment[worst] = static_cast<std::uint32_t>(i);
            ++cluster_size[i];
            auto src = points.row(worst);
            std::copy(src.begin(), src.end(), part.centroids.row(i).begin());
        }

        // Update step: weighted mean, then unit-normalize. A zero resultant
        // keeps the previous centroid.
        DenseMatrix sums(m, d);
        for (size_t v = 0; v < n; ++v) {
            const double w = weights[v];
            if (w == 0.0) continue;
            auto x = points.row(v);
            auto acc = sums.row(part.assignment[v]);
            for (size_t j = 0; j < d; ++j) acc[j] += w * x[j];
        }
        for (size_t i = 0; i < m; ++i) {
            auto acc = sums.row(i);
            const double nrm = norm2(acc);
            if (nrm == 0.0) continue;
            auto c = part.centroids.row(i);
            for (size_t j = 0; j < d; ++j) c[j] = acc[j] / nrm;
        }

        double obj = 0.0;
        for (size_t v = 0; v < n; ++v) {
            obj += weights[v] * dot(points.row(v), part.centroids.row(part.assignment[v]));
        }
        part.objective_trace.push_back(obj);
        if (obj - prev_obj < opts.tol) {
            part.converged = true;
            break;
        }
        prev_obj = obj;
    }
    return part;
}

} // namespace ceforge
