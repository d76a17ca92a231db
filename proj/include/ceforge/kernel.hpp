#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "common.hpp"
#include "dense.hpp"
#include "graph.hpp"

namespace ceforge {

// Trade-off alpha in [0,1] and propagation depth L. L must match the
// receptive field of the classifier under audit.
struct KsParams {
    double alpha = 0.5;
    unsigned hops = 2;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) fail("ks: alpha must lie in [0,1]");
    }
};

// Cosine similarity, clamped to [-1,1]. Either vector having zero norm
// yields 0: no evidence of similarity.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
             std::to_string(b.size()));
    }
    const double na = norm2(a);
    if (a.data() == b.data()) return na == 0.0 ? 0.0 : 1.0;  // exact self-similarity
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// Iterated cosine-weighted neighbor propagation. Returns the L+1 iterates
// x^0..x^L, where x^0 is the raw feature matrix and
//   x^{l+1}_v = alpha * x^l_v + (1-alpha)/|N(v)| * sum_u cos(x^l_v, x^l_u) * x^l_u.
// Isolated nodes keep only the alpha term (the neighbor sum is empty).
inline std::vector<DenseMatrix> ks_propagate(const FeatureMatrix& features, const Graph& graph,
                                             const KsParams& params) {
    params.validate();
    if (features.rows != graph.num_nodes()) {
        fail("ks_propagate: feature rows " + std::to_string(features.rows) +
             " != graph nodes " + std::to_string(graph.num_nodes()));
    }
    std::vector<DenseMatrix> iterates;
    iterates.reserve(params.hops + 1);
    iterates.push_back(features);
    const size_t n = features.rows;
    const size_t d = features.cols;
    for (unsigned l = 0; l < params.hops; ++l) {
        const DenseMatrix& cur = iterates.back();
        DenseMatrix next(n, d);
        parallel_for(n, [&](size_t v) {
            auto xv = cur.row(v);
            auto out = next.row(v);
            for (size_t j = 0; j < d; ++j) out[j] = params.alpha * xv[j];
            const auto& nbrs = graph.adj[v];
            if (nbrs.empty()) return;
            const double scale = (1.0 - params.alpha) / static_cast<double>(nbrs.size());
            for (NodeId u : nbrs) {
                auto xu = cur.row(u);
                const double coef = scale * cosine(xv, xu);
                if (coef == 0.0) continue;
                for (size_t j = 0; j < d; ++j) out[j] += coef * xu[j];
            }
        }, 64);
        iterates.push_back(std::move(next));
    }
    return iterates;
}

// x^agg_v = sum of x^l_v over l = 0..L.
inline AggregatedVectors aggregate(const std::vector<DenseMatrix>& iterates) {
    if (iterates.empty()) fail("aggregate: empty iterate sequence");
    AggregatedVectors agg = iterates.front();
    for (size_t l = 1; l < iterates.size(); ++l) {
        const DenseMatrix& m = iterates[l];
        if (m.rows != agg.rows || m.cols != agg.cols) fail("aggregate: iterate shape mismatch");
        for (size_t i = 0; i < agg.data.size(); ++i) agg.data[i] += m.data[i];
    }
    return agg;
}

inline AggregatedVectors aggregated_vectors(const FeatureMatrix& features, const Graph& graph,
                                            const KsParams& params) {
    return aggregate(ks_propagate(features, graph, params));
}

// KS(v,u): cosine similarity of the aggregated vectors.
inline double ks_score(const AggregatedVectors& agg, NodeId v, NodeId u) {
    if (v >= agg.rows || u >= agg.rows) {
        fail("ks_score: node id out of range (" + std::to_string(v) + "," + std::to_string(u) + ")");
    }
    return cosine(agg.row(v), agg.row(u));
}

} // namespace ceforge
