#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "common.hpp"
#include "dense.hpp"
#include "gcn.hpp"
#include "search.hpp"

namespace ceforge {

struct AsOptions {
    bool effective_k = false;   // divide by |hits| instead of k
    bool exclude_empty = false; // drop empty-result nodes from the outer mean
};

// AS: mean over test nodes of the mean KS of their top-k LCEs. By default
// short hit lists are still divided by k and nodes with no counterfactual
// contribute 0; both behaviors have opt-out flags.
inline double average_similarity(const std::vector<CeQueryResult>& results, size_t k,
                                 const AsOptions& opts = {}) {
    if (k < 1) fail("average_similarity: k must be >= 1");
    if (results.empty()) fail("average_similarity: no query results");
    double total = 0.0;
    size_t counted = 0;
    for (const auto& res : results) {
        if (res.hits.empty() && opts.exclude_empty) continue;
        double sum = 0.0;
        for (const auto& h : res.hits) sum += h.ks;
        const size_t denom = opts.effective_k ? std::max<size_t>(res.hits.size(), 1) : k;
        total += sum / static_cast<double>(denom);
        ++counted;
    }
    if (counted == 0) return 0.0;
    return total / static_cast<double>(counted);
}

// A feature-value predicate: exact match for categorical/one-hot features,
// or a half-open bucket [lo, hi) for continuous ones.
struct FeaturePredicate {
    enum class Kind : std::uint8_t { Exact, Bucket };

    size_t feature = 0;
    Kind kind = Kind::Exact;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    static FeaturePredicate exact(size_t feature, double value) {
        FeaturePredicate p;
        p.feature = feature;
        p.kind = Kind::Exact;
        p.value = value;
        return p;
    }

    static FeaturePredicate bucket(size_t feature, double lo, double hi) {
        if (!(lo < hi)) fail("feature predicate: bucket requires lo < hi");
        FeaturePredicate p;
        p.feature = feature;
        p.kind = Kind::Bucket;
        p.lo = lo;
        p.hi = hi;
        return p;
    }

    bool matches(double x) const {
        return kind == Kind::Exact ? x == value : (x >= lo && x < hi);
    }

    std::string label() const {
        char buf[96];
        if (kind == Kind::Exact) {
            std::snprintf(buf, sizeof(buf), "f%zu=%g", feature, value);
        } else {
            std::snprintf(buf, sizeof(buf), "f%zu in [%g,%g)", feature, lo, hi);
        }
        return buf;
    }
};

// Discrimination score: fraction of a node's top-k LCEs whose feature value
// differs from the node's. The predicate must hold at the query node.
inline double discrimination_score(const FeatureMatrix& features, const FeaturePredicate& pred,
                                   NodeId v, const std::vector<Hit>& hits, size_t k,
                                   bool effective_k = false) {
    if (k < 1) fail("discrimination_score: k must be >= 1");
    if (pred.feature >= features.cols) fail("discrimination_score: feature index out of range");
    if (!pred.matches(features.at(v, pred.feature))) {
        fail("discrimination_score: predicate does not hold at node " + std::to_string(v));
    }
    size_t differing = 0;
    for (const auto& h : hits) {
        if (!pred.matches(features.at(h.node, pred.feature))) ++differing;
    }
    const size_t denom = effective_k ? std::max<size_t>(hits.size(), 1) : k;
    return static_cast<double>(differing) / static_cast<double>(denom);
}

struct DsRow {
    FeaturePredicate predicate;
    double mean_ds = 0.0;
    size_t support = 0;  // test nodes where the predicate holds
};

// Mean DS per feature-value predicate over the test nodes where it holds,
// sorted descending. `results` must hold the top-k LCEs per test node,
// aligned with `test_nodes`.
inline std::vector<DsRow> dataset_discrimination_table(
    const FeatureMatrix& features, const std::vector<FeaturePredicate>& predicates,
    const std::vector<NodeId>& test_nodes, const std::vector<CeQueryResult>& results, size_t k,
    bool effective_k = false) {
    if (predicates.empty()) fail("discrimination table: empty predicate list");
    if (test_nodes.size() != results.size()) {
        fail("discrimination table: results are not aligned with test nodes");
    }
    std::vector<DsRow> rows;
    rows.reserve(predicates.size());
    for (const auto& pred : predicates) {
        DsRow row;
        row.predicate = pred;
        double sum = 0.0;
        for (size_t i = 0; i < test_nodes.size(); ++i) {
            if (!pred.matches(features.at(test_nodes[i], pred.feature))) continue;
            sum += discrimination_score(features, pred, test_nodes[i], results[i].hits, k,
                                        effective_k);
            ++row.support;
        }
        row.mean_ds = row.support > 0 ? sum / static_cast<double>(row.support) : 0.0;
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(), [](const DsRow& x, const DsRow& y) {
        if (x.mean_ds != y.mean_ds) return x.mean_ds > y.mean_ds;
        if (x.predicate.feature != y.predicate.feature) return x.predicate.feature < y.predicate.feature;
        return x.predicate.value < y.predicate.value;
    });
    return rows;
}

inline std::vector<NodeId> distinct_gce_nodes(const std::vector<GcePair>& gce, size_t k) {
    std::set<NodeId> nodes;
    const size_t limit = std::min(k, gce.size());
    for (size_t i = 0; i < limit; ++i) {
        nodes.insert(gce[i].a);
        nodes.insert(gce[i].b);
    }
    return {nodes.begin(), nodes.end()};
}

// Fraction of the distinct nodes in the top-k GCE pairs whose predicted
// label equals their true label.
inline double accuracy_within_topk_gce(const std::vector<GcePair>& gce,
                                       const PredictionTable& pred, size_t k) {
    const auto nodes = distinct_gce_nodes(gce, k);
    if (nodes.empty()) fail("accuracy_within_topk_gce: no nodes in the top-k pairs");
    size_t correct = 0;
    for (NodeId v : nodes) {
        if (!pred.has_true_label(v)) {
            fail("accuracy_within_topk_gce: missing true label for node " + std::to_string(v));
        }
        if (pred.label(v) == pred.true_label[v]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

// CSV of the distinct nodes in the top-k GCEs, for external fine-tuning
// pipelines to consume as a validation set.
inline void export_validation_set(const std::vector<GcePair>& gce, size_t k,
                                  const std::string& path) {
    if (k < 1) fail("export_validation_set: k must be >= 1");
    const auto nodes = distinct_gce_nodes(gce, k);
    std::ofstream out(path);
    if (!out) fail("cannot write validation set: " + path);
    out << "node_id\n";
    for (NodeId v : nodes) out << v << "\n";
    if (!out) fail("I/O error writing " + path);
}

} // namespace ceforge
