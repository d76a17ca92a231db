#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"
#include "dense.hpp"
#include "gcn.hpp"
#include "index.hpp"
#include "kernel.hpp"

namespace ceforge {

enum class QueryMode : std::uint8_t { Exact, Indexed };

inline const char* mode_name(QueryMode m) { return m == QueryMode::Exact ? "exact" : "indexed"; }

enum class ResultStatus : std::uint8_t {
    Ok,
    NoCounterfactual,  // no test node with a different predicted label in scope
    EmptyCandidates,   // indexed only: the entry cluster holds no other node
};

inline const char* status_name(ResultStatus s) {
    switch (s) {
        case ResultStatus::Ok: return "ok";
        case ResultStatus::NoCounterfactual: return "no_counterfactual";
        default: return "empty_candidates";
    }
}

struct Hit {
    NodeId node;
    double ks;
};

struct CeQueryResult {
    NodeId query = 0;
    QueryMode mode = QueryMode::Exact;
    ResultStatus status = ResultStatus::Ok;
    std::vector<Hit> hits;              // (ks desc, node asc)
    size_t candidates_scanned = 0;      // nodes examined by the scan loop
};

// Unordered pair stored as (min,max).
struct GcePair {
    NodeId a;
    NodeId b;
    double ks;
};

// Hits ordered by (ks desc, node id asc). Strict total order, so results do
// not depend on scan order.
inline bool hit_before(const Hit& x, const Hit& y) {
    if (x.ks != y.ks) return x.ks > y.ks;
    return x.node < y.node;
}

inline bool pair_before(const GcePair& x, const GcePair& y) {
    if (x.ks != y.ks) return x.ks > y.ks;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
}

// Size-bounded descending bucket. A candidate enters when the bucket is not
// full or it orders before the current last element, which is then evicted.
class TopkBucket {
public:
    explicit TopkBucket(size_t k) : k_(k) {
        if (k < 1) fail("top-k bucket requires k >= 1");
        hits_.reserve(k + 1);
    }

    bool insert(NodeId node, double ks) {
        const Hit h{node, ks};
        if (hits_.size() == k_ && !hit_before(h, hits_.back())) return false;
        auto pos = std::upper_bound(hits_.begin(), hits_.end(), h, hit_before);
        hits_.insert(pos, h);
        if (hits_.size() > k_) hits_.pop_back();
        return true;
    }

    const std::vector<Hit>& hits() const { return hits_; }
    std::vector<Hit> take() { return std::move(hits_); }

private:
    size_t k_;
    std::vector<Hit> hits_;
};

// Test nodes partitioned by predicted class, precomputed once per
// prediction table so a local query only scans the other classes.
class ClassPartition {
public:
    ClassPartition(const PredictionTable& pred, const std::vector<NodeId>& test_nodes)
        : by_class_(static_cast<size_t>(pred.num_classes)) {
        for (NodeId v : test_nodes) {
            const std::int32_t label = pred.label(v);
            by_class_[static_cast<size_t>(label)].push_back(v);
        }
        for (auto& bucket : by_class_) std::sort(bucket.begin(), bucket.end());
    }

    size_t num_classes() const { return by_class_.size(); }
    const std::vector<NodeId>& of_class(size_t label) const { return by_class_[label]; }

    size_t cross_class_count(std::int32_t label) const {
        size_t n = 0;
        for (size_t c = 0; c < by_class_.size(); ++c) {
            if (static_cast<std::int32_t>(c) != label) n += by_class_[c].size();
        }
        return n;
    }

private:
    std::vector<std::vector<NodeId>> by_class_;
};

// Exact local search: linear scan over test nodes of every other predicted
// class, keeping the top-k by KS score.
inline CeQueryResult local_ce_exact(const AggregatedVectors& agg, const ClassPartition& classes,
                                    const PredictionTable& pred, const SplitAssignment& splits,
                                    NodeId v, size_t k) {
    if (!splits.is_test(v)) fail("query node " + std::to_string(v) + " is not a test node");
    CeQueryResult res;
    res.query = v;
    res.mode = QueryMode::Exact;
    const std::int32_t label = pred.label(v);
    if (classes.cross_class_count(label) == 0) {
        res.status = ResultStatus::NoCounterfactual;
        return res;
    }
    TopkBucket bucket(k);
    for (size_t c = 0; c < classes.num_classes(); ++c) {
        if (static_cast<std::int32_t>(c) == label) continue;
        for (NodeId u : classes.of_class(c)) {
            ++res.candidates_scanned;
            bucket.insert(u, ks_score(agg, v, u));
        }
    }
    res.hits = bucket.take();
    return res;
}

// Indexed local search: the same scan restricted to the query's entry
// cluster. Approximate by construction; an empty cluster is reported
// distinctly from "no cross-label candidate in the cluster".
inline CeQueryResult local_ce_indexed(const SphericalIndex& index, const AggregatedVectors& agg,
                                      const PredictionTable& pred, NodeId v, size_t k) {
    CeQueryResult res;
    res.query = v;
    res.mode = QueryMode::Indexed;
    const auto& members = index.entry_cluster_members(v);
    const std::int32_t label = pred.label(v);
    TopkBucket bucket(k);
    bool any_candidate = false;
    bool any_cross_label = false;
    for (NodeId u : members) {
        if (u == v) continue;
        any_candidate = true;
        ++res.candidates_scanned;
        if (pred.label(u) == label) continue;
        any_cross_label = true;
        bucket.insert(u, ks_score(agg, v, u));
    }
    if (!any_candidate) {
        res.status = ResultStatus::EmptyCandidates;
    } else if (!any_cross_label) {
        res.status = ResultStatus::NoCounterfactual;
    }
    res.hits = bucket.take();
    return res;
}

enum class GceStrategy : std::uint8_t {
    PerNodeTop1,   // best LCE per node, then global top-k over those
    FullPairwise,  // exact reference: top-k over all cross-label pairs
};

inline const char* strategy_name(GceStrategy s) {
    return s == GceStrategy::PerNodeTop1 ? "per-node-top1" : "full-pairwise";
}

struct GlobalCeStats {
    size_t queries = 0;
    size_t candidates_scanned = 0;
};

// Global search: per-node-top1 runs the selected local algorithm per node
// and merges; full-pairwise scans every cross-label pair and is the oracle
// reference. Ties break to lexicographic (min,max) pair order.
inline std::vector<GcePair> global_ce(const AggregatedVectors& agg, const ClassPartition& classes,
                                      const PredictionTable& pred, const SplitAssignment& splits,
                                      const std::vector<NodeId>& test_nodes, size_t k,
                                      QueryMode mode, GceStrategy strategy,
                                      const SphericalIndex* index = nullptr,
                                      GlobalCeStats* stats = nullptr) {
    if (k < 1) fail("global_ce: k must be >= 1");
    std::vector<GcePair> pairs;
    if (strategy == GceStrategy::FullPairwise) {
        std::vector<GcePair> bucket;
        for (size_t i = 0; i < test_nodes.size(); ++i) {
            const NodeId v = test_nodes[i];
            const std::int32_t lv = pred.label(v);
            for (size_t j = i + 1; j < test_nodes.size(); ++j) {
                const NodeId u = test_nodes[j];
                if (pred.label(u) == lv) continue;
                if (stats) ++stats->candidates_scanned;
                const GcePair cand{std::min(v, u), std::max(v, u), ks_score(agg, v, u)};
                if (bucket.size() == k && !pair_before(cand, bucket.back())) continue;
                bucket.insert(std::upper_bound(bucket.begin(), bucket.end(), cand, pair_before),
                              cand);
                if (bucket.size() > k) bucket.pop_back();
            }
        }
        if (stats) stats->queries = test_nodes.size();
        return bucket;
    }

    if (mode == QueryMode::Indexed && index == nullptr) {
        fail("global_ce: indexed mode requires an index");
    }
    std::vector<CeQueryResult> results(test_nodes.size());
    parallel_for(test_nodes.size(), [&](size_t i) {
        const NodeId v = test_nodes[i];
        results[i] = mode == QueryMode::Exact
                         ? local_ce_exact(agg, classes, pred, splits, v, 1)
                         : local_ce_indexed(*index, agg, pred, v, 1);
    }, 16);
    pairs.reserve(test_nodes.size());
    for (size_t i = 0; i < results.size(); ++i) {
        if (stats) {
            ++stats->queries;
            stats->candidates_scanned += results[i].candidates_scanned;
        }
        if (results[i].hits.empty()) continue;
        const NodeId v = test_nodes[i];
        const NodeId u = results[i].hits[0].node;
        pairs.push_back({std::min(v, u), std::max(v, u), results[i].hits[0].ks});
    }
    std::sort(pairs.begin(), pairs.end(), pair_before);
    pairs.erase(std::unique(pairs.begin(), pairs.end(),
                            [](const GcePair& x, const GcePair& y) {
                                return x.a == y.a && x.b == y.b;
                            }),
                pairs.end());
    if (pairs.size() > k) pairs.resize(k);
    return pairs;
}

// KS values print with 6 decimals; full precision stays internal.
inline std::string format_ks(double ks) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", ks);
    return buf;
}

inline void write_result_line(std::ostream& out, const CeQueryResult& res) {
    out << "{\"query\":" << res.query << ",\"mode\":\"" << mode_name(res.mode)
        << "\",\"status\":\"" << status_name(res.status) << "\",\"hits\":[";
    for (size_t i = 0; i < res.hits.size(); ++i) {
        if (i) out << ",";
        out << "{\"node\":" << res.hits[i].node << ",\"ks\":" << format_ks(res.hits[i].ks) << "}";
    }
    out << "]}\n";
}

inline void write_pair_line(std::ostream& out, const GcePair& p) {
    out << "{\"pair\":[" << p.a << "," << p.b << "],\"ks\":" << format_ks(p.ks) << "}\n";
}

} // namespace ceforge
