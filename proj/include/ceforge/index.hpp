#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "cap_geometry.hpp"
#include "common.hpp"
#include "dense.hpp"
#include "io.hpp"
#include "kmeans.hpp"

namespace ceforge {

struct IndexParams {
    size_t partitions = 50;
    size_t clusters = 10;
    double theta = std::numbers::pi / 3;
    std::uint64_t seed = 42;
    size_t kmeans_max_iters = 100;
    double kmeans_tol = 1e-6;
    // Uniform clustering weights in every partition when false ("w/o WC"
    // ablation); boundary weights still drive optimal-partition selection.
    bool weighted_clustering = true;

    void validate() const {
        if (partitions < 1) fail("index: partitions must be >= 1");
        if (clusters < 1) fail("index: clusters must be >= 1");
        if (!(theta > 0.0 && theta <= std::numbers::pi / 2 + 1e-12)) {
            fail("index: theta must lie in (0, pi/2]");
        }
    }
};

// v / ||v||; the zero vector maps to e_1 with a warning.
inline std::vector<double> unit_normalize(std::span<const double> v, size_t* zero_count = nullptr) {
    std::vector<double> out(v.begin(), v.end());
    const double nrm = norm2(v);
    if (nrm == 0.0) {
        if (zero_count) {
            ++*zero_count;
        } else {
            std::cerr << "warning: zero vector normalized to first basis direction\n";
        }
        std::fill(out.begin(), out.end(), 0.0);
        if (!out.empty()) out[0] = 1.0;
        return out;
    }
    for (double& x : out) x /= nrm;
    return out;
}

// The index of supplementary partitions: p clusterings of the test nodes,
// per-node boundary weights in each, and for every node the entry
// (C*[v], c*[v]) = (argmin-weight partition, its assigned cluster).
// Membership lists are stored for every partition despite the redundancy,
// so a lookup is O(1) plus the scan of one cluster.
struct SphericalIndex {
    IndexParams params;
    double alpha = 0.5;
    unsigned hops = 2;
    std::string cache_checksum;
    std::string graph_checksum;
    std::string features_checksum;

    std::vector<NodeId> test_nodes;  // ascending
    std::vector<Partition> parts;    // C^1..C^p
    std::vector<std::pair<std::uint32_t, std::uint32_t>> entry;  // per test node

    // membership[i][j] = test nodes assigned to cluster j of partition i.
    std::vector<std::vector<std::vector<NodeId>>> membership;
    std::unordered_map<NodeId, size_t> position;

    size_t pos_of(NodeId v) const {
        auto it = position.find(v);
        if (it == position.end()) fail("node " + std::to_string(v) + " is not indexed");
        return it->second;
    }

    bool indexed(NodeId v) const { return position.count(v) > 0; }

    const std::vector<NodeId>& entry_cluster_members(NodeId v) const {
        const size_t pos = pos_of(v);
        const auto [pi, ci] = entry[pos];
        return membership[pi][ci];
    }

    size_t total_membership_entries() const {
        size_t total = 0;
        for (const auto& part : membership) {
            for (const auto& cluster : part) total += cluster.size();
        }
        return total;
    }

    void rebuild_derived() {
        const size_t n = test_nodes.size();
        position.clear();
        position.reserve(n);
        for (size_t i = 0; i < n; ++i) position[test_nodes[i]] = i;
        membership.assign(parts.size(), {});
        for (size_t i = 0; i < parts.size(); ++i) {
            membership[i].assign(params.clusters, {});
            for (size_t v = 0; v < n; ++v) {
                membership[i][parts[i].assignment[v]].push_back(test_nodes[v]);
            }
        }
    }
};

// Candidate list for a query node: the members of its entry cluster minus
// the node itself.
inline std::vector<NodeId> lookup(const SphericalIndex& index, NodeId v) {
    const auto& members = index.entry_cluster_members(v);
    std::vector<NodeId> out;
    out.reserve(members.size() > 0 ? members.size() - 1 : 0);
    for (NodeId u : members) {
        if (u != v) out.push_back(u);
    }
    return out;
}

// Builds the supplementary partition chain. C^1 uses uniform weights; each
// later partition clusters with the previous partition's boundary weights,
// so nodes near earlier cluster boundaries pull centroids toward themselves.
inline SphericalIndex build_index(const AggregatedVectors& agg,
                                  const std::vector<NodeId>& test_nodes,
                                  const IndexParams& params) {
    params.validate();
    const size_t n = test_nodes.size();
    if (n < params.clusters) {
        fail("build_index: |V_test| = " + std::to_string(n) + " is smaller than clusters = " +
             std::to_string(params.clusters));
    }
    const size_t d = agg.cols;

    SphericalIndex index;
    index.params = params;
    index.test_nodes = test_nodes;

    DenseMatrix points(n, d);
    size_t zero_vectors = 0;
    for (size_t i = 0; i < n; ++i) {
        if (test_nodes[i] >= agg.rows) {
            fail("build_index: test node " + std::to_string(test_nodes[i]) +
                 " outside aggregated table");
        }
        auto unit = unit_normalize(agg.row(test_nodes[i]), &zero_vectors);
        std::copy(unit.begin(), unit.end(), points.row(i).begin());
    }
    if (zero_vectors > 0) {
        std::cerr << "warning: " << zero_vectors
                  << " zero aggregated vectors normalized to first basis direction\n";
    }

    const CapOverlapTable cap_table(params.theta, d >= 2 ? d : 2);
    std::vector<double> chain_weights(n, 1.0);
    const std::vector<double> uniform(n, 1.0);
    for (size_t p = 0; p < params.partitions; ++p) {
        KmeansOptions opts;
        opts.seed = params.seed + p;
        opts.max_iters = params.kmeans_max_iters;
        opts.tol = params.kmeans_tol;
        const std::vector<double>& w = params.weighted_clustering ? chain_weights : uniform;
        Partition part = weighted_kmeans(points, w, params.clusters, opts);

        // Boundary weight of every node against its assigned centroid.
        part.weights.resize(n);
        parallel_for(n, [&](size_t i) {
            const double dv = dot(points.row(i), part.centroids.row(part.assignment[i]));
            part.weights[i] = cap_table.weight_from_dot(dv);
        }, 512);

        // Degenerate chain: every node sits exactly on its centroid. Fall
        // back to uniform weights so the next partition stays well-posed.
        double wsum = 0.0;
        for (double wv : part.weights) wsum += wv;
        chain_weights = wsum > 0.0 ? part.weights : uniform;

        index.parts.push_back(std::move(part));
    }

    index.entry.resize(n);
    for (size_t i = 0; i < n; ++i) {
        size_t best_p = 0;
        double best_w = index.parts[0].weights[i];
        for (size_t p = 1; p < params.partitions; ++p) {
            if (index.parts[p].weights[i] < best_w) {
                best_w = index.parts[p].weights[i];
                best_p = p;
            }
        }
        index.entry[i] = {static_cast<std::uint32_t>(best_p), index.parts[best_p].assignment[i]};
    }
    index.rebuild_derived();
    return index;
}

inline std::string centroid_companion_path(const std::string& index_path) {
    return index_path + ".centroids.bin";
}

inline void save_index(const SphericalIndex& index, const std::string& path) {
    const size_t n = index.test_nodes.size();
    const size_t d = index.parts.empty() ? 0 : index.parts[0].centroids.cols;
    DenseMatrix centroids(index.parts.size() * index.params.clusters, d);
    for (size_t p = 0; p < index.parts.size(); ++p) {
        for (size_t c = 0; c < index.params.clusters; ++c) {
            auto src = index.parts[p].centroids.row(c);
            std::copy(src.begin(), src.end(),
                      centroids.row(p * index.params.clusters + c).begin());
        }
    }
    write_table(centroid_companion_path(path), centroids);

    nlohmann::ordered_json j;
    j["format"] = "ceforge-index";
    j["version"] = 1;
    j["params"] = {{"partitions", index.params.partitions},
                   {"clusters", index.params.clusters},
                   {"theta", index.params.theta},
                   {"seed", index.params.seed},
                   {"kmeans_max_iters", index.params.kmeans_max_iters},
                   {"kmeans_tol", index.params.kmeans_tol},
                   {"weighted_clustering", index.params.weighted_clustering},
                   {"alpha", index.alpha},
                   {"hops", index.hops},
                   {"cache_checksum", index.cache_checksum},
                   {"graph_checksum", index.graph_checksum},
                   {"features_checksum", index.features_checksum}};
    j["test_nodes"] = index.test_nodes;
    nlohmann::ordered_json parts = nlohmann::ordered_json::array();
    for (const auto& part : index.parts) {
        parts.push_back({{"assignment", part.assignment}, {"weights", part.weights}});
    }
    j["partitions"] = std::move(parts);
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (size_t i = 0; i < n; ++i) {
        entries.push_back({index.entry[i].first, index.entry[i].second});
    }
    j["entry"] = std::move(entries);

    std::ofstream out(path);
    if (!out) fail("cannot write index file: " + path);
    out << j.dump(2) << "\n";
    if (!out) fail("I/O error writing " + path);
}

inline SphericalIndex load_index(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open index file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("index file " + path + ": invalid JSON: " + e.what());
    }
    if (j.value("format", "") != "ceforge-index") fail(path + ": not a ceforge index file");

    SphericalIndex index;
    const auto& jp = j.at("params");
    index.params.partitions = jp.at("partitions").get<size_t>();
    index.params.clusters = jp.at("clusters").get<size_t>();
    index.params.theta = jp.at("theta").get<double>();
    index.params.seed = jp.at("seed").get<std::uint64_t>();
    index.params.kmeans_max_iters = jp.at("kmeans_max_iters").get<size_t>();
    index.params.kmeans_tol = jp.at("kmeans_tol").get<double>();
    index.params.weighted_clustering = jp.at("weighted_clustering").get<bool>();
    index.alpha = jp.at("alpha").get<double>();
    index.hops = jp.at("hops").get<unsigned>();
    index.cache_checksum = jp.at("cache_checksum").get<std::string>();
    index.graph_checksum = jp.at("graph_checksum").get<std::string>();
    index.features_checksum = jp.at("features_checksum").get<std::string>();
    index.test_nodes = j.at("test_nodes").get<std::vector<NodeId>>();

    const DenseMatrix centroids = read_table(centroid_companion_path(path));
    const size_t n = index.test_nodes.size();
    const size_t p = index.params.partitions;
    const size_t m = index.params.clusters;
    if (centroids.rows != p * m) fail(path + ": centroid table has wrong row count");
    const auto& jparts = j.at("partitions");
    if (jparts.size() != p) fail(path + ": partition count mismatch");
    for (size_t i = 0; i < p; ++i) {
        Partition part;
        part.centroids = DenseMatrix(m, centroids.cols);
        for (size_t c = 0; c < m; ++c) {
            auto src = centroids.row(i * m + c);
            std::copy(src.begin(), src.end(), part.centroids.row(c).begin());
        }
        part.assignment = jparts[i].at("assignment").get<std::vector<std::uint32_t>>();
        part.weights = jparts[i].at("weights").get<std::vector<double>>();
        if (part.assignment.size() != n || part.weights.size() != n) {
            fail(path + ": partition arrays have wrong length");
        }
        for (auto a : part.assignment) {
            if (a >= m) fail(path + ": cluster id out of range in assignment");
        }
        index.parts.push_back(std::move(part));
    }
    const auto& jentry = j.at("entry");
    if (jentry.size() != n) fail(path + ": entry table has wrong length");
    index.entry.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const std::uint32_t pi = jentry[i][0].get<std::uint32_t>();
        const std::uint32_t ci = jentry[i][1].get<std::uint32_t>();
        if (pi >= p || ci >= m) fail(path + ": entry points outside the partition table");
        index.entry[i] = {pi, ci};
    }
    index.rebuild_derived();
    return index;
}

} // namespace ceforge
