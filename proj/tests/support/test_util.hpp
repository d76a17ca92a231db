#pragma once

// Shared generators and independent oracles for the test suites. Oracles
// deliberately re-derive results with the plainest possible code (full
// double loops, no class partitions, no buckets, no index) so they stay
// decoupled from the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "ceforge/dense.hpp"
#include "ceforge/gcn.hpp"
#include "ceforge/graph.hpp"
#include "ceforge/search.hpp"

namespace testutil {

using ceforge::DenseMatrix;
using ceforge::Graph;
using ceforge::NodeId;

inline Graph random_graph(size_t n, double edge_prob, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (size_t u = 0; u < n; ++u) {
        for (size_t v = u + 1; v < n; ++v) {
            if (coin(rng) < edge_prob) {
                edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
            }
        }
    }
    return ceforge::build_graph(n, edges);
}

inline DenseMatrix random_features(size_t n, size_t d, std::uint64_t seed, bool non_negative = false) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(non_negative ? 0.0 : -1.0, 1.0);
    DenseMatrix x(n, d);
    for (double& v : x.data) v = dist(rng);
    return x;
}

inline std::vector<std::int32_t> random_labels(size_t n, std::int32_t classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int32_t> dist(0, classes - 1);
    std::vector<std::int32_t> out(n);
    for (auto& l : out) l = dist(rng);
    return out;
}

inline ceforge::PredictionTable make_predictions(const std::vector<std::int32_t>& labels,
                                                 std::int32_t num_classes,
                                                 const std::vector<std::int32_t>* truth = nullptr) {
    ceforge::PredictionTable t;
    t.num_classes = num_classes;
    t.predicted = labels;
    t.true_label.assign(labels.size(), -1);
    if (truth) t.true_label = *truth;
    return t;
}

inline ceforge::SplitAssignment all_test_splits(size_t n) {
    ceforge::SplitAssignment s;
    s.tag.assign(n, ceforge::Split::Test);
    return s;
}

// ---- independent KS / search oracles -------------------------------------

inline double oracle_cosine(std::span<const double> a, std::span<const double> b) {
    double dd = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dd += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dd / (std::sqrt(na) * std::sqrt(nb));
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

struct OracleHit {
    NodeId node;
    double ks;
};

// Full double loop over every test node, no class partition, no bucket.
inline std::vector<OracleHit> oracle_local_topk(const DenseMatrix& agg,
                                                const std::vector<std::int32_t>& labels,
                                                const std::vector<NodeId>& test_nodes, NodeId v,
                                                size_t k) {
    std::vector<OracleHit> all;
    for (NodeId u : test_nodes) {
        if (u == v) continue;
        if (labels[u] == labels[v]) continue;
        all.push_back({u, oracle_cosine(agg.row(v), agg.row(u))});
    }
    std::sort(all.begin(), all.end(), [](const OracleHit& x, const OracleHit& y) {
        if (x.ks != y.ks) return x.ks > y.ks;
        return x.node < y.node;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

struct OraclePair {
    NodeId a;
    NodeId b;
    double ks;
};

inline std::vector<OraclePair> oracle_global_topk(const DenseMatrix& agg,
                                                  const std::vector<std::int32_t>& labels,
                                                  const std::vector<NodeId>& test_nodes, size_t k) {
    std::vector<OraclePair> all;
    for (size_t i = 0; i < test_nodes.size(); ++i) {
        for (size_t j = i + 1; j < test_nodes.size(); ++j) {
            const NodeId v = test_nodes[i], u = test_nodes[j];
            if (labels[v] == labels[u]) continue;
            all.push_back({std::min(v, u), std::max(v, u), oracle_cosine(agg.row(v), agg.row(u))});
        }
    }
    std::sort(all.begin(), all.end(), [](const OraclePair& x, const OraclePair& y) {
        if (x.ks != y.ks) return x.ks > y.ks;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

// ---- Monte Carlo cap-overlap oracle ---------------------------------------

// Samples points uniformly from the cap of half-angle theta around the first
// axis (polar angle by rejection against the sin^{d-2} density, slice
// direction from a Gaussian) and reports the fraction landing inside the
// second cap, i.e. IA/SF.
inline double mc_cap_overlap_ratio(double phi, double theta, size_t d, size_t samples,
                                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sin_theta = std::sin(theta);
    const double cos_theta = std::cos(theta);
    const double power = static_cast<double>(d - 2);
    size_t inside = 0;
    for (size_t s = 0; s < samples; ++s) {
        double t;
        while (true) {
            t = unif(rng) * theta;
            if (d == 2) break;  // sin^0: uniform angle is already correct
            if (unif(rng) < std::pow(std::sin(t) / sin_theta, power)) break;
        }
        double w1;
        if (d == 2) {
            w1 = unif(rng) < 0.5 ? 1.0 : -1.0;
        } else {
            double norm_sq = 0.0, first = 0.0;
            for (size_t i = 0; i + 1 < d; ++i) {
                const double g = gauss(rng);
                if (i == 0) first = g;
                norm_sq += g * g;
            }
            w1 = first / std::sqrt(norm_sq);
        }
        const double dot2 = std::cos(t) * std::cos(phi) + std::sin(t) * std::sin(phi) * w1;
        if (dot2 >= cos_theta) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(samples);
}

// ---- synthetic clustered vectors ------------------------------------------

// Unit vectors drawn from `bundles` random directions plus Gaussian noise;
// stand-ins for aggregated vectors with planted cluster structure.
inline DenseMatrix bundle_vectors(size_t n, size_t d, size_t bundles, double noise,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix dirs(bundles, d);
    for (size_t b = 0; b < bundles; ++b) {
        double nrm = 0.0;
        for (size_t j = 0; j < d; ++j) {
            dirs.at(b, j) = gauss(rng);
            nrm += dirs.at(b, j) * dirs.at(b, j);
        }
        nrm = std::sqrt(nrm);
        for (size_t j = 0; j < d; ++j) dirs.at(b, j) /= nrm;
    }
    DenseMatrix x(n, d);
    std::uniform_int_distribution<size_t> pick(0, bundles - 1);
    for (size_t i = 0; i < n; ++i) {
        const size_t b = pick(rng);
        double nrm = 0.0;
        for (size_t j = 0; j < d; ++j) {
            x.at(i, j) = dirs.at(b, j) + noise * gauss(rng);
            nrm += x.at(i, j) * x.at(i, j);
        }
        nrm = std::sqrt(nrm);
        for (size_t j = 0; j < d; ++j) x.at(i, j) /= nrm;
    }
    return x;
}

inline std::vector<NodeId> iota_nodes(size_t n) {
    std::vector<NodeId> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = static_cast<NodeId>(i);
    return v;
}

// ---- scratch files ----------------------------------------------------------

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        path_ = base / ("ceforge_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace testutil
