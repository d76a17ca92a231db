// Acceptance suite: one self-contained check per criterion, one PASS/FAIL
// line each. Exit code 0 only if every criterion passes. An optional argv
// selects a subset, e.g. `ceforge_acceptance 3 5`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "ceforge/analysis.hpp"
#include "ceforge/cap_geometry.hpp"
#include "ceforge/graph.hpp"
#include "ceforge/index.hpp"
#include "ceforge/kernel.hpp"
#include "ceforge/kmeans.hpp"
#include "ceforge/pipeline.hpp"
#include "ceforge/search.hpp"
#include "../support/test_util.hpp"

using namespace ceforge;
using std::numbers::pi;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --------------------------------------------------------------------------
// 1. local_ce_exact equals the brute-force double-loop oracle on 100 seeded
//    random graphs (50-300 test nodes, d in {4,16,64}, 2-4 classes),
//    k in {1,5,10}, set + order, in under 60 s.
Outcome criterion1() {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1001);
    const size_t dims[3] = {4, 16, 64};
    size_t comparisons = 0;
    for (int g = 0; g < 100 && out.ok; ++g) {
        const size_t n = 50 + rng() % 251;
        const size_t d = dims[g % 3];
        const std::int32_t classes_n = 2 + static_cast<std::int32_t>(rng() % 3);
        const Graph graph = testutil::random_graph(n, 6.0 / static_cast<double>(n), rng());
        const FeatureMatrix x = testutil::random_features(n, d, rng());
        const auto agg = aggregated_vectors(x, graph, {.alpha = 0.5, .hops = 2});
        const auto labels = testutil::random_labels(n, classes_n, rng());
        const auto pred = testutil::make_predictions(labels, classes_n);
        const auto splits = testutil::all_test_splits(n);
        const auto nodes = testutil::iota_nodes(n);
        const ClassPartition cp(pred, nodes);
        for (const size_t k : {1u, 5u, 10u}) {
            for (NodeId v = 0; v < n && out.ok; ++v) {
                const auto got = local_ce_exact(agg, cp, pred, splits, v, k);
                const auto want = testutil::oracle_local_topk(agg, labels, nodes, v, k);
                out.require(got.hits.size() == want.size(),
                            "hit count mismatch at graph " + std::to_string(g));
                for (size_t i = 0; out.ok && i < want.size(); ++i) {
                    out.require(got.hits[i].node == want[i].node && got.hits[i].ks == want[i].ks,
                                "hit mismatch at graph " + std::to_string(g) + " node " +
                                    std::to_string(v) + " rank " + std::to_string(i));
                }
                ++comparisons;
            }
        }
    }
    const double secs = seconds_since(start);
    out.require(secs < 60.0, "runtime " + std::to_string(secs) + " s exceeds 60 s");
    if (out.ok) {
        std::ostringstream d;
        d << "100 graphs, " << comparisons << " queries vs oracle, " << secs << " s";
        out.detail = d.str();
    }
    return out;
}

// --------------------------------------------------------------------------
// 2. KS invariants: symmetry (<=1e-12), self-similarity 1, range [0,1] for
//    non-negative features, permutation invariance, alpha=1 reduction,
//    isomorphic-neighborhood identity; 1000 randomized cases in total.
Outcome criterion2() {
    Outcome out;
    std::mt19937_64 rng(2002);
    size_t cases = 0;

    // 400 cases: symmetry + self-similarity + non-negative range.
    for (int rep = 0; rep < 10; ++rep) {
        const size_t n = 15 + rng() % 25;
        const Graph g = testutil::random_graph(n, 0.15, rng());
        const FeatureMatrix x = testutil::random_features(n, 6, rng(), /*non_negative=*/true);
        const auto agg = aggregated_vectors(x, g, {.alpha = 0.5, .hops = 2});
        for (int t = 0; t < 40; ++t, ++cases) {
            const NodeId v = rng() % n, u = rng() % n;
            const double ks = ks_score(agg, v, u);
            out.require(std::abs(ks - ks_score(agg, u, v)) <= 1e-12, "symmetry violated");
            out.require(ks >= 0.0 && ks <= 1.0, "range violated for non-negative features");
            if (norm2(agg.row(v)) > 0) {
                out.require(ks_score(agg, v, v) == 1.0, "self-similarity violated");
            }
        }
    }

    // 300 cases: permutation invariance.
    for (int rep = 0; rep < 10; ++rep) {
        const size_t n = 12 + rng() % 16;
        const Graph g = testutil::random_graph(n, 0.2, rng());
        const FeatureMatrix x = testutil::random_features(n, 5, rng());
        const auto agg = aggregated_vectors(x, g, {.alpha = 0.4, .hops = 2});
        std::vector<NodeId> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (auto [a, b] : g.edges()) edges.emplace_back(perm[a], perm[b]);
        const Graph pg = build_graph(n, edges);
        FeatureMatrix px(n, x.cols);
        for (NodeId v = 0; v < n; ++v) {
            auto src = x.row(v);
            std::copy(src.begin(), src.end(), px.row(perm[v]).begin());
        }
        const auto pagg = aggregated_vectors(px, pg, {.alpha = 0.4, .hops = 2});
        for (int t = 0; t < 30; ++t, ++cases) {
            const NodeId v = rng() % n, u = rng() % n;
            out.require(std::abs(ks_score(agg, v, u) - ks_score(pagg, perm[v], perm[u])) <= 1e-12,
                        "permutation invariance violated");
        }
    }

    // 200 cases: alpha = 1 reduces to raw-feature cosine.
    for (int rep = 0; rep < 5; ++rep) {
        const size_t n = 20 + rng() % 10;
        const Graph g = testutil::random_graph(n, 0.2, rng());
        const FeatureMatrix x = testutil::random_features(n, 5, rng());
        const auto agg = aggregated_vectors(x, g, {.alpha = 1.0, .hops = 3});
        for (int t = 0; t < 40; ++t, ++cases) {
            const NodeId v = rng() % n, u = rng() % n;
            out.require(
                std::abs(ks_score(agg, v, u) - testutil::oracle_cosine(x.row(v), x.row(u))) <=
                    1e-12,
                "alpha=1 reduction violated");
        }
    }

    // 100 cases: isomorphic L-hop neighborhoods with matching features.
    for (int rep = 0; rep < 10; ++rep) {
        const size_t half = 10;
        const Graph comp = testutil::random_graph(half, 0.3, rng());
        auto edges = comp.edges();
        const size_t base_edges = edges.size();
        for (size_t i = 0; i < base_edges; ++i) {
            edges.emplace_back(edges[i].first + half, edges[i].second + half);
        }
        const Graph g = build_graph(2 * half, edges);
        FeatureMatrix x(2 * half, 4);
        const FeatureMatrix raw = testutil::random_features(half, 4, rng());
        for (NodeId v = 0; v < half; ++v) {
            auto src = raw.row(v);
            std::copy(src.begin(), src.end(), x.row(v).begin());
            std::copy(src.begin(), src.end(), x.row(v + half).begin());
        }
        const auto agg = aggregated_vectors(x, g, {.alpha = 0.5, .hops = 2});
        for (NodeId v = 0; v < half; ++v, ++cases) {
            out.require(std::abs(ks_score(agg, v, v + half) - 1.0) <= 1e-12,
                        "isomorphic-neighborhood identity violated");
        }
    }

    if (out.ok) out.detail = std::to_string(cases) + " randomized cases, zero failures";
    return out;
}

// --------------------------------------------------------------------------
// 3. cap_overlap_ratio vs seeded Monte Carlo (1e6 samples) within 5e-3 for
//    d in {2,3,5,10}, theta in {pi/6, pi/3}, phi on an 11-point grid of
//    [0, pi]; and exact d=2 closed form within 1e-9.
Outcome criterion3() {
    Outcome out;
    const size_t samples = 1000000;
    std::uint64_t seed = 3003;
    double worst = 0.0;
    for (const size_t d : {2u, 3u, 5u, 10u}) {
        for (const double theta : {pi / 6, pi / 3}) {
            // Common random draws across the phi grid: polar angle within the
            // first cap and the slice coordinate toward the second axis.
            std::mt19937_64 rng(seed++);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::vector<double> ts(samples), w1(samples);
            const double sin_theta = std::sin(theta);
            for (size_t s = 0; s < samples; ++s) {
                double t;
                while (true) {
                    t = unif(rng) * theta;
                    if (d == 2) break;
                    if (unif(rng) <
                        std::pow(std::sin(t) / sin_theta, static_cast<double>(d - 2))) {
                        break;
                    }
                }
                ts[s] = t;
                if (d == 2) {
                    w1[s] = unif(rng) < 0.5 ? 1.0 : -1.0;
                } else {
                    double norm_sq = 0.0, first = 0.0;
                    for (size_t i = 0; i + 1 < d; ++i) {
                        const double gv = gauss(rng);
                        if (i == 0) first = gv;
                        norm_sq += gv * gv;
                    }
                    w1[s] = first / std::sqrt(norm_sq);
                }
            }
            for (int i = 0; i <= 10; ++i) {
                const double phi = pi * i / 10.0;
                const double got = cap_overlap_ratio(phi, theta, d);
                const double cos_theta = std::cos(theta);
                const double cphi = std::cos(phi), sphi = std::sin(phi);
                size_t inside = 0;
                for (size_t s = 0; s < samples; ++s) {
                    if (std::cos(ts[s]) * cphi + std::sin(ts[s]) * sphi * w1[s] >= cos_theta) {
                        ++inside;
                    }
                }
                const double mc = static_cast<double>(inside) / static_cast<double>(samples);
                worst = std::max(worst, std::abs(got - mc));
                out.require(std::abs(got - mc) <= 5e-3,
                            "MC deviation " + std::to_string(std::abs(got - mc)) + " at d=" +
                                std::to_string(d) + " theta=" + std::to_string(theta) +
                                " phi=" + std::to_string(phi));
                if (d == 2) {
                    const double closed =
                        std::min(1.0, std::max(0.0, (2 * theta - phi) / (2 * theta)));
                    out.require(std::abs(got - closed) <= 1e-9, "d=2 closed form violated");
                }
            }
        }
    }
    if (out.ok) {
        std::ostringstream d;
        d << "88 grid points, worst |quadrature - MC| = " << worst;
        out.detail = d.str();
    }
    return out;
}

// --------------------------------------------------------------------------
// 4. Weighted k-means: the weighted-cosine objective non-decreasing at every
//    iteration across 50 seeded runs; convergence within 100 iterations on all runs.
Outcome criterion4() {
    Outcome out;
    std::mt19937_64 rng(4004);
    for (int run = 0; run < 50 && out.ok; ++run) {
        const size_t n = 100 + rng() % 400;
        const size_t d = 4 + rng() % 13;
        const size_t bundles = 2 + rng() % 7;
        const DenseMatrix pts =
            testutil::bundle_vectors(n, d, bundles, 0.3 + 0.4 * (run % 3), rng());
        std::vector<double> w(n);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (auto& x : w) x = unif(rng);
        const size_t m = 2 + rng() % 10;
        const Partition part = weighted_kmeans(pts, w, m, {.seed = rng(), .max_iters = 100});
        out.require(part.converged, "run " + std::to_string(run) + " did not converge in 100 iters");
        for (size_t i = 1; i < part.objective_trace.size(); ++i) {
            out.require(part.objective_trace[i] >= part.objective_trace[i - 1] - 1e-9,
                        "objective decreased at run " + std::to_string(run) + " iteration " +
                            std::to_string(i));
        }
    }
    if (out.ok) out.detail = "50 seeded runs, monotone objective, all converged";
    return out;
}

// --------------------------------------------------------------------------
// Shared machinery for criteria 5-7: the synthetic clustered suite
// (2000 test nodes, 10 planted direction bundles, 20 seeds, k = 10).
struct AblationStats {
    double as_exact = 0.0;
    double as_full = 0.0;
    double as_no_wc = 0.0;
    double as_no_sp = 0.0;
    double mean_indexed_scanned = 0.0;
    bool storage_ok = true;
};

AblationStats run_ablation_suite(size_t seeds, size_t n, size_t bundles, size_t d, double noise) {
    AblationStats st;
    double scanned_total = 0.0;
    size_t scanned_queries = 0;
    for (size_t seed = 0; seed < seeds; ++seed) {
        const DenseMatrix agg = testutil::bundle_vectors(n, d, bundles, noise, 5000 + seed);
        const auto labels = testutil::random_labels(n, 2, 6000 + seed);
        const auto pred = testutil::make_predictions(labels, 2);
        const auto splits = testutil::all_test_splits(n);
        const auto nodes = testutil::iota_nodes(n);
        const ClassPartition cp(pred, nodes);

        IndexParams full;
        full.partitions = 50;
        full.clusters = 10;
        full.seed = 7000 + seed;
        IndexParams no_wc = full;
        no_wc.weighted_clustering = false;
        IndexParams no_sp = full;
        no_sp.partitions = 1;

        const SphericalIndex idx_full = build_index(agg, nodes, full);
        const SphericalIndex idx_no_wc = build_index(agg, nodes, no_wc);
        const SphericalIndex idx_no_sp = build_index(agg, nodes, no_sp);
        st.storage_ok = st.storage_ok &&
                        idx_full.total_membership_entries() == full.partitions * n &&
                        idx_no_wc.total_membership_entries() == no_wc.partitions * n &&
                        idx_no_sp.total_membership_entries() == no_sp.partitions * n;

        std::vector<CeQueryResult> r_exact(n), r_full(n), r_no_wc(n), r_no_sp(n);
        parallel_for(n, [&](size_t i) {
            const NodeId v = nodes[i];
            r_exact[i] = local_ce_exact(agg, cp, pred, splits, v, 10);
            r_full[i] = local_ce_indexed(idx_full, agg, pred, v, 10);
            r_no_wc[i] = local_ce_indexed(idx_no_wc, agg, pred, v, 10);
            r_no_sp[i] = local_ce_indexed(idx_no_sp, agg, pred, v, 10);
        }, 64);
        for (const auto& r : r_full) {
            scanned_total += static_cast<double>(r.candidates_scanned);
            ++scanned_queries;
        }
        st.as_exact += average_similarity(r_exact, 10);
        st.as_full += average_similarity(r_full, 10);
        st.as_no_wc += average_similarity(r_no_wc, 10);
        st.as_no_sp += average_similarity(r_no_sp, 10);
    }
    const double inv = 1.0 / static_cast<double>(seeds);
    st.as_exact *= inv;
    st.as_full *= inv;
    st.as_no_wc *= inv;
    st.as_no_sp *= inv;
    st.mean_indexed_scanned = scanned_total / static_cast<double>(scanned_queries);
    return st;
}

AblationStats& ablation_stats() {
    static AblationStats st = run_ablation_suite(/*seeds=*/20, /*n=*/2000, /*bundles=*/10,
                                                 /*d=*/16, /*noise=*/0.45);
    return st;
}

// 5. Ablation ordering at k=10 over 20 seeds:
//    AS(exact) >= AS(full) >= max(AS(w/o WC), AS(w/o SP)) and
//    AS(full)/AS(exact) >= 0.90.
Outcome criterion5() {
    Outcome out;
    const AblationStats& st = ablation_stats();
    std::ostringstream d;
    d << "AS exact=" << st.as_exact << " full=" << st.as_full << " w/oWC=" << st.as_no_wc
      << " w/oSP=" << st.as_no_sp << " ratio=" << st.as_full / st.as_exact;
    out.require(st.as_exact >= st.as_full, "AS(exact) < AS(full index): " + d.str());
    out.require(st.as_full >= st.as_no_wc, "AS(full) < AS(w/o weighted clustering): " + d.str());
    out.require(st.as_full >= st.as_no_sp, "AS(full) < AS(w/o supplementary part.): " + d.str());
    out.require(st.as_full / st.as_exact >= 0.90, "AS(full)/AS(exact) below 0.90: " + d.str());
    if (out.ok) out.detail = d.str();
    return out;
}

// 6. Speedup mechanism: mean candidates scanned per indexed query
//    <= 2|V_test|/m on the synthetic suite; indexed wall-clock per query
//    below exact wall-clock at |V_test| >= 5000.
Outcome criterion6() {
    Outcome out;
    const AblationStats& st = ablation_stats();
    const double bound = 2.0 * 2000.0 / 10.0;
    out.require(st.mean_indexed_scanned <= bound,
                "mean candidates scanned " + std::to_string(st.mean_indexed_scanned) +
                    " exceeds " + std::to_string(bound));

    const size_t n = 6000;
    const DenseMatrix agg = testutil::bundle_vectors(n, 16, 10, 0.45, 8008);
    const auto labels = testutil::random_labels(n, 2, 8009);
    const auto pred = testutil::make_predictions(labels, 2);
    const auto splits = testutil::all_test_splits(n);
    const auto nodes = testutil::iota_nodes(n);
    const ClassPartition cp(pred, nodes);
    IndexParams params;
    params.partitions = 50;
    params.clusters = 10;
    params.seed = 8010;
    const SphericalIndex index = build_index(agg, nodes, params);

    const size_t probe = 500;
    volatile double sink = 0.0;
    auto t0 = std::chrono::steady_clock::now();
    for (size_t i = 0; i < probe; ++i) {
        const auto r = local_ce_exact(agg, cp, pred, splits, nodes[i * 11 % n], 10);
        if (!r.hits.empty()) sink = sink + r.hits[0].ks;
    }
    const double exact_per_query = seconds_since(t0) / static_cast<double>(probe);
    t0 = std::chrono::steady_clock::now();
    for (size_t i = 0; i < probe; ++i) {
        const auto r = local_ce_indexed(index, agg, pred, nodes[i * 11 % n], 10);
        if (!r.hits.empty()) sink = sink + r.hits[0].ks;
    }
    const double indexed_per_query = seconds_since(t0) / static_cast<double>(probe);
    out.require(indexed_per_query < exact_per_query,
                "indexed per-query time not below exact at |V_test| = 6000");
    if (out.ok) {
        std::ostringstream d;
        d << "mean scanned " << st.mean_indexed_scanned << " <= " << bound << "; per-query "
          << indexed_per_query * 1e6 << " us indexed vs " << exact_per_query * 1e6
          << " us exact at n=6000";
        out.detail = d.str();
    }
    return out;
}

// 7. Index storage: total membership entries = p * |V_test| exactly, on
//    every index built by the suite plus a fresh standalone build.
Outcome criterion7() {
    Outcome out;
    out.require(ablation_stats().storage_ok, "membership storage mismatch in ablation builds");
    const size_t n = 333;
    const DenseMatrix agg = testutil::bundle_vectors(n, 8, 4, 0.3, 7007);
    IndexParams params;
    params.partitions = 9;
    params.clusters = 7;
    const SphericalIndex index = build_index(agg, testutil::iota_nodes(n), params);
    out.require(index.total_membership_entries() == params.partitions * n,
                "membership entries != p * |V_test| on standalone build");
    if (out.ok) out.detail = "storage = p * |V_test| on 61 builds";
    return out;
}

// --------------------------------------------------------------------------
// 8. Metric correctness: AS / DS / accuracy match direct recomputation on 50
//    random instances (<=1e-12); DS endpoints by construction; planted
//    boundary puts accuracy-within-top-10-GCE strictly below global accuracy.
Outcome criterion8() {
    Outcome out;
    std::mt19937_64 rng(8888);
    for (int rep = 0; rep < 50 && out.ok; ++rep) {
        const size_t n = 20 + rng() % 60;
        const size_t k = 1 + rng() % 10;
        const DenseMatrix agg = testutil::bundle_vectors(n, 6, 4, 0.4, rng());
        const auto labels = testutil::random_labels(n, 2, rng());
        std::vector<std::int32_t> truth = testutil::random_labels(n, 2, rng());
        const auto pred = testutil::make_predictions(labels, 2, &truth);
        const auto splits = testutil::all_test_splits(n);
        const auto nodes = testutil::iota_nodes(n);
        const ClassPartition cp(pred, nodes);
        std::vector<CeQueryResult> results;
        for (NodeId v : nodes) results.push_back(local_ce_exact(agg, cp, pred, splits, v, k));

        // AS by direct recomputation.
        double as_direct = 0.0;
        for (const auto& r : results) {
            double s = 0.0;
            for (const auto& h : r.hits) s += h.ks;
            as_direct += s / static_cast<double>(k);
        }
        as_direct /= static_cast<double>(n);
        out.require(std::abs(average_similarity(results, k) - as_direct) <= 1e-12,
                    "AS mismatch at rep " + std::to_string(rep));

        // DS against a binary synthetic feature, direct recomputation.
        FeatureMatrix x(n, 1);
        for (size_t v = 0; v < n; ++v) x.at(v, 0) = static_cast<double>(rng() % 2);
        const auto fp = FeaturePredicate::exact(0, 1.0);
        for (size_t i = 0; i < nodes.size(); ++i) {
            if (x.at(nodes[i], 0) != 1.0) continue;
            size_t differing = 0;
            for (const auto& h : results[i].hits) {
                if (x.at(h.node, 0) != 1.0) ++differing;
            }
            const double direct = static_cast<double>(differing) / static_cast<double>(k);
            out.require(std::abs(discrimination_score(x, fp, nodes[i], results[i].hits, k) -
                                 direct) <= 1e-12,
                        "DS mismatch at rep " + std::to_string(rep));
        }

        // Accuracy within top-k GCE, direct recomputation.
        const auto gce = global_ce(agg, cp, pred, splits, nodes, k, QueryMode::Exact,
                                   GceStrategy::FullPairwise);
        if (!gce.empty()) {
            std::set<NodeId> distinct;
            const size_t limit = std::min(k, gce.size());
            for (size_t i = 0; i < limit; ++i) {
                distinct.insert(gce[i].a);
                distinct.insert(gce[i].b);
            }
            size_t correct = 0;
            for (NodeId v : distinct) {
                if (labels[v] == truth[v]) ++correct;
            }
            const double direct =
                static_cast<double>(correct) / static_cast<double>(distinct.size());
            out.require(std::abs(accuracy_within_topk_gce(gce, pred, k) - direct) <= 1e-12,
                        "accuracy mismatch at rep " + std::to_string(rep));
        }
    }

    // DS endpoints by construction.
    {
        FeatureMatrix x(4, 1);
        x.at(0, 0) = 1.0;
        x.at(1, 0) = 1.0;
        x.at(2, 0) = 1.0;
        x.at(3, 0) = 0.0;
        const auto fp = FeaturePredicate::exact(0, 1.0);
        out.require(discrimination_score(x, fp, 0, {{1, .9}, {2, .8}}, 2) == 0.0,
                    "DS endpoint 0 violated");
        out.require(discrimination_score(x, fp, 0, {{3, .9}}, 1) == 1.0, "DS endpoint 1 violated");
    }

    // Planted decision boundary: predictions err near the boundary, so the
    // nodes inside small-k GCE pairs are classified worse than average.
    {
        const size_t n = 400;
        std::mt19937_64 brng(4242);
        std::normal_distribution<double> gauss(0.0, 1.0);
        DenseMatrix agg(n, 2);
        std::vector<std::int32_t> predicted(n), truth(n);
        for (size_t v = 0; v < n; ++v) {
            const double side = (v % 2 == 0) ? 1.0 : -1.0;
            const double t = side * 0.8 + 0.5 * gauss(brng);
            agg.at(v, 0) = t;
            agg.at(v, 1) = 1.0;
            truth[v] = t > 0.0 ? 1 : 0;
            predicted[v] = (t + 0.3 * gauss(brng)) > 0.0 ? 1 : 0;
        }
        const auto pred = testutil::make_predictions(predicted, 2, &truth);
        const auto splits = testutil::all_test_splits(n);
        const auto nodes = testutil::iota_nodes(n);
        const ClassPartition cp(pred, nodes);
        const auto gce = global_ce(agg, cp, pred, splits, nodes, 10, QueryMode::Exact,
                                   GceStrategy::FullPairwise);
        size_t correct = 0;
        for (size_t v = 0; v < n; ++v) {
            if (predicted[v] == truth[v]) ++correct;
        }
        const double global_acc = static_cast<double>(correct) / static_cast<double>(n);
        const double topk_acc = accuracy_within_topk_gce(gce, pred, 10);
        out.require(topk_acc < global_acc,
                    "top-10 GCE accuracy " + std::to_string(topk_acc) +
                        " not below global accuracy " + std::to_string(global_acc));
        if (out.ok) {
            std::ostringstream d;
            d << "50 instances <=1e-12; boundary construction: top-10 GCE acc " << topk_acc
              << " < global " << global_acc;
            out.detail = d.str();
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// 9. Two full CLI pipeline runs with identical seeds produce byte-identical
//    JSON/CSV/binary outputs.
Outcome criterion9() {
    Outcome out;
    const char* cli = std::getenv("CEFORGE_CLI");
    if (cli == nullptr || std::string(cli).empty()) {
        out.require(false, "CEFORGE_CLI not set (run under ctest or export the CLI path)");
        return out;
    }
    testutil::TempDir dir;

    // Shared inputs.
    const size_t n = 200;
    const Graph g = testutil::random_graph(n, 0.05, 9090);
    const std::string graph_file = dir.file("edges.csv");
    save_graph(g, graph_file);
    const FeatureMatrix x = testutil::random_features(n, 8, 9091, /*non_negative=*/true);
    {
        std::ostringstream feats;
        feats << "node_id";
        for (size_t j = 0; j < 8; ++j) feats << ",f" << j;
        feats << "\n";
        for (size_t v = 0; v < n; ++v) {
            feats << v;
            for (size_t j = 0; j < 8; ++j) feats << ',' << x.at(v, j);
            feats << "\n";
        }
        testutil::write_file(dir.file("features.csv"), feats.str());
    }
    {
        std::ostringstream splits;
        splits << "node_id,split\n";
        for (size_t v = 0; v < n; ++v) splits << v << ',' << (v < 40 ? "train" : "test") << "\n";
        testutil::write_file(dir.file("splits.csv"), splits.str());
    }
    {
        const auto labels = testutil::random_labels(n, 3, 9092);
        const auto truth = testutil::random_labels(n, 3, 9093);
        std::ostringstream preds;
        preds << "node_id,predicted_label,true_label\n";
        for (size_t v = 0; v < n; ++v) preds << v << ',' << labels[v] << ',' << truth[v] << "\n";
        testutil::write_file(dir.file("predictions.csv"), preds.str());
    }

    const std::string common =
        std::string(" --graph ") + graph_file + " --features " + dir.file("features.csv");
    const std::string predflags = " --splits " + dir.file("splits.csv") + " --predictions " +
                                  dir.file("predictions.csv") + " --num-classes 3";
    auto run = [&](const std::string& tag) -> bool {
        const std::string cache = dir.file(tag + "_agg.bin");
        const std::string index = dir.file(tag + "_index.json");
        const std::string quiet = " 2>> " + dir.file(tag + "_log.txt");
        const std::string exe = std::string(cli);
        const std::vector<std::string> cmds = {
            exe + " aggregate" + common + " --cache " + cache + quiet,
            exe + " build-index" + common + " --splits " + dir.file("splits.csv") + " --cache " +
                cache + " --index " + index + " --partitions 8 --clusters 5 --seed 77" + quiet,
            exe + " query" + common + predflags + " --cache " + cache + " --index " + index +
                " --global --mode indexed --k 20 --out " + dir.file(tag + "_gce.jsonl") + quiet,
            exe + " query" + common + predflags + " --cache " + cache +
                " --node 55 --k 10 --out " + dir.file(tag + "_local.jsonl") + quiet,
            exe + " analyze as" + common + predflags + " --cache " + cache + " --k 10 --out " +
                dir.file(tag + "_as.json") + quiet,
            exe + " analyze export-ce" + common + predflags + " --cache " + cache +
                " --k 50 --out " + dir.file(tag + "_val.csv") + quiet,
        };
        for (const auto& cmd : cmds) {
            if (std::system(cmd.c_str()) != 0) return false;
        }
        return true;
    };
    out.require(run("a"), "first pipeline run failed");
    if (out.ok) out.require(run("b"), "second pipeline run failed");
    if (out.ok) {
        const char* artifacts[] = {"agg.bin",     "agg.bin.meta.json",
                                   "index.json",  "index.json.centroids.bin",
                                   "gce.jsonl",   "gce.jsonl.summary.json",
                                   "local.jsonl", "local.jsonl.summary.json",
                                   "as.json",     "val.csv"};
        for (const char* name : artifacts) {
            const std::string a = testutil::read_file(dir.file(std::string("a_") + name));
            const std::string b = testutil::read_file(dir.file(std::string("b_") + name));
            out.require(!a.empty(), std::string("artifact missing: ") + name);
            out.require(a == b, std::string("artifact differs between runs: ") + name);
        }
    }
    if (out.ok) out.detail = "10 artifacts byte-identical across two seeded pipeline runs";
    return out;
}

} // namespace

int main(int argc, char** argv) {
    const std::pair<int, std::function<Outcome()>> criteria[] = {
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
    };
    const char* names[] = {
        "exact-search oracle equivalence",
        "KS kernel invariant suite",
        "cap-geometry Monte Carlo oracle",
        "weighted k-means monotonicity",
        "ablation ordering (AS exact >= full >= variants)",
        "speedup mechanism (candidates scanned, per-query time)",
        "index storage accounting",
        "metric correctness (AS, DS, error curve)",
        "pipeline determinism (byte-identical reruns)",
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    bool all_ok = true;
    for (const auto& [id, fn] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out.ok = false;
            out.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", out.ok ? "PASS" : "FAIL", id,
                    names[id - 1], out.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
        all_ok = all_ok && out.ok;
    }
    return all_ok ? 0 : 1;
}
