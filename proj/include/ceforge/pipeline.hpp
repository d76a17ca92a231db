#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "common.hpp"
#include "gcn.hpp"
#include "graph.hpp"
#include "index.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "search.hpp"

namespace ceforge {

// Everything a command invocation needs. The CLI fills this from flags and
// an optional key=value config file; tests construct it directly.
struct RunConfig {
    std::string graph_file;
    std::string features_file;
    std::string splits_file;
    std::string id_map_file;
    std::string predictions_file;
    std::string weights_file;
    std::string cache_file;
    std::string index_file;
    std::string out_file;
    std::string csv_file;

    KsParams ks;
    IndexParams index;

    std::int32_t num_classes = 0;  // required with --predictions
    size_t k = 10;
    QueryMode mode = QueryMode::Exact;
    GceStrategy strategy = GceStrategy::PerNodeTop1;
    bool global = false;
    std::int64_t query_node = -1;
    bool force = false;

    std::vector<std::string> predicates;
    std::vector<size_t> k_grid = {1, 2, 5, 10, 20, 50, 100, 200};
    bool effective_k = false;
    bool exclude_empty = false;
};

namespace detail {

inline Graph load_graph_with_map(const std::string& path, const IdMap& map) {
    std::ifstream in(path);
    if (!in) fail("cannot open edge file: " + path);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::int64_t header_nodes = -1;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        NodeId u = 0, v = 0;
        if (!parse_edge_line(line, lineno, &u, &v, &header_nodes)) continue;
        const std::string ctx = "edge file line " + std::to_string(lineno);
        edges.emplace_back(map.map(u, ctx), map.map(v, ctx));
    }
    return build_graph(map.to_internal.size(), edges);
}

} // namespace detail

// Loads the graph, remapping external ids when an id-map path is configured:
// an existing map file is applied, otherwise the map is built and persisted.
inline Graph pipeline_load_graph(const RunConfig& cfg, std::optional<IdMap>* map_out = nullptr) {
    if (cfg.graph_file.empty()) fail("no graph file configured");
    if (cfg.id_map_file.empty()) {
        if (map_out) map_out->reset();
        return load_graph(cfg.graph_file);
    }
    if (std::filesystem::exists(cfg.id_map_file)) {
        IdMap map = load_id_map(cfg.id_map_file);
        Graph g = detail::load_graph_with_map(cfg.graph_file, map);
        if (map_out) *map_out = std::move(map);
        return g;
    }
    IdMap map;
    Graph g = load_graph_remapped(cfg.graph_file, &map);
    save_id_map(map, cfg.id_map_file);
    if (map_out) *map_out = std::move(map);
    return g;
}

inline PredictionTable pipeline_load_predictions(const RunConfig& cfg, const Graph& graph,
                                                 const FeatureMatrix& features,
                                                 const SplitAssignment& splits,
                                                 const IdMap* id_map) {
    if (!cfg.predictions_file.empty()) {
        if (cfg.num_classes < 1) {
            fail("--num-classes is required when ingesting a predictions file");
        }
        return load_predictions(cfg.predictions_file, cfg.num_classes, graph, splits, id_map);
    }
    if (!cfg.weights_file.empty()) {
        const GcnWeights weights = load_gcn_weights(cfg.weights_file);
        const DenseMatrix logits = gcn_forward(features, normalize_adjacency(graph), weights);
        return predict_labels(logits);
    }
    fail("either --predictions or --weights must be provided");
}

// aggregate: propagate + aggregate the feature matrix and persist the cache
// with a sidecar binding it to its inputs. Deterministic, hence idempotent.
inline AggCacheMeta cmd_aggregate(const RunConfig& cfg) {
    if (cfg.cache_file.empty()) fail("aggregate: no cache output path configured");
    std::optional<IdMap> map;
    const Graph graph = pipeline_load_graph(cfg, &map);
    const FeatureMatrix features =
        load_features(cfg.features_file, graph, map ? &*map : nullptr);
    const AggregatedVectors agg = aggregated_vectors(features, graph, cfg.ks);
    AggCacheMeta meta;
    meta.alpha = cfg.ks.alpha;
    meta.hops = cfg.ks.hops;
    meta.graph_checksum = file_checksum(cfg.graph_file);
    meta.features_checksum = file_checksum(cfg.features_file);
    meta.num_nodes = agg.rows;
    meta.dim = agg.cols;
    write_agg_cache(cfg.cache_file, agg, meta);
    return meta;
}

// Refuses stale caches: the sidecar checksums must match the configured
// input files unless --force.
inline AggregatedVectors load_bound_cache(const RunConfig& cfg, AggCacheMeta* meta_out = nullptr) {
    if (cfg.cache_file.empty()) fail("no cache file configured (run 'aggregate' first)");
    AggCacheMeta meta;
    AggregatedVectors agg = read_agg_cache(cfg.cache_file, &meta);
    if (!cfg.force) {
        if (!cfg.graph_file.empty() && file_checksum(cfg.graph_file) != meta.graph_checksum) {
            fail("cache " + cfg.cache_file + " is stale: graph file changed (use --force to override)");
        }
        if (!cfg.features_file.empty() &&
            file_checksum(cfg.features_file) != meta.features_checksum) {
            fail("cache " + cfg.cache_file + " is stale: feature file changed (use --force to override)");
        }
    }
    if (meta_out) *meta_out = meta;
    return agg;
}

struct BuildReport {
    size_t test_nodes = 0;
    size_t partitions = 0;
    size_t clusters = 0;
    std::vector<size_t> weight_histogram;  // 10 bins over [0,1] of chosen weights
};

// build-index: weighted spherical clustering chain over the cached
// aggregated vectors of the test nodes.
inline BuildReport cmd_build_index(const RunConfig& cfg) {
    if (cfg.index_file.empty()) fail("build-index: no index output path configured");
    std::optional<IdMap> map;
    const Graph graph = pipeline_load_graph(cfg, &map);
    const SplitAssignment splits = load_splits(cfg.splits_file, graph, map ? &*map : nullptr);
    AggCacheMeta meta;
    const AggregatedVectors agg = load_bound_cache(cfg, &meta);
    if (agg.rows != graph.num_nodes()) {
        fail("cache holds " + std::to_string(agg.rows) + " rows but the graph has " +
             std::to_string(graph.num_nodes()) + " nodes");
    }
    SphericalIndex index = build_index(agg, splits.test_nodes(), cfg.index);
    index.alpha = meta.alpha;
    index.hops = meta.hops;
    index.cache_checksum = file_checksum(cfg.cache_file);
    index.graph_checksum = meta.graph_checksum;
    index.features_checksum = meta.features_checksum;
    save_index(index, cfg.index_file);

    BuildReport report;
    report.test_nodes = index.test_nodes.size();
    report.partitions = cfg.index.partitions;
    report.clusters = cfg.index.clusters;
    report.weight_histogram.assign(10, 0);
    for (size_t i = 0; i < index.test_nodes.size(); ++i) {
        const auto [pi, ci] = index.entry[i];
        const double w = index.parts[pi].weights[i];
        const size_t bin = std::min<size_t>(9, static_cast<size_t>(w * 10.0));
        ++report.weight_histogram[bin];
    }
    return report;
}

inline SphericalIndex load_bound_index(const RunConfig& cfg) {
    if (cfg.index_file.empty()) fail("indexed mode requires --index");
    SphericalIndex index = load_index(cfg.index_file);
    if (!cfg.force && !cfg.cache_file.empty() &&
        file_checksum(cfg.cache_file) != index.cache_checksum) {
        fail("index " + cfg.index_file + " is stale: cache changed (use --force to override)");
    }
    return index;
}

struct QuerySummary {
    std::string kind;  // "local" or "global"
    std::string mode;
    std::string strategy;
    size_t k = 0;
    size_t queries = 0;
    size_t results = 0;
    double mean_candidates_scanned = 0.0;
    double average_similarity = 0.0;  // local only
};

// Floating report values print with 6 decimals (full precision lives in the
// binary artifacts); rounding through the printed form keeps JSON output at
// exactly 6 digits.
inline double round6(double x) {
    return std::stod(format_ks(x));
}

inline void write_summary_json(const RunConfig& cfg, const QuerySummary& s) {
    if (cfg.out_file.empty()) return;
    nlohmann::ordered_json j;
    j["kind"] = s.kind;
    j["mode"] = s.mode;
    if (s.kind == "global") j["strategy"] = s.strategy;
    j["k"] = s.k;
    j["queries"] = s.queries;
    j["results"] = s.results;
    j["mean_candidates_scanned"] = round6(s.mean_candidates_scanned);
    if (s.kind == "local") j["average_similarity"] = round6(s.average_similarity);
    std::ofstream out(cfg.out_file + ".summary.json");
    if (!out) fail("cannot write summary: " + cfg.out_file + ".summary.json");
    out << j.dump(2) << "\n";
}

// query: either a single local query (--node) or a global search (--global).
// Results stream as JSON lines; the summary carries no timing so reruns are
// byte-identical.
inline QuerySummary cmd_query(const RunConfig& cfg, std::ostream& results_out) {
    std::optional<IdMap> map;
    const Graph graph = pipeline_load_graph(cfg, &map);
    const FeatureMatrix features =
        load_features(cfg.features_file, graph, map ? &*map : nullptr);
    const SplitAssignment splits = load_splits(cfg.splits_file, graph, map ? &*map : nullptr);
    const AggregatedVectors agg = load_bound_cache(cfg);
    const PredictionTable pred =
        pipeline_load_predictions(cfg, graph, features, splits, map ? &*map : nullptr);
    const std::vector<NodeId> test_nodes = splits.test_nodes();
    const ClassPartition classes(pred, test_nodes);

    std::optional<SphericalIndex> index;
    if (cfg.mode == QueryMode::Indexed) index = load_bound_index(cfg);

    QuerySummary summary;
    summary.mode = mode_name(cfg.mode);
    summary.strategy = strategy_name(cfg.strategy);
    summary.k = cfg.k;

    if (cfg.global) {
        summary.kind = "global";
        GlobalCeStats stats;
        const auto pairs =
            global_ce(agg, classes, pred, splits, test_nodes, cfg.k, cfg.mode, cfg.strategy,
                      index ? &*index : nullptr, &stats);
        for (const auto& p : pairs) write_pair_line(results_out, p);
        summary.queries = stats.queries;
        summary.results = pairs.size();
        summary.mean_candidates_scanned =
            stats.queries ? static_cast<double>(stats.candidates_scanned) /
                                static_cast<double>(stats.queries)
                          : 0.0;
        return summary;
    }

    if (cfg.query_node < 0) fail("query: provide --node <id> or --global");
    const NodeId v = static_cast<NodeId>(cfg.query_node);
    const CeQueryResult res = cfg.mode == QueryMode::Exact
                                  ? local_ce_exact(agg, classes, pred, splits, v, cfg.k)
                                  : local_ce_indexed(*index, agg, pred, v, cfg.k);
    write_result_line(results_out, res);
    summary.kind = "local";
    summary.queries = 1;
    summary.results = res.hits.size();
    summary.mean_candidates_scanned = static_cast<double>(res.candidates_scanned);
    double sum = 0.0;
    for (const auto& h : res.hits) sum += h.ks;
    summary.average_similarity = sum / static_cast<double>(cfg.k);
    return summary;
}

// Shared by the analyze subcommands: top-k LCEs for every test node.
inline std::vector<CeQueryResult> run_all_local(const AggregatedVectors& agg,
                                                const ClassPartition& classes,
                                                const PredictionTable& pred,
                                                const SplitAssignment& splits,
                                                const std::vector<NodeId>& test_nodes, size_t k,
                                                QueryMode mode, const SphericalIndex* index) {
    std::vector<CeQueryResult> results(test_nodes.size());
    parallel_for(test_nodes.size(), [&](size_t i) {
        results[i] = mode == QueryMode::Exact
                         ? local_ce_exact(agg, classes, pred, splits, test_nodes[i], k)
                         : local_ce_indexed(*index, agg, pred, test_nodes[i], k);
    }, 16);
    return results;
}

struct AnalyzeContext {
    Graph graph;
    FeatureMatrix features;
    SplitAssignment splits;
    AggregatedVectors agg;
    PredictionTable pred;
    std::vector<NodeId> test_nodes;
    std::optional<SphericalIndex> index;
};

inline AnalyzeContext load_analyze_context(const RunConfig& cfg) {
    std::optional<IdMap> map;
    AnalyzeContext ctx{.graph = pipeline_load_graph(cfg, &map),
                       .features = {},
                       .splits = {},
                       .agg = {},
                       .pred = {},
                       .test_nodes = {},
                       .index = std::nullopt};
    ctx.features = load_features(cfg.features_file, ctx.graph, map ? &*map : nullptr);
    ctx.splits = load_splits(cfg.splits_file, ctx.graph, map ? &*map : nullptr);
    ctx.agg = load_bound_cache(cfg);
    ctx.pred = pipeline_load_predictions(cfg, ctx.graph, ctx.features, ctx.splits,
                                         map ? &*map : nullptr);
    ctx.test_nodes = ctx.splits.test_nodes();
    if (cfg.mode == QueryMode::Indexed) ctx.index = load_bound_index(cfg);
    return ctx;
}

inline double cmd_analyze_as(const RunConfig& cfg) {
    const AnalyzeContext ctx = load_analyze_context(cfg);
    const ClassPartition classes(ctx.pred, ctx.test_nodes);
    const auto results = run_all_local(ctx.agg, classes, ctx.pred, ctx.splits, ctx.test_nodes,
                                       cfg.k, cfg.mode, ctx.index ? &*ctx.index : nullptr);
    AsOptions opts{.effective_k = cfg.effective_k, .exclude_empty = cfg.exclude_empty};
    const double as = average_similarity(results, cfg.k, opts);
    if (!cfg.out_file.empty()) {
        nlohmann::ordered_json j;
        j["metric"] = "average_similarity";
        j["value"] = round6(as);
        j["k"] = cfg.k;
        j["mode"] = mode_name(cfg.mode);
        j["queries"] = results.size();
        j["effective_k"] = cfg.effective_k;
        j["exclude_empty"] = cfg.exclude_empty;
        std::ofstream out(cfg.out_file);
        if (!out) fail("cannot write report: " + cfg.out_file);
        out << j.dump(2) << "\n";
    }
    return as;
}

// "f=v" (exact) or "f:lo:hi" (bucket).
inline FeaturePredicate parse_predicate(const std::string& text) {
    const auto eq = text.find('=');
    if (eq != std::string::npos) {
        return FeaturePredicate::exact(
            static_cast<size_t>(parse_int(text.substr(0, eq), "predicate")),
            parse_double(text.substr(eq + 1), "predicate"));
    }
    const auto parts = split(text, ':');
    if (parts.size() == 3) {
        return FeaturePredicate::bucket(static_cast<size_t>(parse_int(parts[0], "predicate")),
                                        parse_double(parts[1], "predicate"),
                                        parse_double(parts[2], "predicate"));
    }
    fail("cannot parse predicate '" + text + "' (expected f=v or f:lo:hi)");
}

// Default predicate set when none are supplied: one exact predicate per
// observed value of every feature with at most 8 distinct values.
inline std::vector<FeaturePredicate> default_predicates(const FeatureMatrix& features,
                                                        const std::vector<NodeId>& test_nodes) {
    std::vector<FeaturePredicate> preds;
    for (size_t f = 0; f < features.cols; ++f) {
        std::set<double> values;
        bool categorical = true;
        for (NodeId v : test_nodes) {
            values.insert(features.at(v, f));
            if (values.size() > 8) {
                categorical = false;
                break;
            }
        }
        if (!categorical || values.size() < 2) continue;
        for (double val : values) preds.push_back(FeaturePredicate::exact(f, val));
    }
    return preds;
}

inline std::vector<DsRow> cmd_analyze_ds(const RunConfig& cfg, std::ostream& log) {
    const AnalyzeContext ctx = load_analyze_context(cfg);
    const ClassPartition classes(ctx.pred, ctx.test_nodes);
    const auto results = run_all_local(ctx.agg, classes, ctx.pred, ctx.splits, ctx.test_nodes,
                                       cfg.k, cfg.mode, ctx.index ? &*ctx.index : nullptr);
    std::vector<FeaturePredicate> preds;
    for (const auto& p : cfg.predicates) preds.push_back(parse_predicate(p));
    if (preds.empty()) preds = default_predicates(ctx.features, ctx.test_nodes);
    const auto table = dataset_discrimination_table(ctx.features, preds, ctx.test_nodes, results,
                                                    cfg.k, cfg.effective_k);
    log << "feature value                     mean DS   support\n";
    for (const auto& row : table) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-32s  %7.4f  %8zu\n", row.predicate.label().c_str(),
                      row.mean_ds, row.support);
        log << buf;
    }
    if (!cfg.out_file.empty()) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& row : table) {
            rows.push_back({{"predicate", row.predicate.label()},
                            {"feature", row.predicate.feature},
                            {"mean_ds", round6(row.mean_ds)},
                            {"support", row.support}});
        }
        nlohmann::ordered_json j;
        j["metric"] = "discrimination_score";
        j["k"] = cfg.k;
        j["rows"] = std::move(rows);
        std::ofstream out(cfg.out_file);
        if (!out) fail("cannot write report: " + cfg.out_file);
        out << j.dump(2) << "\n";
    }
    if (!cfg.csv_file.empty()) {
        std::ofstream out(cfg.csv_file);
        if (!out) fail("cannot write report: " + cfg.csv_file);
        out << "predicate,feature,mean_ds,support\n";
        for (const auto& row : table) {
            out << '"' << row.predicate.label() << "\"," << row.predicate.feature << ','
                << format_ks(row.mean_ds) << ',' << row.support << "\n";
        }
    }
    return table;
}

inline void cmd_analyze_error_curve(const RunConfig& cfg) {
    if (cfg.out_file.empty()) fail("error-curve: --out is required");
    const AnalyzeContext ctx = load_analyze_context(cfg);
    const ClassPartition classes(ctx.pred, ctx.test_nodes);
    size_t k_max = 1;
    for (size_t k : cfg.k_grid) k_max = std::max(k_max, k);
    const auto gce =
        global_ce(ctx.agg, classes, ctx.pred, ctx.splits, ctx.test_nodes, k_max, cfg.mode,
                  cfg.strategy, ctx.index ? &*ctx.index : nullptr);

    size_t correct = 0, labelled = 0;
    for (NodeId v : ctx.test_nodes) {
        if (!ctx.pred.has_true_label(v)) continue;
        ++labelled;
        if (ctx.pred.label(v) == ctx.pred.true_label[v]) ++correct;
    }
    if (labelled == 0) fail("error-curve: no true labels available");
    const double global_acc = static_cast<double>(correct) / static_cast<double>(labelled);

    std::ofstream out(cfg.out_file);
    if (!out) fail("cannot write report: " + cfg.out_file);
    out << "k,accuracy_within_topk_gce,global_accuracy,distinct_nodes\n";
    for (size_t k : cfg.k_grid) {
        if (k > gce.size()) continue;
        const double acc = accuracy_within_topk_gce(gce, ctx.pred, k);
        out << k << ',' << format_ks(acc) << ',' << format_ks(global_acc) << ','
            << distinct_gce_nodes(gce, k).size() << "\n";
    }
}

inline void cmd_analyze_export_ce(const RunConfig& cfg) {
    if (cfg.out_file.empty()) fail("export-ce: --out is required");
    const AnalyzeContext ctx = load_analyze_context(cfg);
    const ClassPartition classes(ctx.pred, ctx.test_nodes);
    const auto gce =
        global_ce(ctx.agg, classes, ctx.pred, ctx.splits, ctx.test_nodes, cfg.k, cfg.mode,
                  cfg.strategy, ctx.index ? &*ctx.index : nullptr);
    export_validation_set(gce, cfg.k, cfg.out_file);
}

} // namespace ceforge
