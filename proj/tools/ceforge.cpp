// ceforge: counterfactual-evidence search for GNN node classification.
// Subcommands: aggregate, build-index, query, analyze {as,ds,error-curve,export-ce}.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ceforge/pipeline.hpp"

namespace {

using ceforge::RunConfig;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

std::string config_sink;  // the option itself is handled before CLI11 parsing

void add_config_file(CLI::App* cmd) {
    cmd->add_option("--config", config_sink,
                    "key=value config file; explicit flags take precedence");
}

// Reads a key=value config file ('#' comments, blank lines and [sections]
// ignored) and returns --key=value tokens for every key the command line
// does not already set.
std::vector<std::string> config_file_args(const std::string& path,
                                          const std::vector<std::string>& cli_tokens) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open config file: " << path << "\n";
        std::exit(1);
    }
    std::vector<std::string> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = ceforge::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == '[') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: config file " << path << " line " << lineno
                      << ": expected key=value\n";
            std::exit(1);
        }
        std::string key = ceforge::trim(t.substr(0, eq));
        std::string value = ceforge::trim(t.substr(eq + 1));
        std::replace(key.begin(), key.end(), '_', '-');
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        const std::string flag = "--" + key;
        bool given = false;
        for (const auto& tok : cli_tokens) {
            if (tok == flag || tok.rfind(flag + "=", 0) == 0) {
                given = true;
                break;
            }
        }
        if (!given) out.push_back(flag + "=" + value);
    }
    return out;
}

void add_graph_inputs(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--graph", cfg.graph_file, "edge list (u,v per line; '#' comments)")
        ->required();
    cmd->add_option("--features", cfg.features_file, "feature CSV with node_id header")
        ->required();
    cmd->add_option("--id-map", cfg.id_map_file,
                    "external/internal id map CSV; created if absent");
}

void add_prediction_inputs(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--splits", cfg.splits_file, "splits CSV (node_id,split)")->required();
    cmd->add_option("--predictions", cfg.predictions_file,
                    "predictions CSV (node_id,predicted[,true])");
    cmd->add_option("--weights", cfg.weights_file, "GCN weights JSON for the built-in forward pass");
    cmd->add_option("--num-classes", cfg.num_classes, "label count for --predictions");
}

void add_query_params(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--k", cfg.k, "number of counterfactual evidences")->default_val(10);
    std::map<std::string, ceforge::QueryMode> modes{{"exact", ceforge::QueryMode::Exact},
                                                    {"indexed", ceforge::QueryMode::Indexed}};
    cmd->add_option("--mode", cfg.mode, "exact | indexed")
        ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
        ->default_str("exact");
    std::map<std::string, ceforge::GceStrategy> strategies{
        {"per-node-top1", ceforge::GceStrategy::PerNodeTop1},
        {"full-pairwise", ceforge::GceStrategy::FullPairwise}};
    cmd->add_option("--strategy", cfg.strategy, "global strategy: per-node-top1 | full-pairwise")
        ->transform(CLI::CheckedTransformer(strategies, CLI::ignore_case))
        ->default_str("per-node-top1");
    cmd->add_option("--index", cfg.index_file, "index file (required for --mode indexed)");
    cmd->add_flag("--force", cfg.force, "use stale caches/indexes anyway");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"counterfactual evidence search over GNN node classifications"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* agg = app.add_subcommand("aggregate", "precompute the aggregated-vector cache");
    add_config_file(agg);
    add_graph_inputs(agg, cfg);
    agg->add_option("--alpha", cfg.ks.alpha, "propagation trade-off in [0,1]")->default_val(0.5);
    agg->add_option("--hops", cfg.ks.hops, "propagation iterations L")->default_val(2);
    agg->add_option("--cache", cfg.cache_file, "output cache path")->required();

    auto* build = app.add_subcommand("build-index", "build the spherical cluster index");
    add_config_file(build);
    add_graph_inputs(build, cfg);
    build->add_option("--splits", cfg.splits_file, "splits CSV (node_id,split)")->required();
    build->add_option("--cache", cfg.cache_file, "aggregated-vector cache")->required();
    build->add_option("--index", cfg.index_file, "output index path")->required();
    build->add_option("--partitions", cfg.index.partitions, "supplementary partitions p")
        ->default_val(50);
    build->add_option("--clusters", cfg.index.clusters, "clusters per partition m")->default_val(10);
    build->add_option("--theta", cfg.index.theta, "similar-field half-angle in radians")
        ->default_val(1.0471975511965976);
    build->add_option("--seed", cfg.index.seed, "clustering seed")->default_val(42);
    build->add_option("--kmeans-max-iters", cfg.index.kmeans_max_iters, "k-means iteration cap")
        ->default_val(100);
    build->add_option("--kmeans-tol", cfg.index.kmeans_tol, "k-means objective tolerance")
        ->default_val(1e-6);
    build->add_flag("--no-weighted-clustering{false}", cfg.index.weighted_clustering,
                    "cluster with uniform weights (ablation)");
    build->add_flag("--force", cfg.force, "use a stale cache anyway");

    auto* query = app.add_subcommand("query", "run local or global CE queries");
    add_config_file(query);
    add_graph_inputs(query, cfg);
    add_prediction_inputs(query, cfg);
    query->add_option("--cache", cfg.cache_file, "aggregated-vector cache")->required();
    query->add_option("--node", cfg.query_node, "query node id (local query)");
    query->add_flag("--global", cfg.global, "global CE search");
    add_query_params(query, cfg);
    query->add_option("--out", cfg.out_file, "JSON-lines output (default stdout)");

    auto* analyze = app.add_subcommand("analyze", "evaluation metrics and exports");
    analyze->require_subcommand(1);
    CLI::App* subs[4];
    subs[0] = analyze->add_subcommand("as", "average similarity over all test nodes");
    subs[1] = analyze->add_subcommand("ds", "per-feature-value discrimination table");
    subs[2] = analyze->add_subcommand("error-curve", "accuracy within top-k GCEs over a k grid");
    subs[3] = analyze->add_subcommand("export-ce", "export top-k GCE nodes as a validation CSV");
    for (auto* sub : subs) {
        add_config_file(sub);
        add_graph_inputs(sub, cfg);
        add_prediction_inputs(sub, cfg);
        sub->add_option("--cache", cfg.cache_file, "aggregated-vector cache")->required();
        add_query_params(sub, cfg);
        sub->add_option("--out", cfg.out_file, "report output path");
        sub->add_flag("--effective-k", cfg.effective_k, "divide by actual hit count, not k");
    }
    subs[0]->add_flag("--exclude-empty", cfg.exclude_empty,
                      "exclude nodes with no counterfactual from the mean");
    subs[1]->add_option("--predicate", cfg.predicates,
                        "feature predicate f=v or f:lo:hi (repeatable)");
    subs[1]->add_option("--csv", cfg.csv_file, "also write the table as CSV");
    subs[2]->add_option("--k-grid", cfg.k_grid, "k values for the curve")->delimiter(',');

    // Merge an optional key=value config file under the explicit flags, then
    // hand the combined token list to CLI11 (which expects reversed input).
    std::vector<std::string> tokens(argv + 1, argv + argc);
    std::string config_path;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "--config" && i + 1 < tokens.size()) {
            config_path = tokens[i + 1];
        } else if (tokens[i].rfind("--config=", 0) == 0) {
            config_path = tokens[i].substr(9);
        }
    }
    if (!config_path.empty()) {
        const auto injected = config_file_args(config_path, tokens);
        size_t insert_at = 0;
        while (insert_at < tokens.size() && tokens[insert_at].rfind("--", 0) != 0) ++insert_at;
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(insert_at), injected.begin(),
                      injected.end());
    }
    std::reverse(tokens.begin(), tokens.end());
    try {
        app.parse(tokens);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        if (*agg) {
            const auto meta = ceforge::cmd_aggregate(cfg);
            std::cerr << "aggregate: " << meta.num_nodes << " nodes, dim " << meta.dim
                      << ", alpha " << meta.alpha << ", hops " << meta.hops << " -> "
                      << cfg.cache_file << " (" << elapsed_ms(start) << " ms)\n";
        } else if (*build) {
            const auto report = ceforge::cmd_build_index(cfg);
            std::cerr << "build-index: " << report.test_nodes << " test nodes, p="
                      << report.partitions << ", m=" << report.clusters << ", theta="
                      << cfg.index.theta << " -> " << cfg.index_file << " ("
                      << elapsed_ms(start) << " ms)\n";
            std::cerr << "chosen-weight histogram [0,1] in 10 bins:";
            for (size_t c : report.weight_histogram) std::cerr << ' ' << c;
            std::cerr << "\n";
        } else if (*query) {
            ceforge::QuerySummary summary;
            if (cfg.out_file.empty()) {
                summary = ceforge::cmd_query(cfg, std::cout);
            } else {
                std::ofstream out(cfg.out_file);
                if (!out) ceforge::fail("cannot write results: " + cfg.out_file);
                summary = ceforge::cmd_query(cfg, out);
            }
            ceforge::write_summary_json(cfg, summary);
            std::cerr << summary.kind << " query (" << summary.mode << "): " << summary.queries
                      << " queries, " << summary.results << " results, mean candidates scanned "
                      << summary.mean_candidates_scanned;
            if (summary.kind == "local") std::cerr << ", AS " << summary.average_similarity;
            std::cerr << " (" << elapsed_ms(start) << " ms)\n";
        } else if (*subs[0]) {
            const double as = ceforge::cmd_analyze_as(cfg);
            std::cerr << "AS@" << cfg.k << " (" << ceforge::mode_name(cfg.mode) << ") = " << as
                      << " (" << elapsed_ms(start) << " ms)\n";
        } else if (*subs[1]) {
            ceforge::cmd_analyze_ds(cfg, std::cerr);
            std::cerr << "(" << elapsed_ms(start) << " ms)\n";
        } else if (*subs[2]) {
            ceforge::cmd_analyze_error_curve(cfg);
            std::cerr << "error-curve -> " << cfg.out_file << " (" << elapsed_ms(start) << " ms)\n";
        } else if (*subs[3]) {
            ceforge::cmd_analyze_export_ce(cfg);
            std::cerr << "export-ce -> " << cfg.out_file << " (" << elapsed_ms(start) << " ms)\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
