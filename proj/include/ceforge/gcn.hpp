#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "dense.hpp"
#include "graph.hpp"

namespace ceforge {

// Symmetric normalization with self-loops: D^{-1/2} (A + I) D^{-1/2}.
// Dense output; meant for desk-scale self-tests, not production inference.
inline DenseMatrix normalize_adjacency(const Graph& g) {
    const size_t n = g.num_nodes();
    std::vector<double> inv_sqrt_deg(n);
    for (NodeId v = 0; v < n; ++v) {
        inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v) + 1));
    }
    DenseMatrix a(n, n);
    for (NodeId v = 0; v < n; ++v) {
        a.at(v, v) = inv_sqrt_deg[v] * inv_sqrt_deg[v];
        for (NodeId u : g.neighbors(v)) {
            a.at(v, u) = inv_sqrt_deg[v] * inv_sqrt_deg[u];
        }
    }
    return a;
}

struct GcnWeights {
    std::vector<DenseMatrix> layers;
};

// Weights JSON: {"layers": [{"rows": R, "cols": C, "data": [row-major...]}, ...]}
inline GcnWeights load_gcn_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open weights file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("weights file " + path + ": invalid JSON: " + e.what());
    }
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) {
        fail("weights file " + path + ": expected non-empty 'layers' array");
    }
    GcnWeights w;
    size_t idx = 0;
    for (const auto& layer : j["layers"]) {
        const std::string ctx = "weights file layer " + std::to_string(idx);
        if (!layer.contains("rows") || !layer.contains("cols") || !layer.contains("data")) {
            fail(ctx + ": expected rows/cols/data");
        }
        DenseMatrix m(layer["rows"].get<size_t>(), layer["cols"].get<size_t>());
        const auto& d = layer["data"];
        if (!d.is_array() || d.size() != m.rows * m.cols) {
            fail(ctx + ": data length != rows*cols");
        }
        for (size_t i = 0; i < m.data.size(); ++i) {
            m.data[i] = d[i].get<double>();
            if (!std::isfinite(m.data[i])) fail(ctx + ": non-finite weight");
        }
        if (idx > 0 && w.layers.back().cols != m.rows) {
            fail(ctx + ": input dim " + std::to_string(m.rows) + " does not match previous layer output " +
                 std::to_string(w.layers.back().cols));
        }
        w.layers.push_back(std::move(m));
        ++idx;
    }
    return w;
}

// H^{0} = X; H^{l+1} = sigma(A~ H^{l} W^{l}); ReLU on hidden layers,
// identity on the last (argmax downstream makes softmax redundant).
inline DenseMatrix gcn_forward(const FeatureMatrix& features, const DenseMatrix& adj_norm,
                               const GcnWeights& weights) {
    if (weights.layers.empty()) fail("gcn_forward: no layers");
    if (adj_norm.rows != features.rows || adj_norm.cols != features.rows) {
        fail("gcn_forward: adjacency is " + std::to_string(adj_norm.rows) + "x" +
             std::to_string(adj_norm.cols) + " but features have " +
             std::to_string(features.rows) + " rows");
    }
    DenseMatrix h = features;
    for (size_t l = 0; l < weights.layers.size(); ++l) {
        const DenseMatrix& w = weights.layers[l];
        if (h.cols != w.rows) {
            fail("gcn_forward: dimension mismatch at layer " + std::to_string(l) + ": " +
                 std::to_string(h.cols) + " vs " + std::to_string(w.rows));
        }
        DenseMatrix z = matmul(matmul(adj_norm, h), w);
        if (l + 1 < weights.layers.size()) {
            for (double& x : z.data) x = x > 0.0 ? x : 0.0;
        }
        h = std::move(z);
    }
    return h;
}

// Per-node predicted label from a fixed deterministic classifier; the true
// label column is optional (-1 = unknown). -1 in `predicted` marks nodes the
// ingested file did not cover (never a test node).
struct PredictionTable {
    std::vector<std::int32_t> predicted;
    std::vector<std::int32_t> true_label;
    std::int32_t num_classes = 0;

    std::int32_t label(NodeId v) const {
        if (static_cast<size_t>(v) >= predicted.size() || predicted[v] < 0) {
            fail("no prediction recorded for node " + std::to_string(v));
        }
        return predicted[v];
    }

    bool has_true_label(NodeId v) const {
        return static_cast<size_t>(v) < true_label.size() && true_label[v] >= 0;
    }
};

// Row argmax; ties break to the smallest label id.
inline PredictionTable predict_labels(const DenseMatrix& logits) {
    if (logits.cols == 0) fail("predict_labels: empty logit rows");
    PredictionTable t;
    t.num_classes = static_cast<std::int32_t>(logits.cols);
    t.predicted.resize(logits.rows);
    t.true_label.assign(logits.rows, -1);
    for (size_t v = 0; v < logits.rows; ++v) {
        auto row = logits.row(v);
        size_t best = 0;
        for (size_t j = 1; j < row.size(); ++j) {
            if (row[j] > row[best]) best = j;
        }
        t.predicted[v] = static_cast<std::int32_t>(best);
    }
    return t;
}

// Predictions CSV: "node_id,predicted_label[,true_label]". Must cover every
// test node; labels must lie in [0, num_classes).
inline PredictionTable load_predictions(const std::string& path, std::int32_t num_classes,
                                        const Graph& graph, const SplitAssignment& splits,
                                        const IdMap* id_map = nullptr) {
    if (num_classes < 1) fail("load_predictions: num_classes must be >= 1");
    std::ifstream in(path);
    if (!in) fail("cannot open predictions file: " + path);
    const size_t n = graph.num_nodes();
    PredictionTable t;
    t.num_classes = num_classes;
    t.predicted.assign(n, -1);
    t.true_label.assign(n, -1);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (lineno == 1 && s.rfind("node_id", 0) == 0) continue;
        auto parts = split(s, ',');
        const std::string ctx = "predictions file line " + std::to_string(lineno);
        if (parts.size() != 2 && parts.size() != 3) {
            fail(ctx + ": expected 'node_id,predicted_label[,true_label]'");
        }
        NodeId v;
        if (id_map) {
            v = id_map->map(parse_int(parts[0], ctx), ctx);
        } else {
            v = parse_node_id(parts[0], ctx);
        }
        if (!graph.valid_node(v)) fail(ctx + ": node id " + std::to_string(v) + " out of range");
        if (t.predicted[v] >= 0) fail(ctx + ": duplicate prediction for node " + std::to_string(v));
        std::int64_t label = parse_int(parts[1], ctx);
        if (label < 0 || label >= num_classes) {
            fail(ctx + ": predicted label " + std::to_string(label) + " out of range [0," +
                 std::to_string(num_classes) + ")");
        }
        t.predicted[v] = static_cast<std::int32_t>(label);
        if (parts.size() == 3) {
            std::int64_t y = parse_int(parts[2], ctx);
            if (y < 0 || y >= num_classes) {
                fail(ctx + ": true label " + std::to_string(y) + " out of range [0," +
                     std::to_string(num_classes) + ")");
            }
            t.true_label[v] = static_cast<std::int32_t>(y);
        }
    }
    for (NodeId v = 0; v < n; ++v) {
        if (splits.tag[v] == Split::Test && t.predicted[v] < 0) {
            fail("predictions file " + path + ": missing test node " + std::to_string(v));
        }
    }
    return t;
}

} // namespace ceforge
