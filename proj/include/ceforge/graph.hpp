#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "common.hpp"
#include "dense.hpp"

namespace ceforge {

// Undirected simple graph. Immutable after load; adjacency lists are
// sorted and duplicate-free, so neighbors() is a cheap view.
struct Graph {
    std::vector<std::vector<NodeId>> adj;
    size_t edge_count = 0;

    size_t num_nodes() const { return adj.size(); }

    bool valid_node(NodeId v) const { return static_cast<size_t>(v) < adj.size(); }

    void require_node(NodeId v) const {
        if (!valid_node(v)) {
            fail("invalid node id " + std::to_string(v) + " (graph has " +
                 std::to_string(adj.size()) + " nodes)");
        }
    }

    std::span<const NodeId> neighbors(NodeId v) const {
        require_node(v);
        return {adj[v].data(), adj[v].size()};
    }

    size_t degree(NodeId v) const {
        require_node(v);
        return adj[v].size();
    }

    // Sorted (min,max) edge list, mostly for round-trip and reporting.
    std::vector<std::pair<NodeId, NodeId>> edges() const {
        std::vector<std::pair<NodeId, NodeId>> out;
        out.reserve(edge_count);
        for (NodeId v = 0; v < adj.size(); ++v) {
            for (NodeId u : adj[v]) {
                if (v < u) out.emplace_back(v, u);
            }
        }
        return out;
    }
};

inline Graph build_graph(size_t num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges) {
    Graph g;
    g.adj.resize(num_nodes);
    for (auto [u, v] : edges) {
        if (static_cast<size_t>(u) >= num_nodes || static_cast<size_t>(v) >= num_nodes) {
            fail("edge endpoint out of range: (" + std::to_string(u) + "," + std::to_string(v) +
                 ") with " + std::to_string(num_nodes) + " nodes");
        }
        if (u == v) fail("self-loop rejected at node " + std::to_string(u));
        g.adj[u].push_back(v);
        g.adj[v].push_back(u);
    }
    for (auto& nbrs : g.adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
        g.edge_count += nbrs.size();
    }
    g.edge_count /= 2;
    return g;
}

namespace detail {

// Accepts "u<TAB>v" or "u,v". Returns false for comment/blank lines and
// fills *header_nodes when the line is a "#nodes=N" override.
inline bool parse_edge_line(const std::string& raw, size_t lineno, NodeId* u, NodeId* v,
                            std::int64_t* header_nodes) {
    const std::string line = trim(raw);
    if (line.empty()) return false;
    if (line[0] == '#') {
        const std::string body = trim(line.substr(1));
        if (body.rfind("nodes=", 0) == 0) {
            *header_nodes = parse_int(body.substr(6), "edge file line " + std::to_string(lineno));
            if (*header_nodes < 0 || *header_nodes > kMaxNodeId + 1) {
                fail("edge file line " + std::to_string(lineno) + ": invalid #nodes value");
            }
        }
        return false;
    }
    size_t sep = line.find_first_of(",\t");
    if (sep == std::string::npos) {
        fail("edge file line " + std::to_string(lineno) + ": expected two ids separated by tab or comma: '" + line + "'");
    }
    const std::string a = line.substr(0, sep);
    const std::string b = line.substr(sep + 1);
    if (b.find_first_of(",\t") != std::string::npos) {
        fail("edge file line " + std::to_string(lineno) + ": more than two fields: '" + line + "'");
    }
    const std::string ctx = "edge file line " + std::to_string(lineno);
    *u = parse_node_id(a, ctx);
    *v = parse_node_id(b, ctx);
    if (*u == *v) fail(ctx + ": self-loop rejected at node " + std::to_string(*u));
    return true;
}

} // namespace detail

// Edge-list loader. Lines are "u,v" or tab-separated; '#' starts a comment;
// an optional "#nodes=N" line overrides num_nodes = max id + 1.
inline Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open edge file: " + path);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::int64_t header_nodes = -1;
    std::int64_t max_id = -1;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        NodeId u = 0, v = 0;
        if (!detail::parse_edge_line(line, lineno, &u, &v, &header_nodes)) continue;
        edges.emplace_back(u, v);
        max_id = std::max<std::int64_t>(max_id, std::max(u, v));
    }
    size_t num_nodes = static_cast<size_t>(max_id + 1);
    if (header_nodes >= 0) {
        if (header_nodes < max_id + 1) {
            fail("edge file " + path + ": #nodes=" + std::to_string(header_nodes) +
                 " is smaller than max id + 1 = " + std::to_string(max_id + 1));
        }
        num_nodes = static_cast<size_t>(header_nodes);
    }
    return build_graph(num_nodes, edges);
}

inline void save_graph(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write edge file: " + path);
    out << "#nodes=" << g.num_nodes() << "\n";
    for (auto [u, v] : g.edges()) out << u << "," << v << "\n";
    if (!out) fail("I/O error writing " + path);
}

// External-to-internal id remapping, persisted as "external_id,internal_id".
struct IdMap {
    std::map<std::int64_t, NodeId> to_internal;

    NodeId map(std::int64_t ext, const std::string& what) const {
        auto it = to_internal.find(ext);
        if (it == to_internal.end()) {
            fail(what + ": external id " + std::to_string(ext) + " not present in id map");
        }
        return it->second;
    }
};

inline void save_id_map(const IdMap& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write id map: " + path);
    out << "external_id,internal_id\n";
    for (const auto& [ext, internal] : m.to_internal) out << ext << "," << internal << "\n";
    if (!out) fail("I/O error writing " + path);
}

inline IdMap load_id_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open id map: " + path);
    IdMap m;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (lineno == 1 && t.rfind("external_id", 0) == 0) continue;
        auto parts = split(t, ',');
        if (parts.size() != 2) fail("id map line " + std::to_string(lineno) + ": expected two fields");
        const std::string ctx = "id map line " + std::to_string(lineno);
        std::int64_t ext = parse_int(parts[0], ctx);
        NodeId internal = parse_node_id(parts[1], ctx);
        if (!m.to_internal.emplace(ext, internal).second) {
            fail(ctx + ": duplicate external id " + std::to_string(ext));
        }
    }
    return m;
}

// Loads an edge list with sparse external ids, compacting them to dense
// internal ids (ascending external order) and persisting the map.
inline Graph load_graph_remapped(const std::string& path, IdMap* out_map) {
    std::ifstream in(path);
    if (!in) fail("cannot open edge file: " + path);
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    std::set<std::int64_t> ids;
    std::int64_t header_nodes = -1;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        NodeId u = 0, v = 0;
        if (!detail::parse_edge_line(line, lineno, &u, &v, &header_nodes)) continue;
        raw.emplace_back(u, v);
        ids.insert(u);
        ids.insert(v);
    }
    IdMap m;
    NodeId next = 0;
    for (std::int64_t ext : ids) m.to_internal.emplace(ext, next++);
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(raw.size());
    for (auto [u, v] : raw) {
        edges.emplace_back(m.to_internal.at(u), m.to_internal.at(v));
    }
    if (out_map) *out_map = m;
    return build_graph(ids.size(), edges);
}

// Feature CSV: header "node_id,f0,...,f{d-1}", one row per node, all finite.
inline FeatureMatrix load_features(const std::string& path, const Graph& graph,
                                   const IdMap* id_map = nullptr) {
    std::ifstream in(path);
    if (!in) fail("cannot open feature file: " + path);
    std::string line;
    if (!std::getline(in, line)) fail("feature file is empty: " + path);
    auto header = split(trim(line), ',');
    if (header.size() < 2 || trim(header[0]) != "node_id") {
        fail("feature file " + path + ": expected header 'node_id,f0,...'");
    }
    const size_t dim = header.size() - 1;
    const size_t n = graph.num_nodes();
    FeatureMatrix x(n, dim);
    std::vector<bool> seen(n, false);
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto parts = split(t, ',');
        const std::string ctx = "feature file line " + std::to_string(lineno);
        if (parts.size() != dim + 1) {
            fail(ctx + ": expected " + std::to_string(dim + 1) + " fields, got " +
                 std::to_string(parts.size()));
        }
        NodeId v;
        if (id_map) {
            v = id_map->map(parse_int(parts[0], ctx), ctx);
        } else {
            v = parse_node_id(parts[0], ctx);
        }
        if (!graph.valid_node(v)) fail(ctx + ": node id " + std::to_string(v) + " out of range");
        if (seen[v]) fail(ctx + ": duplicate row for node " + std::to_string(v));
        seen[v] = true;
        for (size_t j = 0; j < dim; ++j) {
            double val = parse_double(parts[j + 1], ctx);
            if (!std::isfinite(val)) {
                fail(ctx + ": non-finite value in column f" + std::to_string(j));
            }
            x.at(v, j) = val;
        }
    }
    for (NodeId v = 0; v < n; ++v) {
        if (!seen[v]) fail("feature file " + path + ": missing row for node " + std::to_string(v));
    }
    return x;
}

enum class Split : std::uint8_t { Train, Valid, Test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        default: return "test";
    }
}

// Train/valid/test assignment; the three sets partition V.
struct SplitAssignment {
    std::vector<Split> tag;

    std::vector<NodeId> test_nodes() const {
        std::vector<NodeId> out;
        for (NodeId v = 0; v < tag.size(); ++v) {
            if (tag[v] == Split::Test) out.push_back(v);
        }
        return out;
    }

    bool is_test(NodeId v) const { return static_cast<size_t>(v) < tag.size() && tag[v] == Split::Test; }
};

// Splits CSV: "node_id,split" with split in {train,valid,test}; every node
// appears exactly once and the test set is non-empty.
inline SplitAssignment load_splits(const std::string& path, const Graph& graph,
                                   const IdMap* id_map = nullptr) {
    std::ifstream in(path);
    if (!in) fail("cannot open splits file: " + path);
    const size_t n = graph.num_nodes();
    SplitAssignment s;
    s.tag.assign(n, Split::Train);
    std::vector<bool> seen(n, false);
    std::string line;
    size_t lineno = 0;
    bool any_test = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (lineno == 1 && t.rfind("node_id", 0) == 0) continue;
        auto parts = split(t, ',');
        const std::string ctx = "splits file line " + std::to_string(lineno);
        if (parts.size() != 2) fail(ctx + ": expected 'node_id,split'");
        NodeId v;
        if (id_map) {
            v = id_map->map(parse_int(parts[0], ctx), ctx);
        } else {
            v = parse_node_id(parts[0], ctx);
        }
        if (!graph.valid_node(v)) fail(ctx + ": node id " + std::to_string(v) + " out of range");
        if (seen[v]) fail(ctx + ": duplicate assignment for node " + std::to_string(v));
        seen[v] = true;
        const std::string name = trim(parts[1]);
        if (name == "train") {
            s.tag[v] = Split::Train;
        } else if (name == "valid") {
            s.tag[v] = Split::Valid;
        } else if (name == "test") {
            s.tag[v] = Split::Test;
            any_test = true;
        } else {
            fail(ctx + ": unknown split '" + name + "'");
        }
    }
    for (NodeId v = 0; v < n; ++v) {
        if (!seen[v]) fail("splits file " + path + ": missing assignment for node " + std::to_string(v));
    }
    if (!any_test) fail("splits file " + path + ": test set is empty");
    return s;
}

// BFS-bounded induced subgraph anchored at v.
struct AnchoredSubgraph {
    NodeId anchor = 0;
    unsigned hop_limit = 0;
    std::vector<NodeId> nodes;  // sorted
    std::vector<std::pair<NodeId, NodeId>> edges;  // induced, (min,max) sorted
};

inline AnchoredSubgraph extract_l_hop(const Graph& graph, NodeId v, unsigned hops) {
    graph.require_node(v);
    AnchoredSubgraph sub;
    sub.anchor = v;
    sub.hop_limit = hops;
    std::vector<unsigned> depth(graph.num_nodes(), static_cast<unsigned>(-1));
    std::deque<NodeId> frontier{v};
    depth[v] = 0;
    sub.nodes.push_back(v);
    while (!frontier.empty()) {
        NodeId cur = frontier.front();
        frontier.pop_front();
        if (depth[cur] == hops) continue;
        for (NodeId nb : graph.neighbors(cur)) {
            if (depth[nb] != static_cast<unsigned>(-1)) continue;
            depth[nb] = depth[cur] + 1;
            sub.nodes.push_back(nb);
            frontier.push_back(nb);
        }
    }
    std::sort(sub.nodes.begin(), sub.nodes.end());
    for (NodeId a : sub.nodes) {
        for (NodeId b : graph.neighbors(a)) {
            if (a < b && depth[b] != static_cast<unsigned>(-1)) sub.edges.emplace_back(a, b);
        }
    }
    std::sort(sub.edges.begin(), sub.edges.end());
    return sub;
}

} // namespace ceforge
