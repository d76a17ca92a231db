#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "dense.hpp"

namespace ceforge {

// Binary table: 8-byte magic, u32 version, u64 rows, u64 cols, row-major
// little-endian f64 payload. Shared by the aggregated-vector cache and the
// index centroid companion file.
inline constexpr char kTableMagic[8] = {'C', 'E', 'F', 'G', 'T', 'B', 'L', '\0'};
inline constexpr std::uint32_t kTableVersion = 1;

inline void write_table(const std::string& path, const DenseMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write table: " + path);
    out.write(kTableMagic, sizeof(kTableMagic));
    std::uint32_t version = kTableVersion;
    std::uint64_t rows = m.rows, cols = m.cols;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!out) fail("I/O error writing " + path);
}

inline DenseMatrix read_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open table: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kTableMagic, sizeof(magic)) != 0) {
        fail("not a ceforge table file: " + path);
    }
    std::uint32_t version = 0;
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || version != kTableVersion) fail("unsupported table version in " + path);
    DenseMatrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!in) fail("truncated table file: " + path);
    return m;
}

// Sidecar recording what the aggregated-vector cache was computed from.
struct AggCacheMeta {
    double alpha = 0.5;
    unsigned hops = 2;
    std::string graph_checksum;
    std::string features_checksum;
    std::uint64_t num_nodes = 0;
    std::uint64_t dim = 0;
};

inline std::string sidecar_path(const std::string& cache_path) {
    return cache_path + ".meta.json";
}

inline void write_agg_cache(const std::string& path, const AggregatedVectors& agg,
                            const AggCacheMeta& meta) {
    write_table(path, agg);
    nlohmann::ordered_json j;
    j["format"] = "ceforge-agg-cache";
    j["version"] = 1;
    j["alpha"] = meta.alpha;
    j["hops"] = meta.hops;
    j["graph_checksum"] = meta.graph_checksum;
    j["features_checksum"] = meta.features_checksum;
    j["num_nodes"] = agg.rows;
    j["dim"] = agg.cols;
    std::ofstream out(sidecar_path(path));
    if (!out) fail("cannot write cache sidecar: " + sidecar_path(path));
    out << j.dump(2) << "\n";
    if (!out) fail("I/O error writing " + sidecar_path(path));
}

inline AggCacheMeta read_agg_cache_meta(const std::string& cache_path) {
    const std::string side = sidecar_path(cache_path);
    std::ifstream in(side);
    if (!in) fail("cannot open cache sidecar: " + side);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail("cache sidecar " + side + ": invalid JSON: " + e.what());
    }
    if (j.value("format", "") != "ceforge-agg-cache") {
        fail("cache sidecar " + side + ": not an aggregated-vector cache");
    }
    AggCacheMeta m;
    m.alpha = j.at("alpha").get<double>();
    m.hops = j.at("hops").get<unsigned>();
    m.graph_checksum = j.at("graph_checksum").get<std::string>();
    m.features_checksum = j.at("features_checksum").get<std::string>();
    m.num_nodes = j.at("num_nodes").get<std::uint64_t>();
    m.dim = j.at("dim").get<std::uint64_t>();
    return m;
}

inline AggregatedVectors read_agg_cache(const std::string& path, AggCacheMeta* meta = nullptr) {
    AggCacheMeta m = read_agg_cache_meta(path);
    AggregatedVectors agg = read_table(path);
    if (agg.rows != m.num_nodes || agg.cols != m.dim) {
        fail("cache " + path + ": table shape disagrees with sidecar");
    }
    if (meta) *meta = m;
    return agg;
}

} // namespace ceforge
