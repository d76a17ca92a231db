#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ceforge {

// Node ids are dense integers in [0, |V|).
using NodeId = std::uint32_t;

// Largest ingestible id; keeps num_nodes = max_id + 1 representable.
inline constexpr std::int64_t kMaxNodeId = 0xFFFFFFFEll;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) {
    throw Error(msg);
}

inline std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::int64_t parse_int(const std::string& tok, const std::string& what) {
    const std::string t = trim(tok);
    if (t.empty()) fail(what + ": empty integer field");
    size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(t, &pos);
    } catch (const std::exception&) {
        fail(what + ": not an integer: '" + t + "'");
    }
    if (pos != t.size()) fail(what + ": trailing characters in integer: '" + t + "'");
    return v;
}

inline NodeId parse_node_id(const std::string& tok, const std::string& what) {
    std::int64_t v = parse_int(tok, what);
    if (v < 0) fail(what + ": negative node id " + std::to_string(v));
    if (v > kMaxNodeId) fail(what + ": node id overflow: " + std::to_string(v));
    return static_cast<NodeId>(v);
}

inline double parse_double(const std::string& tok, const std::string& what) {
    const std::string t = trim(tok);
    if (t.empty()) fail(what + ": empty numeric field");
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        fail(what + ": not a number: '" + t + "'");
    }
    if (pos != t.size()) fail(what + ": trailing characters in number: '" + t + "'");
    return v;
}

// FNV-1a, used to bind derived artifacts to their input files.
inline std::uint64_t fnv1a64(const void* data, size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

inline std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file for checksum: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
        if (!in) break;
    }
    return to_hex(h);
}

// Thread budget: hardware concurrency capped by CE_FORGE_THREADS.
inline unsigned thread_budget() {
    static const unsigned budget = [] {
        unsigned hw = std::thread::hardware_concurrency();
        if (hw == 0) hw = 1;
        if (const char* env = std::getenv("CE_FORGE_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end != env && v >= 1 && static_cast<unsigned long>(v) < hw) {
                hw = static_cast<unsigned>(v);
            }
        }
        return hw;
    }();
    return budget;
}

// Deterministic map over [0, n): workers own disjoint contiguous ranges,
// so results are identical to the sequential loop.
template <typename Fn>
void parallel_for(size_t n, Fn&& fn, size_t grain = 1024) {
    const unsigned threads = thread_budget();
    if (threads <= 1 || n <= grain) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const size_t chunks = std::min<size_t>(threads, (n + grain - 1) / grain);
    const size_t per = (n + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    std::exception_ptr eptr = nullptr;
    for (size_t c = 0; c < chunks; ++c) {
        const size_t lo = c * per;
        const size_t hi = std::min(n, lo + per);
        pool.emplace_back([&, lo, hi] {
            try {
                for (size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                if (!eptr) eptr = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (eptr) std::rethrow_exception(eptr);
}

} // namespace ceforge
