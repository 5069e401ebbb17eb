#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/base_graph.hpp"
#include "biokey/bitvec.hpp"

namespace biokey {

// Sparse GF(2) parity-check matrix stored as mutually consistent
// adjacency lists (per-check variable indices and per-variable check
// indices, both sorted ascending).
struct ParityCheck {
    int n = 0; // variables (code length)
    int r = 0; // check rows
    std::vector<std::vector<int>> rows_adj; // r lists of variable indices
    std::vector<std::vector<int>> cols_adj; // n lists of check indices

    std::size_t edge_count() const {
        std::size_t c = 0;
        for (const auto& row : rows_adj) c += row.size();
        return c;
    }
};

inline ParityCheck make_parity_check(int r, int n,
                                     const std::vector<std::pair<int, int>>& edges) {
    ParityCheck h;
    h.n = n;
    h.r = r;
    h.rows_adj.assign(static_cast<std::size_t>(r), {});
    h.cols_adj.assign(static_cast<std::size_t>(n), {});
    for (auto [row, col] : edges) {
        h.rows_adj[static_cast<std::size_t>(row)].push_back(col);
        h.cols_adj[static_cast<std::size_t>(col)].push_back(row);
    }
    for (auto& v : h.rows_adj) std::sort(v.begin(), v.end());
    for (auto& v : h.cols_adj) std::sort(v.begin(), v.end());
    return h;
}

// Expand each base entry (i,j,s) into a z x z circulant permutation block:
// row t of the block has its 1 at column (t + s) mod z.
inline ParityCheck lift(const BaseGraph& bg, int z) {
    if (z < 1) throw std::invalid_argument("lift: z must be >= 1");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(bg.entries.size() * static_cast<std::size_t>(z));
    for (const auto& e : bg.entries) {
        const int s = e.shift % z;
        for (int t = 0; t < z; ++t)
            edges.emplace_back(e.row * z + t, e.col * z + (t + s) % z);
    }
    return make_parity_check(bg.rows * z, bg.cols * z, edges);
}

inline BitVector syndrome(const ParityCheck& h, const BitVector& word) {
    if (static_cast<int>(word.size()) != h.n)
        throw std::invalid_argument("syndrome: word length != n");
    BitVector s(static_cast<std::size_t>(h.r));
    for (int c = 0; c < h.r; ++c) {
        unsigned acc = 0;
        for (int v : h.rows_adj[static_cast<std::size_t>(c)])
            acc ^= static_cast<unsigned>(word.get(static_cast<std::size_t>(v)));
        s.set(static_cast<std::size_t>(c), acc & 1u);
    }
    return s;
}

// Edge-indexed view of the bipartite graph. Edge ids are assigned
// row-major over H (sorted by check, then variable), which makes the
// ordering deterministic for per-edge decoder parameters.
struct TannerGraph {
    int n = 0;
    int r = 0;
    std::vector<int> edge_check;               // per edge: check index
    std::vector<int> edge_var;                 // per edge: variable index
    std::vector<std::vector<int>> check_edges; // per check: edge ids
    std::vector<std::vector<int>> var_edges;   // per variable: edge ids

    std::size_t edge_count() const { return edge_check.size(); }
};

inline TannerGraph tanner_graph(const ParityCheck& h) {
    TannerGraph g;
    g.n = h.n;
    g.r = h.r;
    g.check_edges.assign(static_cast<std::size_t>(h.r), {});
    g.var_edges.assign(static_cast<std::size_t>(h.n), {});
    int eid = 0;
    for (int c = 0; c < h.r; ++c) {
        for (int v : h.rows_adj[static_cast<std::size_t>(c)]) {
            g.edge_check.push_back(c);
            g.edge_var.push_back(v);
            g.check_edges[static_cast<std::size_t>(c)].push_back(eid);
            g.var_edges[static_cast<std::size_t>(v)].push_back(eid);
            ++eid;
        }
    }
    return g;
}

// ---- MacKay alist interchange format (1-based indices) ----

inline void save_alist(const ParityCheck& h, std::ostream& out) {
    std::size_t max_col = 0, max_row = 0;
    for (const auto& v : h.cols_adj) max_col = std::max(max_col, v.size());
    for (const auto& v : h.rows_adj) max_row = std::max(max_row, v.size());
    out << h.n << " " << h.r << "\n";
    out << max_col << " " << max_row << "\n";
    for (int v = 0; v < h.n; ++v) out << h.cols_adj[static_cast<std::size_t>(v)].size() << (v + 1 == h.n ? "\n" : " ");
    for (int c = 0; c < h.r; ++c) out << h.rows_adj[static_cast<std::size_t>(c)].size() << (c + 1 == h.r ? "\n" : " ");
    for (int v = 0; v < h.n; ++v) {
        const auto& adj = h.cols_adj[static_cast<std::size_t>(v)];
        for (std::size_t i = 0; i < max_col; ++i) {
            out << (i < adj.size() ? adj[i] + 1 : 0);
            out << (i + 1 == max_col ? "\n" : " ");
        }
    }
    for (int c = 0; c < h.r; ++c) {
        const auto& adj = h.rows_adj[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < max_row; ++i) {
            out << (i < adj.size() ? adj[i] + 1 : 0);
            out << (i + 1 == max_row ? "\n" : " ");
        }
    }
}

inline void save_alist(const ParityCheck& h, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open alist file for writing: " + path);
    save_alist(h, f);
}

inline ParityCheck load_alist(std::istream& in) {
    auto next_int = [&in]() {
        long long v;
        if (!(in >> v)) throw std::runtime_error("alist parse error: unexpected end of input");
        return v;
    };
    const int n = static_cast<int>(next_int());
    const int r = static_cast<int>(next_int());
    if (n <= 0 || r <= 0) throw std::runtime_error("alist parse error: non-positive dimensions");
    const int max_col = static_cast<int>(next_int());
    const int max_row = static_cast<int>(next_int());
    std::vector<int> col_deg(static_cast<std::size_t>(n)), row_deg(static_cast<std::size_t>(r));
    for (auto& d : col_deg) {
        d = static_cast<int>(next_int());
        if (d < 0 || d > max_col) throw std::runtime_error("alist parse error: column degree exceeds declared maximum");
    }
    for (auto& d : row_deg) {
        d = static_cast<int>(next_int());
        if (d < 0 || d > max_row) throw std::runtime_error("alist parse error: row degree exceeds declared maximum");
    }
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v < n; ++v) {
        int seen = 0;
        for (int i = 0; i < max_col; ++i) {
            const int c = static_cast<int>(next_int());
            if (c == 0) continue;
            if (c < 1 || c > r) throw std::runtime_error("alist parse error: check index out of range");
            edges.emplace_back(c - 1, v);
            ++seen;
        }
        if (seen != col_deg[static_cast<std::size_t>(v)])
            throw std::runtime_error("alist parse error: column degree mismatch at column " +
                                     std::to_string(v + 1));
    }
    // row lists must agree with the column lists
    std::vector<std::vector<int>> declared_rows(static_cast<std::size_t>(r));
    for (int c = 0; c < r; ++c) {
        int seen = 0;
        for (int i = 0; i < max_row; ++i) {
            const int v = static_cast<int>(next_int());
            if (v == 0) continue;
            if (v < 1 || v > n) throw std::runtime_error("alist parse error: variable index out of range");
            declared_rows[static_cast<std::size_t>(c)].push_back(v - 1);
            ++seen;
        }
        if (seen != row_deg[static_cast<std::size_t>(c)])
            throw std::runtime_error("alist parse error: row degree mismatch at row " +
                                     std::to_string(c + 1));
    }
    ParityCheck h = make_parity_check(r, n, edges);
    for (int c = 0; c < r; ++c) {
        auto rows = declared_rows[static_cast<std::size_t>(c)];
        std::sort(rows.begin(), rows.end());
        if (rows != h.rows_adj[static_cast<std::size_t>(c)])
            throw std::runtime_error("alist parse error: row/column adjacency disagree at row " +
                                     std::to_string(c + 1));
    }
    return h;
}

inline ParityCheck load_alist(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open alist file: " + path);
    return load_alist(f);
}

} // namespace biokey
