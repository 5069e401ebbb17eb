#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/bitvec.hpp"
#include "biokey/parity_check.hpp"

namespace biokey {

// Systematic GF(2) encoder derived from a full-row-rank H by Gaussian
// elimination. Message bits are placed verbatim at info_positions (the
// non-pivot columns); each pivot column's bit is a GF(2) linear function
// of the message, stored as a dense row over the k message bits.
struct GeneratorMatrix {
    int k = 0;
    int n = 0;
    std::vector<int> info_positions;             // k column indices, ascending
    std::vector<int> parity_positions;           // n-k pivot column indices, ascending
    std::vector<std::vector<std::uint64_t>> parity_rows; // per parity position: packed k-bit row
};

namespace detail {

inline bool get_word_bit(const std::vector<std::uint64_t>& row, int i) {
    return (row[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1ULL;
}

inline void set_word_bit(std::vector<std::uint64_t>& row, int i) {
    row[static_cast<std::size_t>(i) >> 6] |= 1ULL << (i & 63);
}

} // namespace detail

// Pivot selection is deterministic: columns are scanned left to right and
// the first column with a usable pivot becomes a parity position.
inline GeneratorMatrix derive_generator(const ParityCheck& h) {
    const int n = h.n, r = h.r;
    const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
    std::vector<std::vector<std::uint64_t>> m(static_cast<std::size_t>(r),
                                              std::vector<std::uint64_t>(words, 0));
    for (int c = 0; c < r; ++c)
        for (int v : h.rows_adj[static_cast<std::size_t>(c)])
            detail::set_word_bit(m[static_cast<std::size_t>(c)], v);

    std::vector<int> pivot_col_of_row;
    int rank = 0;
    for (int col = 0; col < n && rank < r; ++col) {
        int piv = -1;
        for (int row = rank; row < r; ++row) {
            if (detail::get_word_bit(m[static_cast<std::size_t>(row)], col)) {
                piv = row;
                break;
            }
        }
        if (piv < 0) continue;
        std::swap(m[static_cast<std::size_t>(rank)], m[static_cast<std::size_t>(piv)]);
        for (int row = 0; row < r; ++row) {
            if (row != rank && detail::get_word_bit(m[static_cast<std::size_t>(row)], col)) {
                for (std::size_t w = 0; w < words; ++w)
                    m[static_cast<std::size_t>(row)][w] ^= m[static_cast<std::size_t>(rank)][w];
            }
        }
        pivot_col_of_row.push_back(col);
        ++rank;
    }
    if (rank != r)
        throw std::runtime_error("derive_generator: H is rank deficient (rank " +
                                 std::to_string(rank) + " of " + std::to_string(r) + " rows)");

    GeneratorMatrix g;
    g.n = n;
    g.k = n - rank;
    std::vector<bool> is_pivot(static_cast<std::size_t>(n), false);
    for (int col : pivot_col_of_row) is_pivot[static_cast<std::size_t>(col)] = true;
    std::vector<int> info_index_of_col(static_cast<std::size_t>(n), -1);
    for (int col = 0; col < n; ++col) {
        if (is_pivot[static_cast<std::size_t>(col)])
            g.parity_positions.push_back(col);
        else {
            info_index_of_col[static_cast<std::size_t>(col)] = static_cast<int>(g.info_positions.size());
            g.info_positions.push_back(col);
        }
    }
    // In RREF, row t reads: c[pivot_t] = sum over free columns f of m[t][f] * c[f].
    const std::size_t kwords = (static_cast<std::size_t>(g.k) + 63) / 64;
    g.parity_rows.assign(static_cast<std::size_t>(rank), std::vector<std::uint64_t>(kwords, 0));
    for (int t = 0; t < rank; ++t) {
        for (int col = 0; col < n; ++col) {
            if (is_pivot[static_cast<std::size_t>(col)]) continue;
            if (detail::get_word_bit(m[static_cast<std::size_t>(t)], col))
                detail::set_word_bit(g.parity_rows[static_cast<std::size_t>(t)],
                                     info_index_of_col[static_cast<std::size_t>(col)]);
        }
    }
    return g;
}

inline BitVector encode(const GeneratorMatrix& g, const BitVector& message) {
    if (static_cast<int>(message.size()) != g.k)
        throw std::invalid_argument("encode: message length != k");
    BitVector cw(static_cast<std::size_t>(g.n));
    std::vector<std::uint64_t> msg_words((static_cast<std::size_t>(g.k) + 63) / 64, 0);
    for (int i = 0; i < g.k; ++i) {
        const bool b = message.get(static_cast<std::size_t>(i));
        if (b) {
            detail::set_word_bit(msg_words, i);
            cw.set(static_cast<std::size_t>(g.info_positions[static_cast<std::size_t>(i)]), true);
        }
    }
    for (std::size_t t = 0; t < g.parity_rows.size(); ++t) {
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < msg_words.size(); ++w) acc ^= g.parity_rows[t][w] & msg_words[w];
        if (std::popcount(acc) & 1)
            cw.set(static_cast<std::size_t>(g.parity_positions[t]), true);
    }
    return cw;
}

// Extract the message bits back out of a codeword (systematic placement).
inline BitVector extract_message(const GeneratorMatrix& g, const BitVector& codeword) {
    if (static_cast<int>(codeword.size()) != g.n)
        throw std::invalid_argument("extract_message: codeword length != n");
    BitVector msg(static_cast<std::size_t>(g.k));
    for (int i = 0; i < g.k; ++i)
        msg.set(static_cast<std::size_t>(i),
                codeword.get(static_cast<std::size_t>(g.info_positions[static_cast<std::size_t>(i)])));
    return msg;
}

// ---- generator sidecar file (plain text) ----

inline void save_generator(const GeneratorMatrix& g, std::ostream& out) {
    out << "biokey-generator 1\n" << g.k << " " << g.n << "\n";
    for (int i = 0; i < g.k; ++i)
        out << g.info_positions[static_cast<std::size_t>(i)] << (i + 1 == g.k ? "\n" : " ");
    for (std::size_t t = 0; t < g.parity_rows.size(); ++t) {
        out << g.parity_positions[t];
        for (int i = 0; i < g.k; ++i)
            out << " " << (detail::get_word_bit(g.parity_rows[t], i) ? 1 : 0);
        out << "\n";
    }
}

inline void save_generator(const GeneratorMatrix& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open generator file for writing: " + path);
    save_generator(g, f);
}

inline GeneratorMatrix load_generator(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "biokey-generator" || version != 1)
        throw std::runtime_error("generator file: bad magic or version");
    GeneratorMatrix g;
    if (!(in >> g.k >> g.n) || g.k < 0 || g.n <= 0 || g.k > g.n)
        throw std::runtime_error("generator file: bad dimensions");
    g.info_positions.resize(static_cast<std::size_t>(g.k));
    for (auto& p : g.info_positions)
        if (!(in >> p) || p < 0 || p >= g.n) throw std::runtime_error("generator file: bad info position");
    const int rows = g.n - g.k;
    const std::size_t kwords = (static_cast<std::size_t>(g.k) + 63) / 64;
    for (int t = 0; t < rows; ++t) {
        int pos;
        if (!(in >> pos) || pos < 0 || pos >= g.n) throw std::runtime_error("generator file: bad parity position");
        g.parity_positions.push_back(pos);
        std::vector<std::uint64_t> row(kwords, 0);
        for (int i = 0; i < g.k; ++i) {
            int bit;
            if (!(in >> bit) || (bit != 0 && bit != 1)) throw std::runtime_error("generator file: bad parity bit");
            if (bit) detail::set_word_bit(row, i);
        }
        g.parity_rows.push_back(std::move(row));
    }
    return g;
}

inline GeneratorMatrix load_generator(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open generator file: " + path);
    return load_generator(f);
}

} // namespace biokey
