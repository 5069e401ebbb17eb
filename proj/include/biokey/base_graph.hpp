#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace biokey {

// Protograph description of a quasi-cyclic code: a small matrix whose
// entries are circulant shift values. File format is CSV: a header line
// `rows,cols,lifting_set_id` followed by one `row,col,shift` triple per
// line (0-based indices).
struct BaseGraphEntry {
    int row;
    int col;
    int shift;
};

struct BaseGraph {
    int rows = 0;
    int cols = 0;
    int lifting_set_id = 0;
    std::vector<BaseGraphEntry> entries;
};

namespace detail {

inline std::vector<long long> parse_int_fields(const std::string& line, std::size_t expected,
                                               int line_no) {
    std::vector<long long> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        std::size_t pos = 0;
        long long v;
        try {
            v = std::stoll(field, &pos);
        } catch (const std::exception&) {
            throw std::runtime_error("base graph parse error at line " + std::to_string(line_no));
        }
        while (pos < field.size() && (field[pos] == ' ' || field[pos] == '\r')) ++pos;
        if (pos != field.size())
            throw std::runtime_error("base graph parse error at line " + std::to_string(line_no));
        out.push_back(v);
    }
    if (out.size() != expected)
        throw std::runtime_error("base graph parse error at line " + std::to_string(line_no) +
                                 ": expected " + std::to_string(expected) + " fields");
    return out;
}

} // namespace detail

inline BaseGraph load_base_graph(std::istream& in) {
    std::string line;
    int line_no = 0;
    BaseGraph bg;
    if (!std::getline(in, line)) throw std::runtime_error("base graph file is empty");
    ++line_no;
    auto header = detail::parse_int_fields(line, 3, line_no);
    bg.rows = static_cast<int>(header[0]);
    bg.cols = static_cast<int>(header[1]);
    bg.lifting_set_id = static_cast<int>(header[2]);
    if (bg.rows <= 0 || bg.cols <= 0)
        throw std::runtime_error("base graph header: non-positive dimensions");

    std::set<std::pair<int, int>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto f = detail::parse_int_fields(line, 3, line_no);
        BaseGraphEntry e{static_cast<int>(f[0]), static_cast<int>(f[1]), static_cast<int>(f[2])};
        if (e.row < 0 || e.row >= bg.rows || e.col < 0 || e.col >= bg.cols)
            throw std::runtime_error("base graph entry out of bounds at line " +
                                     std::to_string(line_no));
        if (e.shift < 0)
            throw std::runtime_error("base graph negative shift at line " + std::to_string(line_no));
        if (!seen.insert({e.row, e.col}).second)
            throw std::runtime_error("base graph duplicate (row,col) at line " +
                                     std::to_string(line_no));
        bg.entries.push_back(e);
    }
    return bg;
}

inline BaseGraph load_base_graph(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open base graph file: " + path);
    return load_base_graph(f);
}

} // namespace biokey
