#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace biokey {

inline constexpr std::size_t kFeatureDim = 512;

using FeatureVector = std::vector<double>; // kFeatureDim reals
using QuantizedVector = std::vector<int>;  // labels in [1, q]

// Equally-probable-interval quantizer: per dimension, q-1 cut points at
// the j/q empirical quantiles of the calibration sample.
struct QuantizerTable {
    int q = 0;
    std::vector<std::vector<double>> boundaries; // per dimension, q-1 ascending cut points

    std::size_t dims() const { return boundaries.size(); }
};

// Quantile by linear interpolation between order statistics: position
// (n-1)*p in the sorted sample.
inline double interpolated_quantile(const std::vector<double>& sorted, double p) {
    const double pos = static_cast<double>(sorted.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline QuantizerTable fit_quantizer(const std::vector<FeatureVector>& calibration, int q) {
    if (q < 2) throw std::invalid_argument("fit_quantizer: q must be >= 2");
    if (calibration.empty()) throw std::invalid_argument("fit_quantizer: empty calibration set");
    const std::size_t dims = calibration.front().size();
    for (const auto& v : calibration)
        if (v.size() != dims) throw std::invalid_argument("fit_quantizer: inconsistent dimensions");

    QuantizerTable t;
    t.q = q;
    t.boundaries.resize(dims);
    std::vector<double> column(calibration.size());
    for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t i = 0; i < calibration.size(); ++i) column[i] = calibration[i][d];
        std::sort(column.begin(), column.end());
        std::size_t ndistinct = 1;
        for (std::size_t i = 1; i < column.size(); ++i)
            if (column[i] != column[i - 1]) ++ndistinct;
        if (ndistinct < static_cast<std::size_t>(q))
            throw std::runtime_error("fit_quantizer: dimension " + std::to_string(d) + " has only " +
                                     std::to_string(ndistinct) + " distinct values (need >= " +
                                     std::to_string(q) + ")");
        auto& cuts = t.boundaries[d];
        cuts.resize(static_cast<std::size_t>(q - 1));
        for (int j = 1; j < q; ++j)
            cuts[static_cast<std::size_t>(j - 1)] =
                interpolated_quantile(column, static_cast<double>(j) / q);
    }
    return t;
}

// Label = 1 + number of cut points at or below the value, so a value
// exactly on a boundary lands in the upper interval and out-of-range
// values clamp to the end intervals.
inline int quantize_value(const std::vector<double>& cuts, double value) {
    if (std::isnan(value)) throw std::invalid_argument("quantize: NaN input");
    const auto it = std::upper_bound(cuts.begin(), cuts.end(), value,
                                     [](double v, double cut) { return v < cut; });
    return 1 + static_cast<int>(it - cuts.begin());
}

inline QuantizedVector quantize(const QuantizerTable& t, const FeatureVector& v) {
    if (v.size() != t.dims()) throw std::invalid_argument("quantize: dimension mismatch");
    QuantizedVector z(v.size());
    for (std::size_t d = 0; d < v.size(); ++d) z[d] = quantize_value(t.boundaries[d], v[d]);
    return z;
}

// ---- quantizer table file (versioned JSON) ----

inline void save_quantizer(const QuantizerTable& t, std::ostream& out) {
    nlohmann::json j;
    j["version"] = 1;
    j["q"] = t.q;
    j["boundaries"] = t.boundaries;
    out << std::setprecision(17) << j.dump() << "\n";
}

inline void save_quantizer(const QuantizerTable& t, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open quantizer file for writing: " + path);
    save_quantizer(t, f);
}

inline QuantizerTable load_quantizer(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("quantizer table: parse error: ") + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw std::runtime_error("quantizer table: unsupported version");
    QuantizerTable t;
    t.q = j.at("q").get<int>();
    t.boundaries = j.at("boundaries").get<std::vector<std::vector<double>>>();
    for (const auto& cuts : t.boundaries)
        if (static_cast<int>(cuts.size()) != t.q - 1)
            throw std::runtime_error("quantizer table: boundary count mismatch");
    return t;
}

inline QuantizerTable load_quantizer(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open quantizer file: " + path);
    return load_quantizer(f);
}

} // namespace biokey
