#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace biokey {

// ---- key-retrieval rate curves ----

// One trial's per-iteration success profile: `success_iteration` is the
// first iteration at which the full key was recovered (hash verified),
// or -1 when the trial never succeeds.
struct TrialOutcome {
    int success_iteration = -1;
};

struct GmrFmrCurves {
    std::vector<double> gmr; // per iteration 1..I
    std::vector<double> fmr;
    double gmr_at_zero_fmr = 0.0;
    int gmr_at_zero_fmr_iteration = 0; // 0 when no iteration has empirical FMR == 0
    std::size_t mated_trials = 0;
    std::size_t nonmated_trials = 0;
};

inline GmrFmrCurves gmr_fmr(const std::vector<TrialOutcome>& mated,
                            const std::vector<TrialOutcome>& nonmated, int iterations) {
    if (mated.empty() || nonmated.empty())
        throw std::invalid_argument("gmr_fmr: empty trial sets");
    GmrFmrCurves c;
    c.mated_trials = mated.size();
    c.nonmated_trials = nonmated.size();
    c.gmr.resize(static_cast<std::size_t>(iterations));
    c.fmr.resize(static_cast<std::size_t>(iterations));
    for (int i = 1; i <= iterations; ++i) {
        std::size_t gm = 0, fm = 0;
        for (const auto& t : mated)
            if (t.success_iteration >= 1 && t.success_iteration <= i) ++gm;
        for (const auto& t : nonmated)
            if (t.success_iteration >= 1 && t.success_iteration <= i) ++fm;
        c.gmr[static_cast<std::size_t>(i - 1)] = static_cast<double>(gm) / mated.size();
        c.fmr[static_cast<std::size_t>(i - 1)] = static_cast<double>(fm) / nonmated.size();
    }
    for (int i = 1; i <= iterations; ++i) {
        if (c.fmr[static_cast<std::size_t>(i - 1)] == 0.0 &&
            c.gmr[static_cast<std::size_t>(i - 1)] > c.gmr_at_zero_fmr) {
            c.gmr_at_zero_fmr = c.gmr[static_cast<std::size_t>(i - 1)];
            c.gmr_at_zero_fmr_iteration = i;
        }
    }
    return c;
}

// ---- distribution statistics ----

struct ScoreStats {
    std::vector<double> mated;
    std::vector<double> nonmated;

    double mean_mated() const { return mean(mated); }
    double mean_nonmated() const { return mean(nonmated); }
    double std_mated() const { return stddev(mated); }
    double std_nonmated() const { return stddev(nonmated); }

    static double mean(const std::vector<double>& v) {
        if (v.empty()) throw std::invalid_argument("ScoreStats: empty score list");
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    }

    static double stddev(const std::vector<double>& v) {
        const double mu = mean(v);
        double s = 0.0;
        for (double x : v) s += (x - mu) * (x - mu);
        return std::sqrt(s / static_cast<double>(v.size()));
    }
};

inline double decidability(const ScoreStats& stats) {
    const double sm = stats.std_mated(), snm = stats.std_nonmated();
    const double pooled = 0.5 * (sm * sm + snm * snm);
    if (!(pooled > 0.0))
        throw std::runtime_error("decidability: zero pooled variance, d' undefined");
    return std::abs(stats.mean_mated() - stats.mean_nonmated()) / std::sqrt(pooled);
}

// ---- entropy and security strengths ----

inline double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// DOF = E(1-E)/V^2 of the non-mated fractional-distance distribution.
inline double dof(double e_hd, double v_hd) {
    if (!(e_hd > 0.0 && e_hd < 1.0)) throw std::invalid_argument("dof: E_HD must lie in (0,1)");
    if (!(v_hd > 0.0)) throw std::invalid_argument("dof: V_HD must be > 0");
    return e_hd * (1.0 - e_hd) / (v_hd * v_hd);
}

// H = DOF * h2(E_HD) bits under the i.i.d. binomial approximation.
inline double entropy_iid(double degrees, double e_hd) {
    if (!(degrees > 0.0)) throw std::invalid_argument("entropy_iid: DOF must be > 0");
    if (!(e_hd > 0.0 && e_hd < 1.0))
        throw std::invalid_argument("entropy_iid: E_HD must lie in (0,1)");
    return degrees * binary_entropy(e_hd);
}

namespace detail {

inline double log2_binomial(double n, double k) {
    return (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) /
           std::log(2.0);
}

} // namespace detail

// s = log2(2^H / sum_{i<=t} C(H,i)), evaluated in log space. H is
// rounded to the nearest integer for the binomial sum.
inline double sphere_packing_strength(double entropy_bits, double t) {
    const double n = std::round(entropy_bits);
    if (t < 0.0 || t > n)
        throw std::invalid_argument("sphere_packing_strength: need 0 <= t <= H");
    // log2 of the Hamming-ball volume via log-sum-exp over log-binomials
    double max_term = -std::numeric_limits<double>::infinity();
    const int tt = static_cast<int>(std::floor(t));
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(tt) + 1);
    for (int i = 0; i <= tt; ++i) {
        const double term = detail::log2_binomial(n, i);
        terms.push_back(term);
        max_term = std::max(max_term, term);
    }
    double acc = 0.0;
    for (double term : terms) acc += std::exp2(term - max_term);
    const double log_ball = max_term + std::log2(acc);
    return entropy_bits - log_ball;
}

// Gilbert-Varshamov lower-bound exponent: s = H * (1 - h2(d/H)).
inline double gv_strength(double entropy_bits, double d) {
    if (!(entropy_bits > 0.0)) throw std::invalid_argument("gv_strength: H must be > 0");
    const double ratio = d / entropy_bits;
    if (ratio < 0.0 || ratio > 0.5)
        throw std::invalid_argument("gv_strength: need 0 <= d/H <= 0.5");
    return entropy_bits * (1.0 - binary_entropy(ratio));
}

inline double system_strength(double key_bits, double s_bits) {
    return std::min(key_bits, s_bits);
}

struct SecurityReport {
    double tolerated_bits = 0.0; // t (sphere packing) or d (GV)
    double entropy_bits = 0.0;
    double s_sphere = 0.0;
    double s_gv = 0.0;
    double key_bits = 0.0;
    double h_sys_sphere = 0.0;
    double h_sys_gv = 0.0;
};

inline SecurityReport security_report(double entropy_bits, double tolerated_bits, int m) {
    SecurityReport r;
    r.entropy_bits = entropy_bits;
    r.tolerated_bits = tolerated_bits;
    r.key_bits = 100.0 * m;
    r.s_sphere = sphere_packing_strength(entropy_bits, tolerated_bits);
    r.s_gv = gv_strength(entropy_bits, tolerated_bits);
    r.h_sys_sphere = system_strength(r.key_bits, r.s_sphere);
    r.h_sys_gv = system_strength(r.key_bits, r.s_gv);
    return r;
}

// ---- unlinkability ----

struct LinkabilityReport {
    std::vector<double> score_grid;  // bin centers
    std::vector<double> d_local;     // D<->(s) per bin
    double d_sys = 0.0;
    double omega = 1.0;
    double bin_width = 0.0;
};

// Histogram-density estimate of the local and global linkability
// measures. Bins where the non-mated density is zero but the mated
// density is not give D<->(s) = 1 (infinite likelihood ratio).
inline LinkabilityReport unlinkability(const std::vector<double>& mated_scores,
                                       const std::vector<double>& nonmated_scores, int bins = 100,
                                       double omega = 1.0) {
    if (mated_scores.empty() || nonmated_scores.empty())
        throw std::invalid_argument("unlinkability: empty score sets");
    if (bins < 1) throw std::invalid_argument("unlinkability: bins must be >= 1");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double s : mated_scores) { lo = std::min(lo, s); hi = std::max(hi, s); }
    for (double s : nonmated_scores) { lo = std::min(lo, s); hi = std::max(hi, s); }
    if (lo == hi) { // all scores identical: a single degenerate bin
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / bins;

    auto histogram = [&](const std::vector<double>& scores) {
        std::vector<double> dens(static_cast<std::size_t>(bins), 0.0);
        for (double s : scores) {
            int b = static_cast<int>((s - lo) / width);
            b = std::clamp(b, 0, bins - 1);
            dens[static_cast<std::size_t>(b)] += 1.0;
        }
        const double norm = static_cast<double>(scores.size()) * width;
        for (double& d : dens) d /= norm;
        return dens;
    };
    const auto pm = histogram(mated_scores);
    const auto pnm = histogram(nonmated_scores);

    LinkabilityReport rep;
    rep.omega = omega;
    rep.bin_width = width;
    rep.score_grid.resize(static_cast<std::size_t>(bins));
    rep.d_local.resize(static_cast<std::size_t>(bins));
    double dsys = 0.0;
    for (int b = 0; b < bins; ++b) {
        rep.score_grid[static_cast<std::size_t>(b)] = lo + (b + 0.5) * width;
        double dlocal;
        if (pm[static_cast<std::size_t>(b)] == 0.0) {
            dlocal = 0.0;
        } else if (pnm[static_cast<std::size_t>(b)] == 0.0) {
            dlocal = 1.0;
        } else {
            const double lr_w = pm[static_cast<std::size_t>(b)] / pnm[static_cast<std::size_t>(b)] * omega;
            dlocal = lr_w <= 1.0 ? 0.0 : 2.0 * lr_w / (1.0 + lr_w) - 1.0;
        }
        rep.d_local[static_cast<std::size_t>(b)] = dlocal;
        dsys += pm[static_cast<std::size_t>(b)] * dlocal * width;
    }
    rep.d_sys = dsys;
    return rep;
}

// ---- report emitters ----

inline void write_gmr_fmr_csv(const GmrFmrCurves& c, std::ostream& out) {
    out << "iter,gmr,fmr\n";
    for (std::size_t i = 0; i < c.gmr.size(); ++i)
        out << (i + 1) << "," << std::setprecision(10) << c.gmr[i] << "," << c.fmr[i] << "\n";
}

inline void write_linkability_csv(const LinkabilityReport& rep, std::ostream& out) {
    out << "score,d_local\n";
    for (std::size_t i = 0; i < rep.score_grid.size(); ++i)
        out << std::setprecision(10) << rep.score_grid[i] << "," << rep.d_local[i] << "\n";
}

struct ScalarReport {
    double d_prime = 0.0;
    double degrees_of_freedom = 0.0;
    double entropy_bits = 0.0;
    double s_sphere = 0.0;
    double s_gv = 0.0;
    double h_sys = 0.0;
    double d_sys = 0.0;
};

inline void write_scalar_report_json(const ScalarReport& r, std::ostream& out) {
    nlohmann::json j;
    j["d_prime"] = r.d_prime;
    j["dof"] = r.degrees_of_freedom;
    j["H"] = r.entropy_bits;
    j["s_sphere"] = r.s_sphere;
    j["s_gv"] = r.s_gv;
    j["h_sys"] = r.h_sys;
    j["d_sys"] = r.d_sys;
    out << std::setprecision(17) << j.dump(2) << "\n";
}

} // namespace biokey
