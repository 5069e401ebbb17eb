#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/bitvec.hpp"
#include "biokey/prng.hpp"
#include "biokey/quantizer.hpp"

namespace biokey {

enum class TemplateStage { Lssc, Permuted, Masked };

// 512*m-bit biometric template, tagged with its pipeline stage.
struct BinaryTemplate {
    BitVector bits;
    TemplateStage stage = TemplateStage::Lssc;
};

struct PipelineConfig {
    int q = 4;
    std::uint64_t perm_seed = 0;
    std::uint64_t mask_seed = 0;
    double kappa = 0.0;
    double tau = 0.0;           // fraction of template length
    double quantile = 0.95;

    int m() const { return q - 1; }

    void validate() const {
        if (q < 2) throw std::invalid_argument("PipelineConfig: q must be >= 2");
        if (!(kappa >= 0.0 && kappa <= 1.0))
            throw std::invalid_argument("PipelineConfig: kappa must lie in [0,1]");
        if (!(tau >= 0.0 && tau <= 1.0))
            throw std::invalid_argument("PipelineConfig: tau must lie in [0,1]");
        if (!(quantile > 0.0 && quantile < 1.0))
            throw std::invalid_argument("PipelineConfig: quantile must lie in (0,1)");
    }
};

// LSSC: label k maps to k-1 ones followed by q-k zeros, so the bit-level
// Hamming distance between two codes equals |k - k'|.
inline BinaryTemplate lssc_encode(const QuantizedVector& z, int q) {
    const int m = q - 1;
    BinaryTemplate t;
    t.stage = TemplateStage::Lssc;
    t.bits = BitVector(z.size() * static_cast<std::size_t>(m));
    for (std::size_t d = 0; d < z.size(); ++d) {
        const int label = z[d];
        if (label < 1 || label > q)
            throw std::invalid_argument("lssc_encode: label out of range at dimension " +
                                        std::to_string(d));
        for (int b = 0; b < label - 1; ++b)
            t.bits.set(d * static_cast<std::size_t>(m) + static_cast<std::size_t>(b), true);
    }
    return t;
}

// Fisher-Yates permutation of all bit positions, driven by SplitMix64
// seeded with phi. The permutation itself is deterministic and never
// stored; only the seed is persisted.
inline std::vector<std::size_t> permutation_of(std::size_t len, std::uint64_t phi) {
    std::vector<std::size_t> perm(len);
    for (std::size_t i = 0; i < len; ++i) perm[i] = i;
    SplitMix64 rng(phi);
    for (std::size_t i = len; i-- > 1;) {
        const std::size_t j = rng.below(i + 1);
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

inline BinaryTemplate permute(const BinaryTemplate& t, std::uint64_t phi) {
    if (t.stage != TemplateStage::Lssc)
        throw std::invalid_argument("permute: expected a template at the lssc stage");
    const auto perm = permutation_of(t.bits.size(), phi);
    BinaryTemplate out;
    out.stage = TemplateStage::Permuted;
    out.bits = BitVector(t.bits.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        if (t.bits.get(i)) out.bits.set(perm[i], true);
    return out;
}

inline BinaryTemplate unpermute(const BinaryTemplate& t, std::uint64_t phi) {
    if (t.stage != TemplateStage::Permuted)
        throw std::invalid_argument("unpermute: expected a template at the permuted stage");
    const auto perm = permutation_of(t.bits.size(), phi);
    BinaryTemplate out;
    out.stage = TemplateStage::Lssc;
    out.bits = BitVector(t.bits.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        if (t.bits.get(perm[i])) out.bits.set(i, true);
    return out;
}

struct MaskBits {
    BitVector bits;
    double kappa = 0.0;
    std::uint64_t seed = 0;
};

// Bit i is 1 iff u_i > kappa, with u drawn from the seeded PRNG. Masks
// for different kappa under the same seed are nested (thresholds of one
// u vector), which makes the kappa search monotone.
inline MaskBits gen_mask(double kappa, std::uint64_t seed, std::size_t length) {
    if (!(kappa >= 0.0 && kappa <= 1.0))
        throw std::invalid_argument("gen_mask: kappa must lie in [0,1]");
    MaskBits r;
    r.kappa = kappa;
    r.seed = seed;
    r.bits = BitVector(length);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < length; ++i)
        if (rng.uniform() > kappa) r.bits.set(i, true);
    return r;
}

inline BinaryTemplate apply_mask(const BinaryTemplate& t, const MaskBits& r) {
    if (t.bits.size() != r.bits.size())
        throw std::invalid_argument("apply_mask: length mismatch");
    BinaryTemplate out;
    out.stage = TemplateStage::Masked;
    out.bits = t.bits & r.bits;
    return out;
}

// Bisection for the kappa whose mask brings the (1 - quantile) empirical
// percentile of masked inter-class distance down to tau. Distances and
// tau are fractions of the template length; the match tolerance is 0.5%
// of the length.
inline double search_kappa(const std::vector<std::pair<BitVector, BitVector>>& inter_class_pairs,
                           double tau, double quantile, std::uint64_t mask_seed) {
    if (inter_class_pairs.empty())
        throw std::invalid_argument("search_kappa: empty pair sample");
    const std::size_t len = inter_class_pairs.front().first.size();
    const double tol = 0.005;

    auto percentile_at = [&](double kappa) {
        const MaskBits mask = gen_mask(kappa, mask_seed, len);
        std::vector<double> dist;
        dist.reserve(inter_class_pairs.size());
        for (const auto& [a, b] : inter_class_pairs) {
            const std::size_t d = ((a ^ b) & mask.bits).popcount();
            dist.push_back(static_cast<double>(d) / static_cast<double>(len));
        }
        std::sort(dist.begin(), dist.end());
        return interpolated_quantile(dist, 1.0 - quantile);
    };

    const double at_zero = percentile_at(0.0);
    if (at_zero < tau - tol)
        throw std::runtime_error("search_kappa: tau unreachable; unmasked percentile is " +
                                 std::to_string(at_zero) + ", achievable range is [0, " +
                                 std::to_string(at_zero) + "]");
    if (at_zero <= tau + tol) return 0.0;

    // run the bisection to convergence: the early-stop tolerance above is
    // far looser than the quantile accuracy the calibration needs
    double lo = 0.0, hi = 1.0; // percentile(lo) > tau, percentile(hi) = 0 <= tau
    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (percentile_at(mid) > tau)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Full transformation: quantize, LSSC-binarize, permute, mask.
inline BinaryTemplate transform(const FeatureVector& v, const PipelineConfig& cfg,
                                const QuantizerTable& table, const MaskBits& mask) {
    cfg.validate();
    if (table.q != cfg.q) throw std::invalid_argument("transform: quantizer q does not match config");
    const QuantizedVector z = quantize(table, v);
    const BinaryTemplate lssc = lssc_encode(z, cfg.q);
    const BinaryTemplate perm = permute(lssc, cfg.perm_seed);
    return apply_mask(perm, mask);
}

} // namespace biokey
