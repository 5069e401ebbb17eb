#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/bitvec.hpp"
#include "biokey/decoder.hpp"
#include "biokey/generator.hpp"
#include "biokey/parity_check.hpp"
#include "biokey/prng.hpp"
#include "biokey/util.hpp"

namespace biokey {

// Flip each bit independently with probability p, using the derived
// per-stream PRNG so that parallel and serial runs agree bit-exactly.
inline BitVector bsc_flip(const BitVector& bits, double p, SplitMix64& stream) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bsc_flip: p must lie in [0,1]");
    BitVector out = bits;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (stream.uniform() < p) out.flip(i);
    return out;
}

struct BscSampler {
    double p;
    std::uint64_t seed;

    BitVector flip(const BitVector& bits, std::uint64_t stream_index) const {
        SplitMix64 stream = derive_stream(seed, stream_index);
        return bsc_flip(bits, p, stream);
    }
};

// Synthetic biometric population: per subject an anchor template drawn
// uniformly, mated samples at flip rate p_m from the anchor, and
// non-mated counterpart templates at pairwise flip rate p_nm. The rates
// stand in for the post-mask operating statistics of a real deployment.
struct SynthConfig {
    int subjects = 100;
    int samples_per_subject = 2;
    std::size_t template_len = 1536;
    double p_mated = 0.156;
    double p_nonmated = 0.26;
    std::uint64_t seed = 1;

    void validate() const {
        if (subjects < 1 || samples_per_subject < 1 || template_len == 0)
            throw std::invalid_argument("SynthConfig: counts must be positive");
        if (!(p_mated >= 0.0 && p_mated < p_nonmated && p_nonmated <= 0.5))
            throw std::invalid_argument("SynthConfig: need 0 <= p_mated < p_nonmated <= 0.5");
    }
};

struct SynthPopulation {
    SynthConfig cfg;
    // samples[subject][sample]: sample 0 is the anchor
    std::vector<std::vector<BitVector>> samples;
};

inline SynthPopulation synth_population(const SynthConfig& cfg) {
    cfg.validate();
    SynthPopulation pop;
    pop.cfg = cfg;
    pop.samples.resize(static_cast<std::size_t>(cfg.subjects));
    for (int s = 0; s < cfg.subjects; ++s) {
        SplitMix64 rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(s));
        auto& subject = pop.samples[static_cast<std::size_t>(s)];
        subject.push_back(BitVector::random(cfg.template_len, rng));
        for (int i = 1; i < cfg.samples_per_subject; ++i)
            subject.push_back(bsc_flip(subject.front(), cfg.p_mated, rng));
    }
    return pop;
}

// Non-mated counterpart for pair index `idx`: a template at pairwise
// flip rate p_nm from `base`. Deterministic per (population seed, idx).
inline BitVector synth_nonmated_counterpart(const SynthPopulation& pop, const BitVector& base,
                                            std::uint64_t idx) {
    SplitMix64 rng = derive_stream(pop.cfg.seed ^ 0xC0FFEE123456789AULL, idx);
    return bsc_flip(base, pop.cfg.p_nonmated, rng);
}

struct FerPoint {
    double p;
    std::uint64_t frames;
    std::uint64_t errors;
    double fer;
};

struct FerReport {
    std::string decoder_id;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<FerPoint> points;
};

// Monte Carlo frame error rate: encode random messages, flip at p,
// decode, count frames whose decoded info bits differ from the message.
// Frames use derived per-frame streams, so the counts are independent of
// the worker count.
// `frame_offset` shifts the per-frame stream indices, so a run of N
// frames can be split into disjoint chunks whose pooled counts equal the
// full run exactly.
inline FerReport monte_carlo_fer(const ParityCheck& h, const TannerGraph& g,
                                 const GeneratorMatrix& gen, const DecoderParams& params,
                                 const std::vector<double>& p_list, std::uint64_t frames,
                                 std::uint64_t seed, unsigned threads = 1,
                                 std::uint64_t frame_offset = 0) {
    if (frames < 1) throw std::invalid_argument("monte_carlo_fer: frames must be >= 1");
    FerReport report;
    report.decoder_id = to_string(params.variant);
    report.iterations = params.iterations;
    report.seed = seed;
    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
        const double p = p_list[pi];
        // LLR channel parameter: the sweep grid may include the exact
        // endpoints 0 and 0.5, which ChannelConfig rejects
        const double llr_p = std::min(std::max(p, 1e-9), 0.499999);
        std::vector<std::uint8_t> frame_error(frames, 0);
        parallel_for(frames, threads, [&](std::size_t f) {
            SplitMix64 stream =
                derive_stream(seed, (static_cast<std::uint64_t>(pi) << 40) | (frame_offset + f));
            BitVector msg = BitVector::random(static_cast<std::size_t>(gen.k), stream);
            const BitVector cw = encode(gen, msg);
            const BitVector received = bsc_flip(cw, p, stream);
            const DecodeResult res = decode(h, g, init_llr(received, ChannelConfig(llr_p)), params);
            if (extract_message(gen, res.bits) != msg) frame_error[f] = 1;
        });
        std::uint64_t errors = 0;
        for (std::uint8_t e : frame_error) errors += e;
        report.points.push_back(
            {p, frames, errors, static_cast<double>(errors) / static_cast<double>(frames)});
    }
    return report;
}

inline void write_fer_csv(const FerReport& report, std::ostream& out) {
    out << "decoder,p,frames,errors,fer,iterations,seed\n";
    for (const auto& pt : report.points) {
        std::ostringstream row;
        row << report.decoder_id << "," << std::setprecision(10) << pt.p << "," << pt.frames << ","
            << pt.errors << "," << std::setprecision(10) << pt.fer << "," << report.iterations << ","
            << report.seed;
        out << row.str() << "\n";
    }
}

inline void write_fer_csv(const FerReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open FER report for writing: " + path);
    write_fer_csv(report, f);
}

} // namespace biokey
