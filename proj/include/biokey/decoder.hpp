#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/bitvec.hpp"
#include "biokey/parity_check.hpp"

#include "json.hpp"

namespace biokey {

enum class DecoderVariant { SP, MS, NMS, OMS, NeuralMS };
enum class ParamMode { SharedPerIteration, PerEdge };

inline std::string to_string(DecoderVariant v) {
    switch (v) {
        case DecoderVariant::SP: return "sp";
        case DecoderVariant::MS: return "ms";
        case DecoderVariant::NMS: return "nms";
        case DecoderVariant::OMS: return "oms";
        case DecoderVariant::NeuralMS: return "neural-ms";
    }
    return "?";
}

inline DecoderVariant variant_from_string(const std::string& s) {
    if (s == "sp") return DecoderVariant::SP;
    if (s == "ms") return DecoderVariant::MS;
    if (s == "nms") return DecoderVariant::NMS;
    if (s == "oms") return DecoderVariant::OMS;
    if (s == "neural-ms") return DecoderVariant::NeuralMS;
    throw std::invalid_argument("unknown decoder variant: " + s);
}

struct ChannelConfig {
    double p; // crossover probability, 0 < p < 0.5

    explicit ChannelConfig(double crossover) : p(crossover) {
        if (!(p > 0.0 && p < 0.5))
            throw std::invalid_argument("ChannelConfig: p must lie in (0, 0.5)");
    }

    double llr_magnitude() const { return std::log((1.0 - p) / p); }
};

using LlrVector = std::vector<double>;

// l_v = (1 - 2 y_v) * ln((1-p)/p): positive means bit 0.
inline LlrVector init_llr(const BitVector& received, const ChannelConfig& ch) {
    const double mag = ch.llr_magnitude();
    LlrVector llr(received.size());
    for (std::size_t i = 0; i < received.size(); ++i)
        llr[i] = received.get(i) ? -mag : mag;
    return llr;
}

// alpha/beta layout: empty for SP/MS; per-iteration scalars in shared
// mode; iterations x edge_count in per-edge mode (iteration-major).
struct DecoderParams {
    DecoderVariant variant = DecoderVariant::MS;
    int iterations = 1;
    ParamMode mode = ParamMode::SharedPerIteration;
    std::vector<double> alpha;
    std::vector<double> beta;

    static DecoderParams plain(DecoderVariant v, int iterations) {
        DecoderParams p;
        p.variant = v;
        p.iterations = iterations;
        if (v == DecoderVariant::NMS || v == DecoderVariant::OMS || v == DecoderVariant::NeuralMS) {
            p.alpha.assign(static_cast<std::size_t>(iterations), 1.0);
            p.beta.assign(static_cast<std::size_t>(iterations), 0.0);
        }
        return p;
    }

    bool parameterized() const {
        return variant == DecoderVariant::NMS || variant == DecoderVariant::OMS ||
               variant == DecoderVariant::NeuralMS;
    }

    void validate(std::size_t edge_count) const {
        if (iterations < 1) throw std::invalid_argument("DecoderParams: iterations must be >= 1");
        if (!parameterized()) {
            if (!alpha.empty() || !beta.empty())
                throw std::invalid_argument("DecoderParams: SP/MS carry no alpha/beta");
            return;
        }
        const std::size_t expect = mode == ParamMode::SharedPerIteration
                                       ? static_cast<std::size_t>(iterations)
                                       : static_cast<std::size_t>(iterations) * edge_count;
        if (alpha.size() != expect || beta.size() != expect)
            throw std::invalid_argument("DecoderParams: alpha/beta length does not match graph");
        for (double a : alpha)
            if (!(a > 0.0)) throw std::invalid_argument("DecoderParams: alpha must be > 0");
        for (double b : beta)
            if (!(b >= 0.0)) throw std::invalid_argument("DecoderParams: beta must be >= 0");
        if (variant == DecoderVariant::NMS)
            for (double b : beta)
                if (b != 0.0) throw std::invalid_argument("DecoderParams: NMS requires beta == 0");
        if (variant == DecoderVariant::OMS)
            for (double a : alpha)
                if (a != 1.0) throw std::invalid_argument("DecoderParams: OMS requires alpha == 1");
    }

    double alpha_at(int iter, int edge, std::size_t edge_count) const {
        if (alpha.empty()) return 1.0;
        return mode == ParamMode::SharedPerIteration
                   ? alpha[static_cast<std::size_t>(iter)]
                   : alpha[static_cast<std::size_t>(iter) * edge_count + static_cast<std::size_t>(edge)];
    }

    double beta_at(int iter, int edge, std::size_t edge_count) const {
        if (beta.empty()) return 0.0;
        return mode == ParamMode::SharedPerIteration
                   ? beta[static_cast<std::size_t>(iter)]
                   : beta[static_cast<std::size_t>(iter) * edge_count + static_cast<std::size_t>(edge)];
    }
};

struct DecodeResult {
    BitVector bits;
    int iterations_used = 0;
    bool converged = false;
    std::vector<BitVector> per_iteration_bits; // filled only when requested
};

// Incoming magnitudes are clamped to 30 before tanh so the atanh of the
// product stays finite.
inline constexpr double kSpClamp = 30.0;

// Single check-to-variable message from the extrinsic incoming set
// N(c)\v. Reference semantics for all five variants; the decode engine
// below computes the same values with per-check prefix passes.
inline double cn_update(DecoderVariant variant, std::span<const double> incoming, double alpha = 1.0,
                        double beta = 0.0) {
    if (incoming.empty())
        throw std::invalid_argument("cn_update: empty incoming set");
    if (variant == DecoderVariant::SP) {
        double prod = 1.0;
        for (double x : incoming) {
            const double c = std::clamp(x, -kSpClamp, kSpClamp);
            prod *= std::tanh(c / 2.0);
        }
        return 2.0 * std::atanh(prod);
    }
    double sign = 1.0;
    double minmag = std::numeric_limits<double>::infinity();
    for (double x : incoming) {
        if (x < 0.0) sign = -sign;
        minmag = std::min(minmag, std::abs(x));
    }
    switch (variant) {
        case DecoderVariant::MS: return sign * minmag;
        case DecoderVariant::NMS: return alpha * sign * minmag;
        case DecoderVariant::OMS: return sign * std::max(minmag - beta, 0.0);
        case DecoderVariant::NeuralMS: return sign * std::max(alpha * minmag - beta, 0.0);
        default: break;
    }
    throw std::logic_error("cn_update: unreachable");
}

// Variable-to-check message: channel LLR plus extrinsic check messages.
inline double vn_update(double channel_llr, std::span<const double> incoming) {
    double s = channel_llr;
    for (double x : incoming) s += x;
    return s;
}

namespace detail {

inline bool hard_bit(double s) {
    return s < 0.0; // sgn(0) treated as +1, i.e. bit 0
}

} // namespace detail

// Flooding-schedule message passing. c2v starts at 0, so the first vn
// pass sends the raw channel LLRs.
inline DecodeResult decode(const ParityCheck& h, const TannerGraph& g, const LlrVector& llr,
                           const DecoderParams& params, bool early_exit = true,
                           bool record_snapshots = false) {
    if (static_cast<int>(llr.size()) != h.n)
        throw std::invalid_argument("decode: llr length != n");
    params.validate(g.edge_count());

    const std::size_t ne = g.edge_count();
    std::vector<double> v2c(ne, 0.0), c2v(ne, 0.0), s(static_cast<std::size_t>(h.n), 0.0);

    DecodeResult result;
    for (int iter = 0; iter < params.iterations; ++iter) {
        // vn pass: v2c_e = l_v + sum of c2v over N(v) minus the edge itself
        for (int v = 0; v < h.n; ++v) {
            double total = llr[static_cast<std::size_t>(v)];
            for (int e : g.var_edges[static_cast<std::size_t>(v)]) total += c2v[static_cast<std::size_t>(e)];
            s[static_cast<std::size_t>(v)] = total;
            for (int e : g.var_edges[static_cast<std::size_t>(v)])
                v2c[static_cast<std::size_t>(e)] = total - c2v[static_cast<std::size_t>(e)];
        }
        // cn pass
        if (params.variant == DecoderVariant::SP) {
            for (int c = 0; c < h.r; ++c) {
                const auto& edges = g.check_edges[static_cast<std::size_t>(c)];
                const std::size_t deg = edges.size();
                if (deg == 0) continue;
                // prefix/suffix products of tanh(v2c/2), so each edge gets
                // the product excluding itself without dividing
                std::vector<double> t(deg);
                for (std::size_t i = 0; i < deg; ++i) {
                    const double x = std::clamp(v2c[static_cast<std::size_t>(edges[i])], -kSpClamp, kSpClamp);
                    t[i] = std::tanh(x / 2.0);
                }
                std::vector<double> pre(deg + 1, 1.0), suf(deg + 1, 1.0);
                for (std::size_t i = 0; i < deg; ++i) pre[i + 1] = pre[i] * t[i];
                for (std::size_t i = deg; i-- > 0;) suf[i] = suf[i + 1] * t[i];
                for (std::size_t i = 0; i < deg; ++i)
                    c2v[static_cast<std::size_t>(edges[i])] = 2.0 * std::atanh(pre[i] * suf[i + 1]);
            }
        } else {
            const bool per_edge = params.mode == ParamMode::PerEdge;
            for (int c = 0; c < h.r; ++c) {
                const auto& edges = g.check_edges[static_cast<std::size_t>(c)];
                const std::size_t deg = edges.size();
                if (deg == 0) continue;
                // track the two smallest magnitudes and the overall sign
                double min1 = std::numeric_limits<double>::infinity();
                double min2 = std::numeric_limits<double>::infinity();
                std::size_t min1_idx = 0;
                double sign_all = 1.0;
                for (std::size_t i = 0; i < deg; ++i) {
                    const double x = v2c[static_cast<std::size_t>(edges[i])];
                    if (x < 0.0) sign_all = -sign_all;
                    const double a = std::abs(x);
                    if (a < min1) {
                        min2 = min1;
                        min1 = a;
                        min1_idx = i;
                    } else if (a < min2) {
                        min2 = a;
                    }
                }
                for (std::size_t i = 0; i < deg; ++i) {
                    const double x = v2c[static_cast<std::size_t>(edges[i])];
                    const double extr_sign = x < 0.0 ? -sign_all : sign_all;
                    const double extr_min = i == min1_idx ? min2 : min1;
                    double out;
                    const double a = per_edge || params.parameterized()
                                         ? params.alpha_at(iter, edges[i], ne)
                                         : 1.0;
                    const double b = per_edge || params.parameterized()
                                         ? params.beta_at(iter, edges[i], ne)
                                         : 0.0;
                    switch (params.variant) {
                        case DecoderVariant::MS: out = extr_sign * extr_min; break;
                        case DecoderVariant::NMS: out = a * extr_sign * extr_min; break;
                        case DecoderVariant::OMS:
                            out = extr_sign * std::max(extr_min - b, 0.0);
                            break;
                        default:
                            out = extr_sign * std::max(a * extr_min - b, 0.0);
                            break;
                    }
                    c2v[static_cast<std::size_t>(edges[i])] = out;
                }
            }
        }
        // aggregate s_v over the full neighborhood and take hard decisions
        BitVector hard(static_cast<std::size_t>(h.n));
        for (int v = 0; v < h.n; ++v) {
            double total = llr[static_cast<std::size_t>(v)];
            for (int e : g.var_edges[static_cast<std::size_t>(v)]) total += c2v[static_cast<std::size_t>(e)];
            s[static_cast<std::size_t>(v)] = total;
            if (detail::hard_bit(total)) hard.set(static_cast<std::size_t>(v), true);
        }
        if (record_snapshots) result.per_iteration_bits.push_back(hard);
        result.bits = std::move(hard);
        result.iterations_used = iter + 1;
        if (early_exit && syndrome(h, result.bits).popcount() == 0) {
            result.converged = true;
            return result;
        }
    }
    result.converged = syndrome(h, result.bits).popcount() == 0;
    return result;
}

inline DecodeResult decode(const ParityCheck& h, const LlrVector& llr, const DecoderParams& params,
                           bool early_exit = true, bool record_snapshots = false) {
    return decode(h, tanner_graph(h), llr, params, early_exit, record_snapshots);
}

// ---- decoder-parameter file (versioned JSON) ----

inline void save_params(const DecoderParams& params, std::ostream& out) {
    nlohmann::json j;
    j["version"] = 1;
    j["variant"] = to_string(params.variant);
    j["mode"] = params.mode == ParamMode::SharedPerIteration ? "shared" : "per-edge";
    j["iterations"] = params.iterations;
    j["alpha"] = params.alpha;
    j["beta"] = params.beta;
    out << std::setprecision(17) << j.dump(2) << "\n";
}

inline void save_params(const DecoderParams& params, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open params file for writing: " + path);
    save_params(params, f);
}

inline DecoderParams load_params(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("decoder params: parse error: ") + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw std::runtime_error("decoder params: unsupported version");
    DecoderParams p;
    p.variant = variant_from_string(j.at("variant").get<std::string>());
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "shared")
        p.mode = ParamMode::SharedPerIteration;
    else if (mode == "per-edge")
        p.mode = ParamMode::PerEdge;
    else
        throw std::runtime_error("decoder params: unknown mode " + mode);
    p.iterations = j.at("iterations").get<int>();
    p.alpha = j.at("alpha").get<std::vector<double>>();
    p.beta = j.at("beta").get<std::vector<double>>();
    return p;
}

inline DecoderParams load_params(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open params file: " + path);
    return load_params(f);
}

} // namespace biokey
