#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/bitvec.hpp"
#include "biokey/decoder.hpp"
#include "biokey/generator.hpp"
#include "biokey/parity_check.hpp"
#include "biokey/prng.hpp"

namespace biokey {

// Unrolled forward pass of the neural min-sum decoder: every message of
// every iteration is recorded so the parameter gradients can be
// accumulated by reverse-mode differentiation.
struct ForwardTrace {
    int iterations = 0;
    std::vector<std::vector<double>> v2c; // per iteration, per edge
    std::vector<std::vector<double>> c2v; // per iteration, per edge
    std::vector<std::vector<double>> s_per_iter; // per iteration, per variable
    LlrVector llr;
};

inline ForwardTrace unroll_forward(const ParityCheck& h, const TannerGraph& g, const LlrVector& llr,
                                   const DecoderParams& params, int iters) {
    if (params.variant != DecoderVariant::NeuralMS)
        throw std::invalid_argument("unroll_forward: NeuralMS variant required");
    if (static_cast<int>(llr.size()) != h.n)
        throw std::invalid_argument("unroll_forward: llr length != n");
    if (iters < 1 || iters > params.iterations)
        throw std::invalid_argument("unroll_forward: iteration count out of range");

    const std::size_t ne = g.edge_count();
    ForwardTrace tr;
    tr.iterations = iters;
    tr.llr = llr;
    std::vector<double> c2v_prev(ne, 0.0);
    for (int i = 0; i < iters; ++i) {
        std::vector<double> v2c(ne), c2v(ne), s(static_cast<std::size_t>(h.n));
        for (int v = 0; v < h.n; ++v) {
            double total = llr[static_cast<std::size_t>(v)];
            for (int e : g.var_edges[static_cast<std::size_t>(v)]) total += c2v_prev[static_cast<std::size_t>(e)];
            for (int e : g.var_edges[static_cast<std::size_t>(v)])
                v2c[static_cast<std::size_t>(e)] = total - c2v_prev[static_cast<std::size_t>(e)];
        }
        for (int c = 0; c < h.r; ++c) {
            const auto& edges = g.check_edges[static_cast<std::size_t>(c)];
            const std::size_t deg = edges.size();
            if (deg == 0) continue;
            double min1 = std::numeric_limits<double>::infinity();
            double min2 = std::numeric_limits<double>::infinity();
            std::size_t min1_idx = 0;
            double sign_all = 1.0;
            for (std::size_t j = 0; j < deg; ++j) {
                const double x = v2c[static_cast<std::size_t>(edges[j])];
                if (x < 0.0) sign_all = -sign_all;
                const double a = std::abs(x);
                if (a < min1) { // strict: ties keep the lowest edge id
                    min2 = min1;
                    min1 = a;
                    min1_idx = j;
                } else if (a < min2) {
                    min2 = a;
                }
            }
            for (std::size_t j = 0; j < deg; ++j) {
                const int e = edges[j];
                const double x = v2c[static_cast<std::size_t>(e)];
                const double extr_sign = x < 0.0 ? -sign_all : sign_all;
                const double extr_min = j == min1_idx ? min2 : min1;
                const double a = params.alpha_at(i, e, ne);
                const double b = params.beta_at(i, e, ne);
                c2v[static_cast<std::size_t>(e)] = extr_sign * std::max(a * extr_min - b, 0.0);
            }
        }
        for (int v = 0; v < h.n; ++v) {
            double total = llr[static_cast<std::size_t>(v)];
            for (int e : g.var_edges[static_cast<std::size_t>(v)]) total += c2v[static_cast<std::size_t>(e)];
            s[static_cast<std::size_t>(v)] = total;
        }
        tr.v2c.push_back(std::move(v2c));
        tr.c2v.push_back(c2v);
        tr.s_per_iter.push_back(std::move(s));
        c2v_prev = std::move(c2v);
    }
    return tr;
}

// Mean binary cross-entropy of sigma(-s_v) against the target bit; large
// positive s_v means bit 0, so target 0 with s -> +inf drives the loss
// to zero.
inline double loss_bce(const std::vector<double>& s, const BitVector& target) {
    if (s.size() != target.size())
        throw std::invalid_argument("loss_bce: length mismatch");
    double total = 0.0;
    for (std::size_t v = 0; v < s.size(); ++v) {
        const double z = -s[v]; // logit of bit 1
        const double t = target.get(v) ? 1.0 : 0.0;
        total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    return total / static_cast<double>(s.size());
}

// d(mean BCE)/ds_v
inline std::vector<double> loss_bce_grad(const std::vector<double>& s, const BitVector& target) {
    if (s.size() != target.size())
        throw std::invalid_argument("loss_bce_grad: length mismatch");
    std::vector<double> ds(s.size());
    const double inv_n = 1.0 / static_cast<double>(s.size());
    for (std::size_t v = 0; v < s.size(); ++v) {
        const double p1 = 1.0 / (1.0 + std::exp(s[v])); // sigma(-s)
        const double t = target.get(v) ? 1.0 : 0.0;
        ds[v] = (t - p1) * inv_n;
    }
    return ds;
}

struct ParamGradients {
    std::vector<double> d_alpha; // layout matches DecoderParams
    std::vector<double> d_beta;
};

// Reverse-mode accumulation through the unrolled decoder. Conventions at
// the non-smooth points: the clamp uses the zero branch at the kink, the
// min routes gradient only to the argmin edge (ties to the lowest edge
// id), and sign(.) is treated as a constant.
// `layers_back` limits how many iterations are walked backwards (-1 for
// all). Greedy training only needs the newest layer's gradient, which
// lives entirely in the final check-node sublayer.
inline ParamGradients backward(const ParityCheck& h, const TannerGraph& g, const ForwardTrace& tr,
                               const DecoderParams& params, const BitVector& target,
                               int layers_back = -1) {
    const std::size_t ne = g.edge_count();
    const int iters = tr.iterations;
    const bool per_edge = params.mode == ParamMode::PerEdge;
    ParamGradients grads;
    const std::size_t pcount = per_edge ? static_cast<std::size_t>(params.iterations) * ne
                                        : static_cast<std::size_t>(params.iterations);
    grads.d_alpha.assign(pcount, 0.0);
    grads.d_beta.assign(pcount, 0.0);

    std::vector<double> ds = loss_bce_grad(tr.s_per_iter[static_cast<std::size_t>(iters - 1)], target);

    // s_v = l_v + sum over N(v) of c2v at the final iteration
    std::vector<double> dc2v(ne, 0.0);
    for (int v = 0; v < h.n; ++v)
        for (int e : g.var_edges[static_cast<std::size_t>(v)])
            dc2v[static_cast<std::size_t>(e)] = ds[static_cast<std::size_t>(v)];

    const int stop = layers_back < 0 ? 0 : std::max(0, iters - layers_back);
    for (int i = iters - 1; i >= stop; --i) {
        const auto& v2c = tr.v2c[static_cast<std::size_t>(i)];
        std::vector<double> dv2c(ne, 0.0);
        for (int c = 0; c < h.r; ++c) {
            const auto& edges = g.check_edges[static_cast<std::size_t>(c)];
            const std::size_t deg = edges.size();
            if (deg == 0) continue;
            double min1 = std::numeric_limits<double>::infinity();
            double min2 = std::numeric_limits<double>::infinity();
            std::size_t min1_idx = 0, min2_idx = 0;
            double sign_all = 1.0;
            for (std::size_t j = 0; j < deg; ++j) {
                const double x = v2c[static_cast<std::size_t>(edges[j])];
                if (x < 0.0) sign_all = -sign_all;
                const double a = std::abs(x);
                if (a < min1) {
                    min2 = min1;
                    min2_idx = min1_idx;
                    min1 = a;
                    min1_idx = j;
                } else if (a < min2) {
                    min2 = a;
                    min2_idx = j;
                }
            }
            for (std::size_t j = 0; j < deg; ++j) {
                const int e = edges[j];
                const double gy = dc2v[static_cast<std::size_t>(e)];
                if (gy == 0.0) continue;
                const double x = v2c[static_cast<std::size_t>(e)];
                const double extr_sign = x < 0.0 ? -sign_all : sign_all;
                const double extr_min = j == min1_idx ? min2 : min1;
                const double a = params.alpha_at(i, e, ne);
                const double b = params.beta_at(i, e, ne);
                if (a * extr_min - b <= 0.0) continue; // dead clamp
                const std::size_t pidx = per_edge
                                             ? static_cast<std::size_t>(i) * ne + static_cast<std::size_t>(e)
                                             : static_cast<std::size_t>(i);
                grads.d_alpha[pidx] += gy * extr_sign * extr_min;
                grads.d_beta[pidx] -= gy * extr_sign;
                const std::size_t argmin_j = j == min1_idx ? min2_idx : min1_idx;
                const int argmin_e = edges[argmin_j];
                const double sgn_arg = v2c[static_cast<std::size_t>(argmin_e)] < 0.0 ? -1.0 : 1.0;
                dv2c[static_cast<std::size_t>(argmin_e)] += gy * extr_sign * a * sgn_arg;
            }
        }
        if (i == stop) break; // either the zero init or the truncation point
        // vn backward: v2c_e = l_v + sum over N(v)\e of previous c2v
        std::fill(dc2v.begin(), dc2v.end(), 0.0);
        for (int v = 0; v < h.n; ++v) {
            double total = 0.0;
            for (int e : g.var_edges[static_cast<std::size_t>(v)]) total += dv2c[static_cast<std::size_t>(e)];
            for (int e : g.var_edges[static_cast<std::size_t>(v)])
                dc2v[static_cast<std::size_t>(e)] = total - dv2c[static_cast<std::size_t>(e)];
        }
    }
    return grads;
}

struct TrainConfig {
    double p_min = 0.10;
    double p_max = 0.18;
    int frames_per_epoch = 100;
    int epochs_per_layer = 5;
    double step_size = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    ParamMode mode = ParamMode::SharedPerIteration;
    int iterations = 10;

    void validate() const {
        if (!(p_min > 0.0 && p_max < 0.5 && p_min <= p_max))
            throw std::invalid_argument("TrainConfig: crossover range must lie in (0, 0.5)");
        if (frames_per_epoch < 1 || epochs_per_layer < 0 || iterations < 1)
            throw std::invalid_argument("TrainConfig: counts must be positive");
        if (!(step_size > 0.0)) throw std::invalid_argument("TrainConfig: step size must be > 0");
    }
};

class TrainingError : public std::runtime_error {
  public:
    TrainingError(const std::string& what, int layer)
        : std::runtime_error(what + " (layer " + std::to_string(layer + 1) + ")"), layer_(layer) {}
    int layer() const { return layer_; }

  private:
    int layer_;
};

// Greedy layer-by-layer training: the decoder grows one iteration at a
// time and only the newest iteration's (alpha, beta) move; earlier
// layers stay frozen. Training frames are random messages encoded and
// BSC-flipped at crossover rates sampled uniformly from [p_min, p_max].
template <typename ProgressFn>
inline DecoderParams train_greedy(const ParityCheck& h, const TannerGraph& g,
                                  const GeneratorMatrix& gen, const TrainConfig& cfg,
                                  ProgressFn&& progress) {
    cfg.validate();
    const std::size_t ne = g.edge_count();
    const std::size_t per_layer = cfg.mode == ParamMode::PerEdge ? ne : 1;

    DecoderParams params;
    params.variant = DecoderVariant::NeuralMS;
    params.mode = cfg.mode;
    params.iterations = 0;

    std::uint64_t frame_counter = 0;
    for (int layer = 0; layer < cfg.iterations; ++layer) {
        params.iterations = layer + 1;
        params.alpha.insert(params.alpha.end(), per_layer, 1.0);
        params.beta.insert(params.beta.end(), per_layer, 0.0);

        std::vector<double> vel_a(per_layer, 0.0), vel_b(per_layer, 0.0);
        const std::size_t base = static_cast<std::size_t>(layer) * per_layer;

        for (int epoch = 0; epoch < cfg.epochs_per_layer; ++epoch) {
            std::vector<double> grad_a(per_layer, 0.0), grad_b(per_layer, 0.0);
            double loss_sum = 0.0;
            for (int f = 0; f < cfg.frames_per_epoch; ++f) {
                SplitMix64 rng = derive_stream(cfg.seed, frame_counter++);
                BitVector msg = BitVector::random(static_cast<std::size_t>(gen.k), rng);
                const BitVector cw = encode(gen, msg);
                const double p = cfg.p_min + (cfg.p_max - cfg.p_min) * rng.uniform();
                BitVector received = cw;
                for (std::size_t i = 0; i < received.size(); ++i)
                    if (rng.uniform() < p) received.flip(i);
                const LlrVector llr = init_llr(received, ChannelConfig(p));
                const ForwardTrace tr = unroll_forward(h, g, llr, params, layer + 1);
                loss_sum += loss_bce(tr.s_per_iter.back(), cw);
                const ParamGradients pg = backward(h, g, tr, params, cw, /*layers_back=*/1);
                for (std::size_t j = 0; j < per_layer; ++j) {
                    grad_a[j] += pg.d_alpha[base + j];
                    grad_b[j] += pg.d_beta[base + j];
                }
            }
            const double mean_loss = loss_sum / cfg.frames_per_epoch;
            if (!std::isfinite(mean_loss))
                throw TrainingError("train_greedy: divergent loss", layer);
            for (std::size_t j = 0; j < per_layer; ++j) {
                vel_a[j] = cfg.momentum * vel_a[j] - cfg.step_size * grad_a[j] / cfg.frames_per_epoch;
                vel_b[j] = cfg.momentum * vel_b[j] - cfg.step_size * grad_b[j] / cfg.frames_per_epoch;
                params.alpha[base + j] = std::max(params.alpha[base + j] + vel_a[j], 1e-3);
                params.beta[base + j] = std::max(params.beta[base + j] + vel_b[j], 0.0);
            }
            progress(layer, epoch, mean_loss);
        }
    }
    return params;
}

inline DecoderParams train_greedy(const ParityCheck& h, const TannerGraph& g,
                                  const GeneratorMatrix& gen, const TrainConfig& cfg) {
    return train_greedy(h, g, gen, cfg, [](int, int, double) {});
}

} // namespace biokey
