// Batch frontend: code construction, FER sweeps, decoder training,
// pipeline calibration, enrollment/verification, population evaluation,
// unlinkability and security reports.
//
// Exit codes: 0 success, 1 negative verification, 2 usage/config error,
// 3 internal error. stderr carries progress, stdout machine-readable
// results.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "biokey/biokey.hpp"

namespace {

using namespace biokey;

struct Code {
    ParityCheck h;
    TannerGraph g;
    GeneratorMatrix gen;
};

Code load_code(const std::string& prefix) {
    Code code;
    code.h = load_alist(prefix + ".alist");
    code.g = tanner_graph(code.h);
    code.gen = load_generator(prefix + ".gen");
    if (code.gen.n != code.h.n)
        throw std::invalid_argument("code files disagree on block length: " + prefix);
    return code;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    return out;
}

// Route a report to --out when given, stdout otherwise.
template <typename Fn>
void emit(const std::string& out_path, Fn&& writer) {
    if (out_path.empty()) {
        writer(std::cout);
    } else {
        std::ofstream out = open_out(out_path);
        writer(out);
    }
}

std::vector<FeatureVector> load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open embeddings file: " + path);
    std::vector<FeatureVector> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        FeatureVector v;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) v.push_back(std::stod(field));
        if (!rows.empty() && v.size() != rows.front().size())
            throw std::invalid_argument("ragged embeddings file: " + path);
        rows.push_back(std::move(v));
    }
    if (rows.empty()) throw std::invalid_argument("empty embeddings file: " + path);
    return rows;
}

// Uniform synthetic embeddings, one derived stream per row.
std::vector<FeatureVector> synth_embeddings(int rows, std::uint64_t seed) {
    std::vector<FeatureVector> out(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        SplitMix64 rng = derive_stream(seed, static_cast<std::uint64_t>(r));
        FeatureVector v(kFeatureDim);
        for (double& x : v) x = rng.uniform();
        out[static_cast<std::size_t>(r)] = std::move(v);
    }
    return out;
}

void save_pipeline_config(const PipelineConfig& cfg, const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["q"] = cfg.q;
    j["perm_seed"] = cfg.perm_seed;
    j["mask_seed"] = cfg.mask_seed;
    j["kappa"] = cfg.kappa;
    j["tau"] = cfg.tau;
    j["quantile"] = cfg.quantile;
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open pipeline config: " + path);
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("version").get<int>() != 1)
        throw std::invalid_argument("unsupported pipeline config version");
    PipelineConfig cfg;
    cfg.q = j.at("q").get<int>();
    cfg.perm_seed = j.at("perm_seed").get<std::uint64_t>();
    cfg.mask_seed = j.at("mask_seed").get<std::uint64_t>();
    cfg.kappa = j.at("kappa").get<double>();
    cfg.tau = j.at("tau").get<double>();
    cfg.quantile = j.at("quantile").get<double>();
    cfg.validate();
    return cfg;
}

void save_population(const SynthPopulation& pop, std::ostream& out) {
    out << pop.cfg.subjects << "," << pop.cfg.samples_per_subject << "," << pop.cfg.template_len
        << "," << std::setprecision(17) << pop.cfg.p_mated << "," << pop.cfg.p_nonmated << ","
        << pop.cfg.seed << "\n";
    for (std::size_t s = 0; s < pop.samples.size(); ++s)
        for (std::size_t i = 0; i < pop.samples[s].size(); ++i)
            out << s << "," << i << "," << pop.samples[s][i].to_hex() << "\n";
}

SynthPopulation load_population(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open population file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty population file: " + path);
    SynthConfig cfg;
    {
        std::stringstream ss(line);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 6) throw std::invalid_argument("malformed population header");
        cfg.subjects = std::stoi(fields[0]);
        cfg.samples_per_subject = std::stoi(fields[1]);
        cfg.template_len = std::stoul(fields[2]);
        cfg.p_mated = std::stod(fields[3]);
        cfg.p_nonmated = std::stod(fields[4]);
        cfg.seed = std::stoull(fields[5]);
    }
    cfg.validate();
    SynthPopulation pop;
    pop.cfg = cfg;
    pop.samples.assign(static_cast<std::size_t>(cfg.subjects), {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string s_str, i_str, hex;
        if (!std::getline(ss, s_str, ',') || !std::getline(ss, i_str, ',') ||
            !std::getline(ss, hex, ','))
            throw std::invalid_argument("malformed population row");
        const auto s = static_cast<std::size_t>(std::stoul(s_str));
        if (s >= pop.samples.size()) throw std::invalid_argument("population subject out of range");
        pop.samples[s].push_back(BitVector::from_hex(hex, cfg.template_len));
    }
    for (const auto& subject : pop.samples)
        if (subject.size() != static_cast<std::size_t>(cfg.samples_per_subject))
            throw std::invalid_argument("population sample count mismatch");
    return pop;
}

DecoderParams resolve_params(const std::string& params_path, const std::string& decoder,
                             int iters) {
    if (!params_path.empty()) {
        std::ifstream in(params_path);
        if (!in) throw std::invalid_argument("cannot open decoder params: " + params_path);
        return load_params(in);
    }
    return DecoderParams::plain(variant_from_string(decoder), iters);
}

std::vector<double> resolve_p_grid(const std::vector<double>& p_flags, const std::string& grid) {
    std::vector<double> p = p_flags;
    if (!grid.empty()) {
        std::stringstream ss(grid);
        std::string field;
        while (std::getline(ss, field, ',')) p.push_back(std::stod(field));
    }
    if (p.empty()) throw std::invalid_argument("no crossover rates given (use --p or --p-grid)");
    std::vector<double> unique;
    for (double v : p) {
        if (std::find(unique.begin(), unique.end(), v) != unique.end()) {
            std::cerr << "warning: duplicate crossover rate " << v << " dropped\n";
            continue;
        }
        unique.push_back(v);
    }
    return unique;
}

BinaryTemplate masked_template_from_embedding(const FeatureVector& row, const QuantizerTable& table,
                                              const PipelineConfig& cfg) {
    const std::size_t len = table.dims() * static_cast<std::size_t>(cfg.q - 1);
    const MaskBits mask = gen_mask(cfg.kappa, cfg.mask_seed, len);
    return transform(row, cfg, table, mask);
}

// Mated/non-mated retrieval trials over a synthetic masked population.
// Trial t enrolls subject t's anchor under a per-trial key and retrieves
// with the mated sample (or a non-mated counterpart).
struct EvalResult {
    GmrFmrCurves curves;
    double d_prime = 0.0;
    double dof_nonmated = 0.0;
};

EvalResult run_eval(const Code& code, const DecoderParams& params, const SynthPopulation& pop,
                    int mated_trials, int nonmated_trials, std::uint64_t seed, unsigned threads) {
    if (pop.cfg.samples_per_subject < 2)
        throw std::invalid_argument("eval: population needs at least 2 samples per subject");
    const int m = static_cast<int>(pop.cfg.template_len) / kBlockFeatureBits;
    if (static_cast<std::size_t>(m) * kBlockFeatureBits != pop.cfg.template_len)
        throw std::invalid_argument("eval: template length must be a multiple of 512");
    PipelineConfig cfg;
    cfg.q = m + 1; // templates are already masked; only the metadata must be consistent
    cfg.perm_seed = seed ^ 0x9E3779B97F4A7C15ULL;
    cfg.mask_seed = seed ^ 0xD1B54A32D192ED03ULL;
    cfg.kappa = 0.0;

    auto subject_at = [&](int t) -> const std::vector<BitVector>& {
        return pop.samples[static_cast<std::size_t>(t) % pop.samples.size()];
    };
    auto template_of = [&](const BitVector& bits) {
        BinaryTemplate t;
        t.bits = bits;
        t.stage = TemplateStage::Masked;
        return t;
    };

    std::vector<TrialOutcome> mated(static_cast<std::size_t>(mated_trials));
    std::vector<double> mated_dist(static_cast<std::size_t>(mated_trials));
    parallel_for(static_cast<std::size_t>(mated_trials), threads, [&](std::size_t t) {
        const auto& subject = subject_at(static_cast<int>(t));
        const BitVector& anchor = subject[0];
        const BitVector& probe = subject[1 + t % (subject.size() - 1)];
        const SecretKey key = generate_key_seeded(m, derive_stream(seed, t).next());
        const Commitment c = enroll(template_of(anchor), key, code.h, code.gen, cfg, "cli");
        const RetrievalOutcome out =
            retrieve(template_of(probe), c, code.h, code.g, code.gen, params, cfg);
        int iter = -1;
        if (out.success)
            for (int bi : out.block_iterations) iter = std::max(iter, bi);
        mated[t].success_iteration = iter;
        mated_dist[t] =
            static_cast<double>(anchor.hamming(probe)) / static_cast<double>(anchor.size());
    });

    std::vector<TrialOutcome> nonmated(static_cast<std::size_t>(nonmated_trials));
    std::vector<double> nonmated_dist(static_cast<std::size_t>(nonmated_trials));
    parallel_for(static_cast<std::size_t>(nonmated_trials), threads, [&](std::size_t t) {
        const BitVector& anchor = subject_at(static_cast<int>(t))[0];
        const BitVector probe = synth_nonmated_counterpart(pop, anchor, t);
        const SecretKey key = generate_key_seeded(m, derive_stream(seed ^ 1, t).next());
        const Commitment c = enroll(template_of(anchor), key, code.h, code.gen, cfg, "cli");
        const RetrievalOutcome out =
            retrieve(template_of(probe), c, code.h, code.g, code.gen, params, cfg);
        int iter = -1;
        if (out.success)
            for (int bi : out.block_iterations) iter = std::max(iter, bi);
        nonmated[t].success_iteration = iter;
        nonmated_dist[t] =
            static_cast<double>(anchor.hamming(probe)) / static_cast<double>(anchor.size());
    });

    EvalResult res;
    res.curves = gmr_fmr(mated, nonmated, params.iterations);
    ScoreStats stats;
    stats.mated = mated_dist;
    stats.nonmated = nonmated_dist;
    res.d_prime = decidability(stats);
    res.dof_nonmated = dof(stats.mean_nonmated(), stats.std_nonmated());
    return res;
}

int run(int argc, char** argv) {
    CLI::App app{"LDPC-based key-binding biometric cryptosystem toolkit"};
    app.require_subcommand(1);

    // ---- build-code ----
    auto* sc_build = app.add_subcommand("build-code", "lift a base graph and derive the generator");
    std::string bg_path = std::string(BIOKEY_ASSET_DIR) + "/bg2_z10.csv";
    int z = 10;
    std::string out_prefix;
    sc_build->add_option("--bg", bg_path, "base graph CSV");
    sc_build->add_option("--z", z, "lifting size");
    sc_build->add_option("--out", out_prefix, "output path prefix")->required();

    // ---- fer ----
    auto* sc_fer = app.add_subcommand("fer", "Monte Carlo frame error rate sweep");
    std::string code_prefix, params_path, decoder = "ms", p_grid, out_path;
    std::vector<double> p_flags;
    std::uint64_t frames = 1000, seed = 1;
    int iters = 100;
    unsigned threads = 1;
    sc_fer->add_option("--code", code_prefix, "code path prefix")->required();
    sc_fer->add_option("--decoder", decoder, "sp|ms|nms|oms|neural-ms");
    sc_fer->add_option("--params", params_path, "decoder params JSON (overrides --decoder/--iters)");
    sc_fer->add_option("--p", p_flags, "crossover rate (repeatable)");
    sc_fer->add_option("--p-grid", p_grid, "comma-separated crossover rates");
    sc_fer->add_option("--frames", frames, "frames per rate");
    sc_fer->add_option("--iters", iters, "decoder iterations");
    sc_fer->add_option("--seed", seed, "simulation seed");
    sc_fer->add_option("--threads", threads, "worker threads");
    sc_fer->add_option("--out", out_path, "output CSV (default stdout)");

    // ---- train ----
    auto* sc_train = app.add_subcommand("train", "greedy layer training of the neural decoder");
    TrainConfig tc;
    tc.iterations = 100;
    std::string train_code, train_out;
    sc_train->add_option("--code", train_code, "code path prefix")->required();
    sc_train->add_option("--iters", tc.iterations, "unrolled iterations");
    sc_train->add_option("--epochs", tc.epochs_per_layer, "epochs per layer");
    sc_train->add_option("--frames-per-epoch", tc.frames_per_epoch, "frames per epoch");
    sc_train->add_option("--p-min", tc.p_min, "training crossover lower bound");
    sc_train->add_option("--p-max", tc.p_max, "training crossover upper bound");
    sc_train->add_option("--step", tc.step_size, "gradient step size");
    sc_train->add_option("--momentum", tc.momentum, "momentum coefficient");
    sc_train->add_option("--seed", tc.seed, "training seed");
    sc_train->add_option("--out", train_out, "output params JSON")->required();

    // ---- calibrate ----
    auto* sc_cal = app.add_subcommand("calibrate", "fit quantizer and search the mask rate");
    std::string cal_embeddings, cal_out;
    int cal_q = 4, cal_synth_rows = 0, cal_pairs = 1000;
    double cal_tau = 0.15, cal_quantile = 0.95;
    std::uint64_t cal_seed = 1, cal_perm_seed = 1, cal_mask_seed = 1;
    sc_cal->add_option("--embeddings", cal_embeddings, "calibration embeddings CSV");
    sc_cal->add_option("--synth-rows", cal_synth_rows, "generate this many synthetic rows instead");
    sc_cal->add_option("--q", cal_q, "quantization levels");
    sc_cal->add_option("--tau", cal_tau, "verification threshold (fraction of length)");
    sc_cal->add_option("--kappa-quantile", cal_quantile, "target inter-class quantile");
    sc_cal->add_option("--pairs", cal_pairs, "inter-class pairs for the search");
    sc_cal->add_option("--seed", cal_seed, "synthetic embedding seed");
    sc_cal->add_option("--perm-seed", cal_perm_seed, "permutation seed");
    sc_cal->add_option("--mask-seed", cal_mask_seed, "mask seed");
    sc_cal->add_option("--out", cal_out, "output path prefix")->required();

    // ---- enroll ----
    auto* sc_enroll = app.add_subcommand("enroll", "bind a fresh key to a biometric template");
    std::string en_embeddings, en_quant, en_pipeline, en_code, en_out, en_key_out;
    int en_row = 0;
    std::int64_t en_key_seed = -1;
    sc_enroll->add_option("--embedding", en_embeddings, "embeddings CSV")->required();
    sc_enroll->add_option("--row", en_row, "row index of the subject");
    sc_enroll->add_option("--quantizer", en_quant, "quantizer table JSON")->required();
    sc_enroll->add_option("--pipeline", en_pipeline, "pipeline config JSON")->required();
    sc_enroll->add_option("--code", en_code, "code path prefix")->required();
    sc_enroll->add_option("--test-key-seed", en_key_seed,
                          "deterministic key seed (test mode; default secure random)");
    sc_enroll->add_option("--out", en_out, "output commitment JSON")->required();
    sc_enroll->add_option("--key-out", en_key_out, "write the bound key hex here");

    // ---- verify ----
    auto* sc_verify = app.add_subcommand("verify", "retrieve the key from a commitment");
    std::string ve_embeddings, ve_quant, ve_pipeline, ve_code, ve_commitment, ve_params,
        ve_decoder = "ms", ve_key_out;
    int ve_row = 0, ve_iters = 100;
    sc_verify->add_option("--embedding", ve_embeddings, "embeddings CSV")->required();
    sc_verify->add_option("--row", ve_row, "row index of the probe");
    sc_verify->add_option("--quantizer", ve_quant, "quantizer table JSON")->required();
    sc_verify->add_option("--pipeline", ve_pipeline, "pipeline config JSON")->required();
    sc_verify->add_option("--code", ve_code, "code path prefix")->required();
    sc_verify->add_option("--commitment", ve_commitment, "commitment JSON")->required();
    sc_verify->add_option("--params", ve_params, "decoder params JSON");
    sc_verify->add_option("--decoder", ve_decoder, "decoder variant when --params absent");
    sc_verify->add_option("--iters", ve_iters, "decoder iterations when --params absent");
    sc_verify->add_option("--key-out", ve_key_out, "write the recovered key hex here");

    // ---- eval ----
    auto* sc_eval = app.add_subcommand("eval", "GMR/FMR over a synthetic population");
    std::string ev_code, ev_params, ev_decoder = "neural-ms", ev_population, ev_out;
    SynthConfig ev_synth;
    int ev_mated = 1000, ev_nonmated = 1000, ev_iters = 100, ev_m = 3;
    std::uint64_t ev_seed = 1;
    unsigned ev_threads = 1;
    sc_eval->add_option("--code", ev_code, "code path prefix")->required();
    sc_eval->add_option("--params", ev_params, "decoder params JSON");
    sc_eval->add_option("--decoder", ev_decoder, "decoder variant when --params absent");
    sc_eval->add_option("--iters", ev_iters, "decoder iterations when --params absent");
    sc_eval->add_option("--population", ev_population, "population file (default: generate)");
    sc_eval->add_option("--subjects", ev_synth.subjects, "synthetic subjects");
    sc_eval->add_option("--p-mated", ev_synth.p_mated, "mated flip rate");
    sc_eval->add_option("--p-nonmated", ev_synth.p_nonmated, "non-mated pair rate");
    sc_eval->add_option("--m", ev_m, "code blocks per template");
    sc_eval->add_option("--mated-trials", ev_mated, "mated trials");
    sc_eval->add_option("--nonmated-trials", ev_nonmated, "non-mated trials");
    sc_eval->add_option("--seed", ev_seed, "population/key seed");
    sc_eval->add_option("--threads", ev_threads, "worker threads");
    sc_eval->add_option("--out", ev_out, "GMR/FMR CSV (default stdout)");

    // ---- unlink ----
    auto* sc_unlink = app.add_subcommand("unlink", "cross-enrollment linkability measure");
    std::string ul_code, ul_out;
    SynthConfig ul_synth;
    int ul_pairs = 1000, ul_m = 3, ul_bins = 15;
    std::uint64_t ul_seed = 1;
    unsigned ul_threads = 1;
    sc_unlink->add_option("--code", ul_code, "code path prefix")->required();
    sc_unlink->add_option("--pairs", ul_pairs, "commitment pairs per hypothesis");
    sc_unlink->add_option("--bins", ul_bins, "histogram bins for the density estimate");
    sc_unlink->add_option("--p-mated", ul_synth.p_mated, "mated flip rate");
    sc_unlink->add_option("--p-nonmated", ul_synth.p_nonmated, "non-mated pair rate");
    sc_unlink->add_option("--m", ul_m, "code blocks per template");
    sc_unlink->add_option("--seed", ul_seed, "population/key seed");
    sc_unlink->add_option("--threads", ul_threads, "worker threads");
    sc_unlink->add_option("--out", ul_out, "local-measure CSV (default stdout)");

    // ---- security ----
    auto* sc_sec = app.add_subcommand("security", "key-guessing strength estimates");
    double sec_entropy = 0.0, sec_tolerated = 0.0;
    int sec_m = 3;
    std::string sec_out;
    sc_sec->add_option("--entropy", sec_entropy, "template entropy H in bits")->required();
    sc_sec->add_option("--tolerated", sec_tolerated, "tolerated errors in bits (t or d)")
        ->required();
    sc_sec->add_option("--m", sec_m, "code blocks (key bits = 100m)");
    sc_sec->add_option("--out", sec_out, "output JSON (default stdout)");

    // ---- synth ----
    auto* sc_synth = app.add_subcommand("synth", "emit a synthetic population file");
    SynthConfig sy_cfg;
    std::string sy_out;
    sc_synth->add_option("--subjects", sy_cfg.subjects, "subjects");
    sc_synth->add_option("--samples", sy_cfg.samples_per_subject, "samples per subject");
    sc_synth->add_option("--len", sy_cfg.template_len, "template length in bits");
    sc_synth->add_option("--p-mated", sy_cfg.p_mated, "mated flip rate");
    sc_synth->add_option("--p-nonmated", sy_cfg.p_nonmated, "non-mated pair rate");
    sc_synth->add_option("--seed", sy_cfg.seed, "population seed");
    sc_synth->add_option("--out", sy_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (sc_build->parsed()) {
        const BaseGraph bg = load_base_graph(bg_path);
        const ParityCheck h = lift(bg, z);
        const GeneratorMatrix gen = derive_generator(h);
        save_alist(h, out_prefix + ".alist");
        save_generator(gen, out_prefix + ".gen");
        std::cout << "n=" << h.n << " k=" << gen.k << " r=" << h.r
                  << " edges=" << tanner_graph(h).edge_count() << "\n";
        return 0;
    }

    if (sc_fer->parsed()) {
        const Code code = load_code(code_prefix);
        const DecoderParams params = resolve_params(params_path, decoder, iters);
        const std::vector<double> p = resolve_p_grid(p_flags, p_grid);
        std::cerr << "fer: " << p.size() << " rate(s), " << frames << " frames, "
                  << params.iterations << " iterations\n";
        const FerReport report = monte_carlo_fer(code.h, code.g, code.gen, params, p, frames, seed,
                                                 threads);
        emit(out_path, [&](std::ostream& out) { write_fer_csv(report, out); });
        return 0;
    }

    if (sc_train->parsed()) {
        const Code code = load_code(train_code);
        const DecoderParams params =
            train_greedy(code.h, code.g, code.gen, tc, [](int layer, int epoch, double loss) {
                std::cerr << "layer " << layer << " epoch " << epoch << " loss " << loss << "\n";
            });
        std::ofstream out = open_out(train_out);
        save_params(params, out);
        std::cout << "iterations=" << params.iterations << " params=" << train_out << "\n";
        return 0;
    }

    if (sc_cal->parsed()) {
        if (cal_embeddings.empty() == (cal_synth_rows == 0))
            throw std::invalid_argument("calibrate: give exactly one of --embeddings/--synth-rows");
        const std::vector<FeatureVector> rows = cal_embeddings.empty()
                                                    ? synth_embeddings(cal_synth_rows, cal_seed)
                                                    : load_embeddings(cal_embeddings);
        const QuantizerTable table = fit_quantizer(rows, cal_q);

        PipelineConfig cfg;
        cfg.q = cal_q;
        cfg.perm_seed = cal_perm_seed;
        cfg.mask_seed = cal_mask_seed;
        cfg.tau = cal_tau;
        cfg.quantile = cal_quantile;

        // inter-class pairs: templates of distinct calibration subjects,
        // taken after permutation but before masking
        if (rows.size() < 2) throw std::invalid_argument("calibrate: need at least 2 rows");
        std::vector<std::pair<BitVector, BitVector>> pairs;
        SplitMix64 pair_rng = derive_stream(cal_seed ^ 0xBEEF, 0);
        auto permuted = [&](const FeatureVector& v) {
            const QuantizedVector zq = quantize(table, v);
            return permute(lssc_encode(zq, cal_q), cfg.perm_seed).bits;
        };
        for (int i = 0; i < cal_pairs; ++i) {
            const auto a = static_cast<std::size_t>(pair_rng.below(rows.size()));
            auto b = static_cast<std::size_t>(pair_rng.below(rows.size() - 1));
            if (b >= a) ++b;
            pairs.emplace_back(permuted(rows[a]), permuted(rows[b]));
        }
        cfg.kappa = search_kappa(pairs, cfg.tau, cfg.quantile, cfg.mask_seed);

        // re-measure the achieved quantile under the found mask
        const MaskBits mask = gen_mask(cfg.kappa, cfg.mask_seed, pairs.front().first.size());
        std::size_t above = 0;
        for (const auto& [a, b] : pairs) {
            const double d = static_cast<double>(((a ^ b) & mask.bits).popcount()) /
                             static_cast<double>(a.size());
            if (d > cfg.tau) ++above;
        }
        save_quantizer(table, cal_out + ".quant.json");
        save_pipeline_config(cfg, cal_out + ".pipeline.json");
        std::cout << std::setprecision(10) << "kappa=" << cfg.kappa << " achieved_quantile="
                  << static_cast<double>(above) / static_cast<double>(pairs.size()) << "\n";
        return 0;
    }

    if (sc_enroll->parsed()) {
        const Code code = load_code(en_code);
        const QuantizerTable table = load_quantizer(en_quant);
        const PipelineConfig cfg = load_pipeline_config(en_pipeline);
        const std::vector<FeatureVector> rows = load_embeddings(en_embeddings);
        if (en_row < 0 || static_cast<std::size_t>(en_row) >= rows.size())
            throw std::invalid_argument("enroll: row out of range");
        const BinaryTemplate t =
            masked_template_from_embedding(rows[static_cast<std::size_t>(en_row)], table, cfg);
        const SecretKey key =
            en_key_seed >= 0
                ? generate_key_seeded(cfg.m(), static_cast<std::uint64_t>(en_key_seed))
                : generate_key(cfg.m());
        const Commitment c = enroll(t, key, code.h, code.gen, cfg, en_code);
        save_commitment(c, en_out);
        if (!en_key_out.empty()) open_out(en_key_out) << key.bits.to_hex() << "\n";
        std::cout << "key_hash=" << digest_hex(c.key_hash) << " commitment=" << en_out << "\n";
        return 0;
    }

    if (sc_verify->parsed()) {
        const Code code = load_code(ve_code);
        const QuantizerTable table = load_quantizer(ve_quant);
        const PipelineConfig cfg = load_pipeline_config(ve_pipeline);
        const Commitment c = load_commitment(ve_commitment);
        const DecoderParams params = resolve_params(ve_params, ve_decoder, ve_iters);
        const std::vector<FeatureVector> rows = load_embeddings(ve_embeddings);
        if (ve_row < 0 || static_cast<std::size_t>(ve_row) >= rows.size())
            throw std::invalid_argument("verify: row out of range");
        const BinaryTemplate t =
            masked_template_from_embedding(rows[static_cast<std::size_t>(ve_row)], table, cfg);
        const RetrievalOutcome out = retrieve(t, c, code.h, code.g, code.gen, params, cfg);
        std::cout << "success=" << (out.success ? 1 : 0) << " iterations=";
        for (std::size_t i = 0; i < out.block_iterations.size(); ++i)
            std::cout << (i ? "," : "") << out.block_iterations[i];
        std::cout << "\n";
        if (out.success && !ve_key_out.empty())
            open_out(ve_key_out) << out.key->bits.to_hex() << "\n";
        return out.success ? 0 : 1;
    }

    if (sc_eval->parsed()) {
        const Code code = load_code(ev_code);
        const DecoderParams params = resolve_params(ev_params, ev_decoder, ev_iters);
        SynthPopulation pop;
        if (!ev_population.empty()) {
            pop = load_population(ev_population);
        } else {
            ev_synth.samples_per_subject = 2;
            ev_synth.template_len = static_cast<std::size_t>(ev_m) * kBlockFeatureBits;
            ev_synth.seed = ev_seed;
            pop = synth_population(ev_synth);
        }
        std::cerr << "eval: " << ev_mated << " mated + " << ev_nonmated << " non-mated trials\n";
        const EvalResult res =
            run_eval(code, params, pop, ev_mated, ev_nonmated, ev_seed, ev_threads);
        emit(ev_out, [&](std::ostream& out) { write_gmr_fmr_csv(res.curves, out); });
        std::cout << std::setprecision(10) << "gmr=" << res.curves.gmr.back()
                  << " fmr=" << res.curves.fmr.back() << " d_prime=" << res.d_prime
                  << " dof=" << res.dof_nonmated << "\n";
        return 0;
    }

    if (sc_unlink->parsed()) {
        const Code code = load_code(ul_code);
        ul_synth.samples_per_subject = 2;
        ul_synth.template_len = static_cast<std::size_t>(ul_m) * kBlockFeatureBits;
        ul_synth.seed = ul_seed;
        ul_synth.subjects = std::max(ul_synth.subjects, 2); // pairs cycle over subjects
        const SynthPopulation pop = synth_population(ul_synth);
        PipelineConfig cfg;
        cfg.q = ul_m + 1;
        cfg.perm_seed = ul_seed ^ 0x9E3779B97F4A7C15ULL;
        cfg.mask_seed = ul_seed ^ 0xD1B54A32D192ED03ULL;

        auto masked = [&](const BitVector& bits) {
            BinaryTemplate t;
            t.bits = bits;
            t.stage = TemplateStage::Masked;
            return t;
        };
        auto commit = [&](const BitVector& bits, std::uint64_t key_idx) {
            const SecretKey key = generate_key_seeded(ul_m, derive_stream(ul_seed ^ 2, key_idx).next());
            return enroll(masked(bits), key, code.h, code.gen, cfg, "cli");
        };
        // linkage score: fractional Hamming distance between helper data
        std::vector<double> mated_scores(static_cast<std::size_t>(ul_pairs));
        std::vector<double> nonmated_scores(static_cast<std::size_t>(ul_pairs));
        parallel_for(static_cast<std::size_t>(ul_pairs), ul_threads, [&](std::size_t i) {
            const auto& subject = pop.samples[i % pop.samples.size()];
            const Commitment a = commit(subject[0], 2 * i);
            const Commitment b = commit(subject[1], 2 * i + 1);
            mated_scores[i] = static_cast<double>(a.delta.hamming(b.delta)) /
                              static_cast<double>(a.delta.size());
            const auto& other = pop.samples[(i + 1 + i % (pop.samples.size() - 1)) % pop.samples.size()];
            const Commitment d = commit(other[0], (1ULL << 32) + i);
            nonmated_scores[i] = static_cast<double>(a.delta.hamming(d.delta)) /
                                 static_cast<double>(a.delta.size());
        });
        const LinkabilityReport rep = unlinkability(mated_scores, nonmated_scores, ul_bins);
        emit(ul_out, [&](std::ostream& out) { write_linkability_csv(rep, out); });
        std::cout << std::setprecision(10) << "d_sys=" << rep.d_sys << "\n";
        return 0;
    }

    if (sc_sec->parsed()) {
        const SecurityReport rep = security_report(sec_entropy, sec_tolerated, sec_m);
        nlohmann::json j;
        j["H"] = rep.entropy_bits;
        j["tolerated"] = rep.tolerated_bits;
        j["s_sphere"] = rep.s_sphere;
        j["s_gv"] = rep.s_gv;
        j["key_bits"] = rep.key_bits;
        j["h_sys_sphere"] = rep.h_sys_sphere;
        j["h_sys_gv"] = rep.h_sys_gv;
        emit(sec_out, [&](std::ostream& out) { out << std::setprecision(17) << j.dump(2) << "\n"; });
        return 0;
    }

    if (sc_synth->parsed()) {
        const SynthPopulation pop = synth_population(sy_cfg);
        emit(sy_out, [&](std::ostream& out) { save_population(pop, out); });
        return 0;
    }

    return 2; // unreachable: a subcommand is required
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
