#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "biokey/bitvec.hpp"
#include "biokey/decoder.hpp"
#include "biokey/generator.hpp"
#include "biokey/parity_check.hpp"
#include "biokey/pipeline.hpp"
#include "biokey/prng.hpp"
#include "biokey/sha256.hpp"

#include "json.hpp"

namespace biokey {

inline constexpr int kBlockFeatureBits = 512; // feature bits per code block
inline constexpr int kBlockCodeBits = 520;    // code length after zero padding
inline constexpr int kBlockKeyBits = 100;     // message bits per block

struct SecretKey {
    BitVector bits; // 100*m bits
};

inline SecretKey generate_key(int m) {
    if (m < 1) throw std::invalid_argument("generate_key: m must be >= 1");
    const std::size_t nbits = static_cast<std::size_t>(kBlockKeyBits) * static_cast<std::size_t>(m);
    const auto bytes = secure_random_bytes((nbits + 7) / 8);
    SecretKey k;
    k.bits = BitVector(nbits);
    for (std::size_t i = 0; i < nbits; ++i)
        if ((bytes[i >> 3] >> (i & 7)) & 1u) k.bits.set(i, true);
    return k;
}

// Deterministic key draw for tests and reproducible experiments.
inline SecretKey generate_key_seeded(int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("generate_key: m must be >= 1");
    SplitMix64 rng(seed);
    SecretKey k;
    k.bits = BitVector::random(static_cast<std::size_t>(kBlockKeyBits) * static_cast<std::size_t>(m), rng);
    return k;
}

// Split a 512*m-bit template into m blocks of 520 bits, each padded with
// eight zero bits at positions 512..519.
inline std::vector<BitVector> split_and_pad(const BinaryTemplate& t, int m) {
    if (t.bits.size() != static_cast<std::size_t>(kBlockFeatureBits) * static_cast<std::size_t>(m))
        throw std::invalid_argument("split_and_pad: template length != 512*m");
    std::vector<BitVector> blocks;
    blocks.reserve(static_cast<std::size_t>(m));
    for (int b = 0; b < m; ++b) {
        BitVector block(static_cast<std::size_t>(kBlockCodeBits));
        for (int i = 0; i < kBlockFeatureBits; ++i)
            block.set(static_cast<std::size_t>(i),
                      t.bits.get(static_cast<std::size_t>(b) * kBlockFeatureBits +
                                 static_cast<std::size_t>(i)));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

struct Commitment {
    int version = 1;
    Digest key_hash{};
    BitVector delta; // 520*m bits
    // pipeline / code metadata, validated at retrieval time
    int q = 0;
    int m = 0;
    std::uint64_t perm_seed = 0;
    std::uint64_t mask_seed = 0;
    double kappa = 0.0;
    std::string code_id;
    std::string decoder_params_id;
};

inline Digest hash_key(const SecretKey& key) {
    return sha256(key.bits.bytes());
}

inline Commitment enroll(const BinaryTemplate& t, const SecretKey& key, const ParityCheck& h,
                         const GeneratorMatrix& gen, const PipelineConfig& cfg,
                         const std::string& code_id, const std::string& decoder_params_id = "") {
    if (t.stage != TemplateStage::Masked)
        throw std::invalid_argument("enroll: template must be at the masked stage");
    const int m = cfg.m();
    if (key.bits.size() != static_cast<std::size_t>(kBlockKeyBits) * static_cast<std::size_t>(m))
        throw std::invalid_argument("enroll: key length != 100*m");
    if (gen.k != kBlockKeyBits || gen.n != kBlockCodeBits)
        throw std::invalid_argument("enroll: code is not a (520,100) code");

    const auto blocks = split_and_pad(t, m);
    Commitment c;
    c.delta = BitVector(static_cast<std::size_t>(kBlockCodeBits) * static_cast<std::size_t>(m));
    for (int b = 0; b < m; ++b) {
        const BitVector subkey =
            key.bits.slice(static_cast<std::size_t>(b) * kBlockKeyBits, kBlockKeyBits);
        const BitVector cw = encode(gen, subkey);
        const BitVector delta_block = blocks[static_cast<std::size_t>(b)] ^ cw;
        for (int i = 0; i < kBlockCodeBits; ++i)
            c.delta.set(static_cast<std::size_t>(b) * kBlockCodeBits + static_cast<std::size_t>(i),
                        delta_block.get(static_cast<std::size_t>(i)));
    }
    (void)h;
    c.key_hash = hash_key(key);
    c.q = cfg.q;
    c.m = m;
    c.perm_seed = cfg.perm_seed;
    c.mask_seed = cfg.mask_seed;
    c.kappa = cfg.kappa;
    c.code_id = code_id;
    c.decoder_params_id = decoder_params_id;
    return c;
}

struct RetrievalOutcome {
    bool success = false;
    std::optional<SecretKey> key; // present only on success
    std::vector<int> block_iterations; // per block: iterations used by the decoder
    std::vector<bool> block_converged;
};

class MetadataMismatch : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// De-commit and decode: per block, XOR the fresh template block against
// delta, decode the noisy codeword, and extract the 100 info bits. All m
// blocks must decode and the concatenated key must hash to the stored
// digest.
inline RetrievalOutcome retrieve(const BinaryTemplate& t, const Commitment& c, const ParityCheck& h,
                                 const TannerGraph& g, const GeneratorMatrix& gen,
                                 const DecoderParams& params, const PipelineConfig& cfg,
                                 double decode_p = 0.17) {
    if (t.stage != TemplateStage::Masked)
        throw std::invalid_argument("retrieve: template must be at the masked stage");
    if (cfg.q != c.q || cfg.perm_seed != c.perm_seed || cfg.mask_seed != c.mask_seed ||
        cfg.kappa != c.kappa)
        throw MetadataMismatch("retrieve: pipeline metadata does not match commitment");
    if (t.bits.size() != static_cast<std::size_t>(kBlockFeatureBits) * static_cast<std::size_t>(c.m))
        throw std::invalid_argument("retrieve: template length != 512*m");

    const ChannelConfig ch(decode_p);
    const auto blocks = split_and_pad(t, c.m);
    RetrievalOutcome out;
    BitVector key_bits(static_cast<std::size_t>(kBlockKeyBits) * static_cast<std::size_t>(c.m));
    bool all_converged = true;
    for (int b = 0; b < c.m; ++b) {
        const BitVector delta_block =
            c.delta.slice(static_cast<std::size_t>(b) * kBlockCodeBits, kBlockCodeBits);
        const BitVector noisy = blocks[static_cast<std::size_t>(b)] ^ delta_block;
        const DecodeResult res = decode(h, g, init_llr(noisy, ch), params, /*early_exit=*/true);
        out.block_iterations.push_back(res.iterations_used);
        out.block_converged.push_back(res.converged);
        all_converged = all_converged && res.converged;
        const BitVector subkey = extract_message(gen, res.bits);
        for (int i = 0; i < kBlockKeyBits; ++i)
            key_bits.set(static_cast<std::size_t>(b) * kBlockKeyBits + static_cast<std::size_t>(i),
                         subkey.get(static_cast<std::size_t>(i)));
    }
    if (!all_converged) return out;
    SecretKey key{key_bits};
    if (hash_key(key) != c.key_hash) return out;
    out.success = true;
    out.key = std::move(key);
    return out;
}

// ---- commitment record (versioned JSON) ----

inline std::string digest_hex(const Digest& d) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (std::uint8_t b : d) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

inline Digest digest_from_hex(const std::string& hex) {
    if (hex.size() != 64) throw std::runtime_error("commitment: bad key hash length");
    Digest d{};
    for (std::size_t i = 0; i < 32; ++i)
        d[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
    return d;
}

inline void save_commitment(const Commitment& c, std::ostream& out) {
    nlohmann::json j;
    j["version"] = c.version;
    j["hash_alg"] = "sha-256";
    j["key_hash_hex"] = digest_hex(c.key_hash);
    j["delta_hex"] = c.delta.to_hex();
    j["q"] = c.q;
    j["m"] = c.m;
    j["perm_seed"] = c.perm_seed;
    j["mask_seed"] = c.mask_seed;
    j["kappa"] = c.kappa;
    j["code_id"] = c.code_id;
    j["decoder_params_id"] = c.decoder_params_id;
    out << j.dump(2) << "\n";
}

inline void save_commitment(const Commitment& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open commitment file for writing: " + path);
    save_commitment(c, f);
}

inline Commitment load_commitment(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("commitment: parse error: ") + e.what());
    }
    Commitment c;
    c.version = j.at("version").get<int>();
    if (c.version != 1) throw std::runtime_error("commitment: unsupported version");
    if (j.at("hash_alg").get<std::string>() != "sha-256")
        throw std::runtime_error("commitment: unsupported hash algorithm");
    c.key_hash = digest_from_hex(j.at("key_hash_hex").get<std::string>());
    c.q = j.at("q").get<int>();
    c.m = j.at("m").get<int>();
    c.delta = BitVector::from_hex(j.at("delta_hex").get<std::string>(),
                                  static_cast<std::size_t>(kBlockCodeBits) *
                                      static_cast<std::size_t>(c.m));
    c.perm_seed = j.at("perm_seed").get<std::uint64_t>();
    c.mask_seed = j.at("mask_seed").get<std::uint64_t>();
    c.kappa = j.at("kappa").get<double>();
    c.code_id = j.at("code_id").get<std::string>();
    c.decoder_params_id = j.at("decoder_params_id").get<std::string>();
    return c;
}

inline Commitment load_commitment(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open commitment file: " + path);
    return load_commitment(f);
}

} // namespace biokey
