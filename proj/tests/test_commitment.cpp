#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "biokey/base_graph.hpp"
#include "biokey/commitment.hpp"
#include "biokey/simulation.hpp"

using namespace biokey;

namespace {

const std::string kBg2Path = std::string(BIOKEY_ASSET_DIR) + "/bg2_z10.csv";

struct Fixture {
    ParityCheck h;
    TannerGraph g;
    GeneratorMatrix gen;
    DecoderParams params;
    PipelineConfig cfg;

    Fixture() {
        h = lift(load_base_graph(kBg2Path), 10);
        g = tanner_graph(h);
        gen = derive_generator(h);
        params = DecoderParams::plain(DecoderVariant::MS, 50);
        cfg.q = 4;
        cfg.perm_seed = 11;
        cfg.mask_seed = 22;
        cfg.kappa = 0.1;
    }

    BinaryTemplate masked_template(std::uint64_t seed) const {
        BinaryTemplate t;
        SplitMix64 rng(seed);
        t.bits = BitVector::random(1536, rng);
        t.stage = TemplateStage::Masked;
        return t;
    }
};

BinaryTemplate corrupt(const BinaryTemplate& t, double rate, std::uint64_t seed) {
    BinaryTemplate out = t;
    SplitMix64 rng(seed);
    out.bits = bsc_flip(t.bits, rate, rng);
    return out;
}

} // namespace

TEST_CASE("key generation") {
    SECTION("lengths scale with m") {
        CHECK(generate_key(3).bits.size() == 300);
        CHECK(generate_key(1).bits.size() == 100);
        CHECK_THROWS_AS(generate_key(0), std::invalid_argument);
    }
    SECTION("seeded draws are reproducible, secure draws are not fixed") {
        const SecretKey a = generate_key_seeded(3, 9);
        const SecretKey b = generate_key_seeded(3, 9);
        CHECK(a.bits == b.bits);
        const SecretKey c = generate_key_seeded(3, 10);
        CHECK(a.bits != c.bits);
        CHECK(generate_key(3).bits != generate_key(3).bits);
    }
}

TEST_CASE("split_and_pad produces 520-bit blocks with a zero tail") {
    BinaryTemplate t;
    t.bits = BitVector(1536);
    for (std::size_t i = 0; i < 1536; ++i) t.bits.set(i, true);
    t.stage = TemplateStage::Masked;
    const auto blocks = split_and_pad(t, 3);
    REQUIRE(blocks.size() == 3);
    for (const auto& b : blocks) {
        CHECK(b.size() == 520);
        CHECK(b.popcount() == 512); // 512 ones, 8 pad zeros
        for (std::size_t i = 512; i < 520; ++i) CHECK_FALSE(b.get(i));
    }
    SECTION("blocks reassemble the template") {
        SplitMix64 rng(4);
        BinaryTemplate r;
        r.bits = BitVector::random(1536, rng);
        r.stage = TemplateStage::Masked;
        const auto rb = split_and_pad(r, 3);
        for (int b = 0; b < 3; ++b)
            for (int i = 0; i < 512; ++i)
                CHECK(rb[static_cast<std::size_t>(b)].get(static_cast<std::size_t>(i)) ==
                      r.bits.get(static_cast<std::size_t>(b) * 512 + static_cast<std::size_t>(i)));
    }
    SECTION("wrong length") {
        CHECK_THROWS_AS(split_and_pad(t, 2), std::invalid_argument);
    }
}

TEST_CASE("enrollment binds template blocks to codewords") {
    const Fixture fx;
    const BinaryTemplate t = fx.masked_template(1);
    const SecretKey key = generate_key_seeded(3, 2);
    const Commitment c = enroll(t, key, fx.h, fx.gen, fx.cfg, "bg2-z10");

    CHECK(c.delta.size() == 1560);
    CHECK(c.m == 3);
    CHECK(c.q == 4);
    CHECK(c.code_id == "bg2-z10");

    SECTION("delta xor block is the subkey codeword") {
        const auto blocks = split_and_pad(t, 3);
        for (int b = 0; b < 3; ++b) {
            const BitVector delta_block = c.delta.slice(static_cast<std::size_t>(b) * 520, 520);
            const BitVector cw = delta_block ^ blocks[static_cast<std::size_t>(b)];
            CHECK(syndrome(fx.h, cw).popcount() == 0);
            CHECK(extract_message(fx.gen, cw) ==
                  key.bits.slice(static_cast<std::size_t>(b) * 100, 100));
        }
    }
    SECTION("zero key and zero template give zero delta") {
        BinaryTemplate z;
        z.bits = BitVector(1536);
        z.stage = TemplateStage::Masked;
        const Commitment zc = enroll(z, SecretKey{BitVector(300)}, fx.h, fx.gen, fx.cfg, "c");
        CHECK(zc.delta.popcount() == 0);
    }
    SECTION("different keys produce different deltas and hashes") {
        const Commitment c2 = enroll(t, generate_key_seeded(3, 3), fx.h, fx.gen, fx.cfg, "c");
        CHECK(c2.delta != c.delta);
        CHECK(digest_hex(c2.key_hash) != digest_hex(c.key_hash));
    }
    SECTION("stage and length contracts") {
        BinaryTemplate wrong = t;
        wrong.stage = TemplateStage::Permuted;
        CHECK_THROWS_AS(enroll(wrong, key, fx.h, fx.gen, fx.cfg, "c"), std::invalid_argument);
        CHECK_THROWS_AS(enroll(t, generate_key_seeded(2, 2), fx.h, fx.gen, fx.cfg, "c"),
                        std::invalid_argument);
    }
    SECTION("delta looks random: popcount near half of 1560") {
        // key codewords act as one-time pads over the blocks
        const auto pc = static_cast<double>(c.delta.popcount());
        CHECK(std::abs(pc - 780.0) < 100.0);
    }
}

TEST_CASE("retrieval recovers the key from the exact template") {
    const Fixture fx;
    const BinaryTemplate t = fx.masked_template(5);
    const SecretKey key = generate_key_seeded(3, 6);
    const Commitment c = enroll(t, key, fx.h, fx.gen, fx.cfg, "bg2-z10");

    const RetrievalOutcome out = retrieve(t, c, fx.h, fx.g, fx.gen, fx.params, fx.cfg);
    REQUIRE(out.success);
    REQUIRE(out.key.has_value());
    CHECK(out.key->bits == key.bits);
    CHECK(out.block_iterations == std::vector<int>{1, 1, 1});
}

TEST_CASE("retrieval tolerates small corruption and rejects heavy corruption") {
    const Fixture fx;
    const BinaryTemplate t = fx.masked_template(7);
    const SecretKey key = generate_key_seeded(3, 8);
    const Commitment c = enroll(t, key, fx.h, fx.gen, fx.cfg, "bg2-z10");

    SECTION("5% flips still succeed") {
        const RetrievalOutcome out =
            retrieve(corrupt(t, 0.05, 100), c, fx.h, fx.g, fx.gen, fx.params, fx.cfg);
        CHECK(out.success);
        CHECK(out.key->bits == key.bits);
    }
    SECTION("30% flips fail and expose no key") {
        const RetrievalOutcome out =
            retrieve(corrupt(t, 0.30, 100), c, fx.h, fx.g, fx.gen, fx.params, fx.cfg);
        CHECK_FALSE(out.success);
        CHECK_FALSE(out.key.has_value());
    }
}

TEST_CASE("hash binding catches a single wrong key bit") {
    const Fixture fx;
    const BinaryTemplate t = fx.masked_template(9);
    const SecretKey key = generate_key_seeded(3, 10);
    Commitment c = enroll(t, key, fx.h, fx.gen, fx.cfg, "bg2-z10");

    // tamper: swap in the hash of a key differing in one bit
    SecretKey other = key;
    other.bits.flip(0);
    c.key_hash = hash_key(other);
    const RetrievalOutcome out = retrieve(t, c, fx.h, fx.g, fx.gen, fx.params, fx.cfg);
    CHECK_FALSE(out.success); // blocks decode fine, hash refuses
    CHECK(out.block_converged == std::vector<bool>{true, true, true});
}

TEST_CASE("blocks decode independently") {
    const Fixture fx;
    const BinaryTemplate t = fx.masked_template(11);
    const SecretKey key = generate_key_seeded(3, 12);
    const Commitment c = enroll(t, key, fx.h, fx.gen, fx.cfg, "bg2-z10");

    // destroy only the middle block
    BinaryTemplate bad = t;
    SplitMix64 rng(13);
    for (std::size_t i = 512; i < 1024; ++i)
        if (rng.uniform() < 0.5) bad.bits.flip(i);
    const RetrievalOutcome out = retrieve(bad, c, fx.h, fx.g, fx.gen, fx.params, fx.cfg);
    CHECK_FALSE(out.success);
    REQUIRE(out.block_converged.size() == 3);
    CHECK(out.block_converged[0]);
    CHECK(out.block_converged[2]);
}

TEST_CASE("metadata mismatch is refused before any decoding") {
    const Fixture fx;
    const BinaryTemplate t = fx.masked_template(14);
    const SecretKey key = generate_key_seeded(3, 15);
    const Commitment c = enroll(t, key, fx.h, fx.gen, fx.cfg, "bg2-z10");

    PipelineConfig other = fx.cfg;
    other.perm_seed = 999;
    CHECK_THROWS_AS(retrieve(t, c, fx.h, fx.g, fx.gen, fx.params, other), MetadataMismatch);
    PipelineConfig other_q = fx.cfg;
    other_q.q = 8;
    CHECK_THROWS_AS(retrieve(t, c, fx.h, fx.g, fx.gen, fx.params, other_q), MetadataMismatch);
}

TEST_CASE("commitment record round trip") {
    const Fixture fx;
    const BinaryTemplate t = fx.masked_template(16);
    const SecretKey key = generate_key_seeded(3, 17);
    const Commitment c = enroll(t, key, fx.h, fx.gen, fx.cfg, "bg2-z10", "params-7");

    std::stringstream buf;
    save_commitment(c, buf);
    const Commitment r = load_commitment(buf);
    CHECK(r.version == 1);
    CHECK(digest_hex(r.key_hash) == digest_hex(c.key_hash));
    CHECK(r.delta == c.delta);
    CHECK(r.q == c.q);
    CHECK(r.m == c.m);
    CHECK(r.perm_seed == c.perm_seed);
    CHECK(r.mask_seed == c.mask_seed);
    CHECK(r.kappa == c.kappa);
    CHECK(r.code_id == "bg2-z10");
    CHECK(r.decoder_params_id == "params-7");

    // the loaded record still retrieves
    const RetrievalOutcome out = retrieve(t, r, fx.h, fx.g, fx.gen, fx.params, fx.cfg);
    CHECK(out.success);

    SECTION("wrong hash algorithm is rejected") {
        std::string text = buf.str();
        save_commitment(c, buf);
        nlohmann::json j = nlohmann::json::parse(text);
        j["hash_alg"] = "md5";
        std::istringstream in(j.dump());
        CHECK_THROWS_WITH(load_commitment(in), Catch::Matchers::ContainsSubstring("hash"));
    }
    SECTION("truncated record is a parse error") {
        std::istringstream in("{\"version\":1");
        CHECK_THROWS(load_commitment(in));
    }
}

TEST_CASE("digest hex round trip") {
    const Digest d = sha256({1, 2, 3});
    CHECK(digest_from_hex(digest_hex(d)) == d);
    CHECK_THROWS(digest_from_hex("abcd"));
}
