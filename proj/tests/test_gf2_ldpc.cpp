#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "biokey/base_graph.hpp"
#include "biokey/bitvec.hpp"
#include "biokey/generator.hpp"
#include "biokey/parity_check.hpp"
#include "biokey/prng.hpp"

using namespace biokey;

namespace {

const std::string kBg2Path = std::string(BIOKEY_ASSET_DIR) + "/bg2_z10.csv";

// Dense O(r*n) syndrome oracle, independent of the sparse path.
BitVector dense_syndrome(const ParityCheck& h, const BitVector& word) {
    std::vector<std::vector<int>> dense(static_cast<std::size_t>(h.r),
                                        std::vector<int>(static_cast<std::size_t>(h.n), 0));
    for (int c = 0; c < h.r; ++c)
        for (int v : h.rows_adj[static_cast<std::size_t>(c)]) dense[c][v] = 1;
    BitVector s(static_cast<std::size_t>(h.r));
    for (int c = 0; c < h.r; ++c) {
        int acc = 0;
        for (int v = 0; v < h.n; ++v) acc ^= dense[c][v] & (word.get(v) ? 1 : 0);
        s.set(static_cast<std::size_t>(c), acc != 0);
    }
    return s;
}

// Random H with guaranteed full row rank (diagonal forced).
ParityCheck random_full_rank(int r, int n, SplitMix64& rng) {
    std::vector<std::pair<int, int>> edges;
    for (int c = 0; c < r; ++c) {
        edges.emplace_back(c, c);
        for (int v = 0; v < n; ++v)
            if (v != c && rng.uniform() < 0.3) edges.emplace_back(c, v);
    }
    return make_parity_check(r, n, edges);
}

} // namespace

TEST_CASE("bundled BG2 asset has the published geometry") {
    const BaseGraph bg = load_base_graph(kBg2Path);
    CHECK(bg.rows == 42);
    CHECK(bg.cols == 52);
    CHECK(bg.lifting_set_id == 3);
    CHECK(bg.entries.size() == 197);
}

TEST_CASE("degenerate base graph with no entries is valid") {
    std::istringstream in("1,1,0\n");
    const BaseGraph bg = load_base_graph(in);
    CHECK(bg.rows == 1);
    CHECK(bg.cols == 1);
    CHECK(bg.entries.empty());
}

TEST_CASE("base graph loader rejects bad input") {
    SECTION("column out of bounds") {
        std::istringstream in("2,2,0\n0,2,1\n");
        CHECK_THROWS_WITH(load_base_graph(in), Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("duplicate entry") {
        std::istringstream in("2,2,0\n0,1,1\n0,1,3\n");
        CHECK_THROWS_WITH(load_base_graph(in), Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("malformed line carries its number") {
        std::istringstream in("2,2,0\n0,x,1\n");
        CHECK_THROWS_WITH(load_base_graph(in), Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("negative shift") {
        std::istringstream in("2,2,0\n0,1,-3\n");
        CHECK_THROWS(load_base_graph(in));
    }
}

TEST_CASE("lifting BG2 at z=10 yields the (520,100) code") {
    const BaseGraph bg = load_base_graph(kBg2Path);
    const ParityCheck h = lift(bg, 10);
    CHECK(h.n == 520);
    CHECK(h.r == 420);
    CHECK(h.edge_count() == 1970);
}

TEST_CASE("unit lifting collapses shifts to the base adjacency") {
    const BaseGraph bg = load_base_graph(kBg2Path);
    const ParityCheck h = lift(bg, 1);
    CHECK(h.n == 52);
    CHECK(h.r == 42);
    CHECK(h.edge_count() == 197);
    for (const auto& e : bg.entries) {
        const auto& row = h.rows_adj[static_cast<std::size_t>(e.row)];
        CHECK(std::find(row.begin(), row.end(), e.col) != row.end());
    }
}

TEST_CASE("zero shift lifts to an identity block") {
    BaseGraph bg;
    bg.rows = 1;
    bg.cols = 1;
    bg.entries = {{0, 0, 0}};
    const ParityCheck h = lift(bg, 4);
    REQUIRE(h.n == 4);
    for (int t = 0; t < 4; ++t) {
        REQUIRE(h.rows_adj[static_cast<std::size_t>(t)].size() == 1);
        CHECK(h.rows_adj[static_cast<std::size_t>(t)][0] == t);
    }
}

TEST_CASE("lift rejects z=0 and edge count scales with z") {
    const BaseGraph bg = load_base_graph(kBg2Path);
    CHECK_THROWS_AS(lift(bg, 0), std::invalid_argument);
    for (int z : {1, 2, 3, 7}) {
        CHECK(lift(bg, z).edge_count() == bg.entries.size() * static_cast<std::size_t>(z));
    }
}

TEST_CASE("generator for lifted BG2 is the rate-100/520 systematic encoder") {
    const ParityCheck h = lift(load_base_graph(kBg2Path), 10);
    const GeneratorMatrix g = derive_generator(h);
    CHECK(g.k == 100);
    CHECK(g.n == 520);

    SplitMix64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const BitVector msg = BitVector::random(100, rng);
        const BitVector cw = encode(g, msg);
        CHECK(syndrome(h, cw).popcount() == 0);
        CHECK(extract_message(g, cw) == msg);
    }
}

TEST_CASE("repetition code [1 1]") {
    const ParityCheck h = make_parity_check(1, 2, {{0, 0}, {0, 1}});
    const GeneratorMatrix g = derive_generator(h);
    CHECK(g.k == 1);
    REQUIRE(g.info_positions.size() == 1);
    BitVector one(1);
    one.set(0, true);
    const BitVector cw = encode(g, one);
    CHECK(cw.get(0));
    CHECK(cw.get(1));
}

TEST_CASE("exhaustive syndrome check on a random (16,8) code") {
    SplitMix64 rng(42);
    const ParityCheck h = random_full_rank(8, 16, rng);
    const GeneratorMatrix g = derive_generator(h);
    REQUIRE(g.k == 8);
    for (unsigned m = 0; m < 256; ++m) {
        BitVector msg(8);
        for (int i = 0; i < 8; ++i) msg.set(static_cast<std::size_t>(i), (m >> i) & 1u);
        CHECK(syndrome(h, encode(g, msg)).popcount() == 0);
    }
}

TEST_CASE("rank-deficient H is rejected with the rank in the message") {
    // two identical rows
    const ParityCheck h = make_parity_check(2, 3, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK_THROWS_WITH(derive_generator(h), Catch::Matchers::ContainsSubstring("rank 1"));
}

TEST_CASE("encoding is GF(2)-linear") {
    const ParityCheck h = lift(load_base_graph(kBg2Path), 10);
    const GeneratorMatrix g = derive_generator(h);
    SplitMix64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const BitVector m1 = BitVector::random(100, rng);
        const BitVector m2 = BitVector::random(100, rng);
        CHECK(encode(g, m1 ^ m2) == (encode(g, m1) ^ encode(g, m2)));
    }
    // all-zero message maps to the all-zero codeword
    CHECK(encode(g, BitVector(100)).popcount() == 0);
}

TEST_CASE("unit message reproduces a generator row image") {
    const ParityCheck h = lift(load_base_graph(kBg2Path), 10);
    const GeneratorMatrix g = derive_generator(h);
    BitVector e0(100);
    e0.set(17, true);
    const BitVector cw = encode(g, e0);
    CHECK(cw.get(static_cast<std::size_t>(g.info_positions[17])));
    // and the codeword equals the sum decomposition from linearity
    BitVector half1(100), half2(100);
    half1.set(17, true);
    CHECK(encode(g, half1 ^ half2) == cw);
}

TEST_CASE("syndrome matches the dense oracle and flip linearity") {
    SplitMix64 rng(99);
    const ParityCheck h = random_full_rank(8, 16, rng);
    for (int trial = 0; trial < 50; ++trial) {
        const BitVector w = BitVector::random(16, rng);
        CHECK(syndrome(h, w) == dense_syndrome(h, w));
    }
    // flipping bit j of a codeword leaves exactly column j of H as syndrome
    const GeneratorMatrix g = derive_generator(h);
    BitVector cw = encode(g, BitVector::random(8, rng));
    cw.flip(5);
    const BitVector s = syndrome(h, cw);
    for (int c = 0; c < h.r; ++c) {
        const auto& row = h.rows_adj[static_cast<std::size_t>(c)];
        const bool has = std::find(row.begin(), row.end(), 5) != row.end();
        CHECK(s.get(static_cast<std::size_t>(c)) == has);
    }
    CHECK_THROWS_AS(syndrome(h, BitVector(15)), std::invalid_argument);
}

TEST_CASE("alist round trip preserves adjacency") {
    const ParityCheck h = lift(load_base_graph(kBg2Path), 10);
    std::stringstream buf;
    save_alist(h, buf);
    const ParityCheck h2 = load_alist(buf);
    CHECK(h2.n == h.n);
    CHECK(h2.r == h.r);
    CHECK(h2.rows_adj == h.rows_adj);
    CHECK(h2.cols_adj == h.cols_adj);
}

TEST_CASE("alist with degree declarations below actual is rejected") {
    const ParityCheck h = make_parity_check(2, 4, {{0, 0}, {0, 1}, {1, 2}, {1, 3}});
    std::stringstream buf;
    save_alist(h, buf);
    std::string text = buf.str();
    // corrupt the declared max column degree to 0 while columns still list entries
    const auto pos = text.find("\n1 2\n");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 5, "\n0 2\n");
    std::istringstream in(text);
    CHECK_THROWS(load_alist(in));
}

TEST_CASE("hand-written 3x7 Hamming alist loads with 12 edges") {
    const std::string alist =
        "7 3\n"
        "3 4\n"
        "2 3 2 2 1 1 1\n"
        "4 4 4\n"
        "1 3 0\n1 2 3\n1 2 0\n2 3 0\n1 0 0\n2 0 0\n3 0 0\n"
        "1 2 3 5\n2 3 4 6\n1 2 4 7\n";
    std::istringstream in(alist);
    const ParityCheck h = load_alist(in);
    CHECK(h.n == 7);
    CHECK(h.r == 3);
    CHECK(h.edge_count() == 12);
}

TEST_CASE("alist with inconsistent row/column adjacency is rejected") {
    const std::string alist =
        "7 3\n"
        "3 4\n"
        "2 3 2 2 1 1 1\n"
        "4 4 4\n"
        "1 3 0\n1 2 3\n1 2 0\n2 3 0\n1 0 0\n2 0 0\n3 0 0\n"
        "1 2 3 5\n2 3 4 6\n1 2 4 6\n"; // row 3 cites column 6, columns cite 7
    std::istringstream in(alist);
    CHECK_THROWS(load_alist(in));
}
