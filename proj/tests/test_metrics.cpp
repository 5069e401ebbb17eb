#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "biokey/metrics.hpp"
#include "biokey/prng.hpp"

using namespace biokey;

TEST_CASE("gmr/fmr curves accumulate successes by iteration") {
    const std::vector<TrialOutcome> mated{{1}, {-1}, {3}, {2}};
    const std::vector<TrialOutcome> nonmated{{-1}, {-1}, {4}};
    const GmrFmrCurves c = gmr_fmr(mated, nonmated, 5);
    REQUIRE(c.gmr.size() == 5);
    CHECK_THAT(c.gmr[0], Catch::Matchers::WithinAbs(0.25, 1e-12));
    CHECK_THAT(c.gmr[1], Catch::Matchers::WithinAbs(0.50, 1e-12));
    CHECK_THAT(c.gmr[2], Catch::Matchers::WithinAbs(0.75, 1e-12));
    CHECK_THAT(c.gmr[4], Catch::Matchers::WithinAbs(0.75, 1e-12));
    CHECK(c.fmr[0] == 0.0);
    CHECK(c.fmr[2] == 0.0);
    CHECK_THAT(c.fmr[3], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
    // best GMR over the zero-FMR prefix is at iteration 3
    CHECK_THAT(c.gmr_at_zero_fmr, Catch::Matchers::WithinAbs(0.75, 1e-12));
    CHECK(c.gmr_at_zero_fmr_iteration == 3);
    CHECK(c.mated_trials == 4);
    CHECK(c.nonmated_trials == 3);

    SECTION("no zero-FMR iteration") {
        const GmrFmrCurves f = gmr_fmr(mated, {{1}}, 5);
        CHECK(f.gmr_at_zero_fmr == 0.0);
        CHECK(f.gmr_at_zero_fmr_iteration == 0);
    }
    SECTION("empty sets rejected") {
        CHECK_THROWS_AS(gmr_fmr({}, nonmated, 5), std::invalid_argument);
    }
}

TEST_CASE("decidability") {
    SECTION("hand value d' = 7") {
        ScoreStats s;
        s.mated = {0.0, 2.0};    // mean 1, var 1
        s.nonmated = {7.0, 9.0}; // mean 8, var 1
        CHECK_THAT(decidability(s), Catch::Matchers::WithinAbs(7.0, 1e-12));
    }
    SECTION("symmetric under distribution swap") {
        ScoreStats s;
        s.mated = {7.0, 9.0};
        s.nonmated = {0.0, 2.0};
        CHECK_THAT(decidability(s), Catch::Matchers::WithinAbs(7.0, 1e-12));
    }
    SECTION("invariant to a common shift, scales under a common stretch") {
        ScoreStats s;
        s.mated = {0.1, 0.2, 0.15};
        s.nonmated = {0.4, 0.5, 0.45};
        const double base = decidability(s);
        ScoreStats shifted = s;
        for (auto& x : shifted.mated) x += 3.0;
        for (auto& x : shifted.nonmated) x += 3.0;
        CHECK_THAT(decidability(shifted), Catch::Matchers::WithinAbs(base, 1e-9));
        ScoreStats scaled = s;
        for (auto& x : scaled.mated) x *= 10.0;
        for (auto& x : scaled.nonmated) x *= 10.0;
        CHECK_THAT(decidability(scaled), Catch::Matchers::WithinAbs(base, 1e-9));
    }
    SECTION("zero variance is an error") {
        ScoreStats s;
        s.mated = {1.0, 1.0};
        s.nonmated = {2.0, 2.0};
        CHECK_THROWS(decidability(s));
    }
}

TEST_CASE("degrees of freedom and entropy") {
    CHECK_THAT(dof(0.5, 0.05), Catch::Matchers::WithinAbs(100.0, 1e-9));
    CHECK_THAT(entropy_iid(100.0, 0.5), Catch::Matchers::WithinAbs(100.0, 1e-9));
    // operating-point example: E=0.4113, V=0.0202 -> DOF ~ 593
    CHECK_THAT(dof(0.4113, 0.0202), Catch::Matchers::WithinAbs(593.4, 1.0));
    // wider spread means fewer degrees of freedom
    CHECK(dof(0.5, 0.1) < dof(0.5, 0.05));
    CHECK(entropy_iid(500.0, 0.4) < 500.0);
    CHECK_THROWS_AS(dof(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(dof(0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(entropy_iid(0.0, 0.5), std::invalid_argument);
    SECTION("binary entropy endpoints and peak") {
        CHECK(binary_entropy(0.0) == 0.0);
        CHECK(binary_entropy(1.0) == 0.0);
        CHECK_THAT(binary_entropy(0.5), Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(binary_entropy(0.1761),
                   Catch::Matchers::WithinAbs(0.6715, 5e-4)); // 1 - 0.3285
    }
}

TEST_CASE("sphere-packing strength") {
    SECTION("t=0 gives the full entropy") {
        CHECK_THAT(sphere_packing_strength(100.0, 0.0), Catch::Matchers::WithinAbs(100.0, 1e-9));
        CHECK_THAT(sphere_packing_strength(537.3, 0.0), Catch::Matchers::WithinAbs(537.3, 1e-9));
    }
    SECTION("hand value for H=10, t=5") {
        // ball volume = 1+10+45+120+210+252 = 638; s = 10 - log2(638)
        const double expected = 10.0 - std::log2(638.0);
        CHECK_THAT(sphere_packing_strength(10.0, 5.0), Catch::Matchers::WithinAbs(expected, 1e-9));
    }
    SECTION("monotone non-increasing in t") {
        double prev = std::numeric_limits<double>::infinity();
        for (double t : {0.0, 10.0, 20.0, 40.0, 80.0}) {
            const double s = sphere_packing_strength(300.0, t);
            CHECK(s <= prev);
            prev = s;
        }
    }
    SECTION("large-scale values stay finite") {
        const double s = sphere_packing_strength(537.0, 94.0);
        CHECK(std::isfinite(s));
        CHECK(s > 0.0);
        CHECK(s < 537.0);
    }
    SECTION("domain") {
        CHECK_THROWS_AS(sphere_packing_strength(10.0, -1.0), std::invalid_argument);
        CHECK_THROWS_AS(sphere_packing_strength(10.0, 11.0), std::invalid_argument);
    }
}

TEST_CASE("gilbert-varshamov strength") {
    CHECK_THAT(gv_strength(100.0, 0.0), Catch::Matchers::WithinAbs(100.0, 1e-12));
    CHECK_THAT(gv_strength(100.0, 50.0), Catch::Matchers::WithinAbs(0.0, 1e-12));
    SECTION("d/H = 0.1761 gives about 0.3285 H") {
        for (double H : {100.0, 300.0, 537.0}) {
            CHECK_THAT(gv_strength(H, 0.1761 * H), Catch::Matchers::WithinAbs(0.3285 * H, 0.005 * H));
        }
    }
    CHECK_THROWS_AS(gv_strength(100.0, 60.0), std::invalid_argument);
    CHECK_THROWS_AS(gv_strength(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("system strength is capped by the key length") {
    CHECK(system_strength(300.0, 168.0) == 168.0);
    CHECK(system_strength(300.0, 478.0) == 300.0);
    const SecurityReport r = security_report(537.0, 94.0, 3);
    CHECK(r.key_bits == 300.0);
    CHECK(r.h_sys_sphere == std::min(300.0, r.s_sphere));
    CHECK(r.h_sys_gv == std::min(300.0, r.s_gv));
    SECTION("t=0 report recovers H on both bounds") {
        const SecurityReport z = security_report(250.0, 0.0, 3);
        CHECK_THAT(z.s_sphere, Catch::Matchers::WithinAbs(250.0, 1e-9));
        CHECK_THAT(z.s_gv, Catch::Matchers::WithinAbs(250.0, 1e-9));
        CHECK_THAT(z.h_sys_sphere, Catch::Matchers::WithinAbs(250.0, 1e-9));
    }
}

TEST_CASE("unlinkability") {
    SECTION("identical score sets are perfectly unlinkable") {
        const std::vector<double> scores{0.1, 0.2, 0.3, 0.4, 0.5, 0.2, 0.3};
        const LinkabilityReport r = unlinkability(scores, scores);
        CHECK(r.d_sys == 0.0);
        for (double d : r.d_local) CHECK(d == 0.0);
    }
    SECTION("disjoint supports are fully linkable") {
        std::vector<double> mated, nonmated;
        SplitMix64 rng(4);
        for (int i = 0; i < 2000; ++i) {
            mated.push_back(rng.uniform() * 0.3);
            nonmated.push_back(0.6 + rng.uniform() * 0.3);
        }
        const LinkabilityReport r = unlinkability(mated, nonmated);
        CHECK_THAT(r.d_sys, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
    SECTION("overlapping distributions land strictly between") {
        std::vector<double> mated, nonmated;
        SplitMix64 rng(5);
        for (int i = 0; i < 5000; ++i) {
            mated.push_back(rng.uniform() * 0.6);
            nonmated.push_back(0.3 + rng.uniform() * 0.6);
        }
        const LinkabilityReport r = unlinkability(mated, nonmated);
        CHECK(r.d_sys > 0.1);
        CHECK(r.d_sys < 0.9);
        for (double d : r.d_local) {
            CHECK(d >= 0.0);
            CHECK(d <= 1.0);
        }
    }
    SECTION("tiny omega drives linkability to zero") {
        std::vector<double> mated, nonmated;
        SplitMix64 rng(6);
        for (int i = 0; i < 1000; ++i) {
            mated.push_back(rng.uniform() * 0.5);
            nonmated.push_back(0.2 + rng.uniform() * 0.5);
        }
        const LinkabilityReport r = unlinkability(mated, nonmated, 100, 1e-6);
        // bins with nonmated mass give lr*omega <= 1; only nonmated-free
        // bins can contribute
        CHECK(r.d_sys <= unlinkability(mated, nonmated).d_sys);
    }
    SECTION("degenerate constant scores") {
        const std::vector<double> constant(10, 0.25);
        const LinkabilityReport r = unlinkability(constant, constant);
        CHECK(r.d_sys == 0.0);
        CHECK(r.bin_width > 0.0);
    }
    SECTION("validation") {
        CHECK_THROWS_AS(unlinkability({}, {0.1}), std::invalid_argument);
        CHECK_THROWS_AS(unlinkability({0.1}, {0.1}, 0), std::invalid_argument);
    }
}

TEST_CASE("report emitters") {
    SECTION("gmr/fmr csv") {
        const GmrFmrCurves c = gmr_fmr({{1}, {2}}, {{-1}}, 2);
        std::ostringstream out;
        write_gmr_fmr_csv(c, out);
        CHECK(out.str().find("iter,gmr,fmr") == 0);
        CHECK(out.str().find("1,0.5,0") != std::string::npos);
        CHECK(out.str().find("2,1,0") != std::string::npos);
    }
    SECTION("linkability csv") {
        const LinkabilityReport r = unlinkability({0.1, 0.2}, {0.8, 0.9}, 4);
        std::ostringstream out;
        write_linkability_csv(r, out);
        CHECK(out.str().find("score,d_local") == 0);
    }
    SECTION("scalar report json keys") {
        ScalarReport r;
        r.d_prime = 7.0;
        r.entropy_bits = 537.0;
        std::ostringstream out;
        write_scalar_report_json(r, out);
        const auto j = nlohmann::json::parse(out.str());
        CHECK(j.at("d_prime").get<double>() == 7.0);
        CHECK(j.at("H").get<double>() == 537.0);
        CHECK(j.contains("dof"));
        CHECK(j.contains("s_sphere"));
        CHECK(j.contains("s_gv"));
        CHECK(j.contains("h_sys"));
        CHECK(j.contains("d_sys"));
    }
}
