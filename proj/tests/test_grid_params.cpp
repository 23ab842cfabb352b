#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "helpers.hpp"

using namespace cellodeg;

TEST_CASE("triangle index set membership and enumeration") {
    IndexSetIL idx(4);
    CHECK(idx.contains(1, 0));
    CHECK(idx.contains(4, 4));
    CHECK(idx.contains(3, 0));
    CHECK_FALSE(idx.contains(0, 0));
    CHECK_FALSE(idx.contains(5, 0));
    CHECK_FALSE(idx.contains(2, 3));  // more sites than units
    CHECK_FALSE(idx.contains(2, -1));

    // L(L+3)/2 members, enumerated row-major with distinct offsets
    CHECK(idx.size() == 4 * 7 / 2);
    std::set<std::size_t> seen;
    std::size_t expected = 0;
    idx.for_each([&](int l, int i) {
        CHECK(idx.offset(l, i) == expected);
        seen.insert(idx.offset(l, i));
        ++expected;
    });
    CHECK(seen.size() == idx.size());

    CHECK(idx.attached_size() == 4 * 5 / 2);
    CHECK_FALSE(idx.contains_attached(2, 0));
    CHECK(idx.contains_attached(2, 2));
}

TEST_CASE("rectangular lattice covers the triangle plus margins") {
    RectGrid g = RectGrid::padded(3, 5);
    CHECK(g.min_length() == -4);
    CHECK(g.max_length() == 3);
    CHECK(g.max_sites() == 8);
    CHECK(g.contains(0, 7));
    CHECK(g.contains(-4, 0));
    CHECK_FALSE(g.contains(-5, 0));
    CHECK_FALSE(g.contains(4, 0));
    std::size_t count = 0;
    g.for_each([&](int, int) { ++count; });
    CHECK(count == g.size());
}

TEST_CASE("local tables broadcast and reject out-of-triangle overrides") {
    IndexSetIL idx(3);
    LocalTable t(idx, 0.7);
    CHECK(t.uniform());
    CHECK(t(2, 1) == 0.7);
    CHECK(t(-3, 9) == 0.7);  // uniform value everywhere, margins included

    t.set(2, 1, 0.9);
    CHECK_FALSE(t.uniform());
    CHECK(t(2, 1) == 0.9);
    CHECK(t(1, 0) == 0.7);
    CHECK_THROWS_AS(t(0, 0), std::domain_error);
    CHECK_THROWS_AS(t.set(4, 0, 1.0), std::out_of_range);

    // setting the override back restores uniformity
    t.set(2, 1, 0.7);
    CHECK(t.uniform());
}

TEST_CASE("t-parameter validation accepts the all-ones record") {
    TParams p;
    p.b1 = p.d1 = p.b2 = p.d2 = 1;
    p.alpha = p.beta = p.q = 1;
    p.theta_r = p.theta_p = 0.5;
    p.gamma_r = p.gamma_rho = p.gamma = p.gamma_p = p.gamma_n = 1;
    p.mu = 1;
    p.m1 = p.m2 = p.mc = 1;
    p.r = 1;
    p.n_bar = 1;
    CHECK_NOTHROW(p.validated());
}

TEST_CASE("validation reports the violated field") {
    TParams p;
    p.n_bar = 1;

    SECTION("negative rate named") {
        p.beta = -0.5;
        CHECK_THROWS_WITH(p.validated(), Catch::Matchers::ContainsSubstring("beta"));
    }
    SECTION("theta outside [0,1]") {
        p.theta_p = 1.5;
        CHECK_THROWS_WITH(p.validated(), Catch::Matchers::ContainsSubstring("theta_p"));
    }
    SECTION("vanishing enzyme decay leaves k1 undefined") {
        p.d1 = 0.0;
        CHECK_THROWS_WITH(p.validated(), Catch::Matchers::ContainsSubstring("k1 undefined"));
    }
}

TEST_CASE("ns-parameter validation mirrors the scalar checks") {
    std::mt19937_64 rng(7);
    NSParams p = testutil::random_ns_params(rng, 3);
    CHECK_NOTHROW(p.validated());

    SECTION("d1 = 0 leaves k1 undefined") {
        p.d1 = 0.0;
        CHECK_THROWS_WITH(p.validated(), Catch::Matchers::ContainsSubstring("k1 undefined"));
    }
    SECTION("per-cell negative entry is reported with its indices") {
        p.alpha.set(2, 1, -1.0);
        CHECK_THROWS_WITH(p.validated(), Catch::Matchers::ContainsSubstring("alpha[2,1]"));
    }
    SECTION("r0 length must match L") {
        p.r0.push_back(0.0);
        CHECK_THROWS(p.validated());
    }
}

TEST_CASE("sharing matrix columns must be stochastic") {
    std::mt19937_64 rng(11);
    MTParams p = testutil::random_mt_params(rng, 3);
    p.nu(0, 0) -= 0.1;  // column 1 now sums to 0.9
    CHECK_THROWS_WITH(p.validated(),
                      Catch::Matchers::ContainsSubstring("sharing matrix column 1 not stochastic"));
}

TEST_CASE("accepted sharing matrices have unit column sums") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        const MTParams p = testutil::random_mt_params(rng, 1 + rep % 5);
        for (int j = 0; j < p.M; ++j) {
            double col = 0.0;
            for (int i = 0; i < p.M; ++i) col += p.nu(i, j);
            CHECK(std::abs(col - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("derived coefficient vectors match independent arithmetic") {
    std::mt19937_64 rng(17);
    const MTParams p = testutil::random_mt_params(rng, 4);
    const TraitVectors v = p.vectors();
    for (int j = 0; j < p.M; ++j) {
        const double k1 = p.b1[j] / p.d1[j];
        const double k2 = p.b2[j] / p.d2[j];
        CHECK(v.A[j] == Catch::Approx(p.alpha[j] / p.m1[j] * k1).epsilon(1e-14));
        CHECK(v.B[j] == Catch::Approx(p.theta_r[j] * p.beta[j] / p.m2[j] * k2).epsilon(1e-14));
        CHECK(v.Q[j] == Catch::Approx(p.mc * p.q[j] * p.beta[j] / p.m2[j] * k2).epsilon(1e-14));
        CHECK(v.Theta[j] == Catch::Approx(p.theta_p[j] * v.Q[j]).epsilon(1e-14));
        CHECK(v.Gamma[j] == p.gamma[j]);
    }
}
