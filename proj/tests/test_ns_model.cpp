#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"

using namespace cellodeg;
using testutil::rel_err;

namespace {

NSParams zero_influx(NSParams p) {
    for (double& v : p.r0) v = 0.0;
    return p;
}

}  // namespace

TEST_CASE("all-zero state with no influx has a zero derivative") {
    std::mt19937_64 rng(23);
    const NSParams par = zero_influx(testutil::random_ns_params(rng, 3));
    NSState s(par.idx);
    const NSState d = ns_rhs(s, par);
    for (double v : d.chain_count) CHECK(v == 0.0);
    for (double v : d.attached_mass) CHECK(v == 0.0);
    CHECK(d.e1 == 0.0);
    CHECK(d.e21 == 0.0);
    CHECK(d.p == 0.0);
    CHECK(d.n == 0.0);
}

TEST_CASE("isolated chain pool only decays") {
    std::mt19937_64 rng(29);
    const NSParams par = zero_influx(testutil::random_ns_params(rng, 2));
    NSState s(par.idx);
    s.N_ref(1, 0) = 5.0;
    const NSState d = ns_rhs(s, par);
    CHECK(d.N(1, 0) == Catch::Approx(-5.0 * par.gamma_rho(1, 0)).epsilon(1e-15));
    par.idx.for_each([&](int l, int i) {
        if (!(l == 1 && i == 0)) CHECK(d.N(l, i) == 0.0);
    });
    for (double v : d.attached_mass) CHECK(v == 0.0);
    CHECK(d.e1 == 0.0);
    CHECK(d.n == 0.0);
}

TEST_CASE("generic L = 2 derivative matches the longhand oracle") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        NSParams par = testutil::random_ns_params(rng, 2, 0.1, 1.5);
        if (rep % 3 == 1) {
            // exercise per-cell tables too
            par.beta.set(2, 1, testutil::uniform(rng, 0.1, 1.5));
            par.q.set(2, 2, testutil::uniform(rng, 0.1, 1.5));
            par = par.validated();
        }

        testutil::NsL2Oracle o;
        o.N10 = testutil::uniform(rng, 0.0, 2.0);
        o.N11 = testutil::uniform(rng, 0.0, 2.0);
        o.N20 = testutil::uniform(rng, 0.0, 2.0);
        o.N21 = testutil::uniform(rng, 0.0, 2.0);
        o.N22 = testutil::uniform(rng, 0.0, 2.0);
        o.E11 = testutil::uniform(rng, 0.0, 1.0);
        o.E21 = testutil::uniform(rng, 0.0, 1.0);
        o.E22 = testutil::uniform(rng, 0.0, 1.0);
        o.e1 = testutil::uniform(rng, 0.0, 1.0);
        o.e21 = testutil::uniform(rng, 0.0, 1.0);
        o.p = testutil::uniform(rng, 0.0, 1.0);
        o.n = testutil::uniform(rng, 0.0, 1.0);
        o.eval(par);

        NSState s(par.idx);
        s.N_ref(1, 0) = o.N10;
        s.N_ref(1, 1) = o.N11;
        s.N_ref(2, 0) = o.N20;
        s.N_ref(2, 1) = o.N21;
        s.N_ref(2, 2) = o.N22;
        s.e22_ref(1, 1) = o.E11;
        s.e22_ref(2, 1) = o.E21;
        s.e22_ref(2, 2) = o.E22;
        s.e1 = o.e1;
        s.e21 = o.e21;
        s.p = o.p;
        s.n = o.n;

        const NSState d = ns_rhs(s, par);
        CHECK(rel_err(d.N(1, 0), o.dN10) < 1e-14);
        CHECK(rel_err(d.N(1, 1), o.dN11) < 1e-14);
        CHECK(rel_err(d.N(2, 0), o.dN20) < 1e-14);
        CHECK(rel_err(d.N(2, 1), o.dN21) < 1e-14);
        CHECK(rel_err(d.N(2, 2), o.dN22) < 1e-14);
        CHECK(rel_err(d.e22(1, 1), o.dE11) < 1e-14);
        CHECK(rel_err(d.e22(2, 1), o.dE21) < 1e-14);
        CHECK(rel_err(d.e22(2, 2), o.dE22) < 1e-14);
        CHECK(rel_err(d.e1, o.de1) < 1e-14);
        CHECK(rel_err(d.e21, o.de21) < 1e-14);
        CHECK(rel_err(d.p, o.dp) < 1e-14);
        CHECK(rel_err(d.n, o.dn) < 1e-14);
    }
}

TEST_CASE("aggregation totals") {
    std::mt19937_64 rng(37);
    const NSParams par = testutil::random_ns_params(rng, 2);

    SECTION("empty state aggregates to zero") {
        const NSAggregates a = aggregate(NSState(par.idx), par);
        CHECK(a.rho == 0.0);
        CHECK(a.e22_tot == 0.0);
        CHECK(a.T == 0.0);
        CHECK(a.S == 0.0);
    }

    SECTION("hand-evaluated sums") {
        NSState s(par.idx);
        s.N_ref(2, 1) = 3.0;
        s.N_ref(1, 0) = 5.0;
        s.e22_ref(2, 1) = par.m2;
        const NSAggregates a = aggregate(s, par);
        CHECK(a.rho == Catch::Approx(11.0 * par.mc).epsilon(1e-15));
        CHECK(a.T == Catch::Approx(3.0).epsilon(1e-15));
        CHECK(a.e22_tot == Catch::Approx(par.m2).epsilon(1e-15));
        CHECK(a.S == Catch::Approx(2.0).epsilon(1e-15));
    }

    SECTION("site identity T = S + e22/m2 for random admissible states") {
        for (int rep = 0; rep < 30; ++rep) {
            const NSState s = testutil::random_ns_state(rng, par);
            const NSAggregates a = aggregate(s, par);
            CHECK(rel_err(a.T, a.S + a.e22_tot / par.m2) < 1e-12);
        }
    }
}

TEST_CASE("reduction to the aggregated record") {
    std::mt19937_64 rng(41);
    const NSParams par = testutil::random_ns_params(rng, 2);

    SECTION("zero state maps to zero with the aggregate influx") {
        const SState s = reduce_to_s_state(NSState(par.idx), par);
        CHECK(s.e1 == 0.0);
        CHECK(s.rho == 0.0);
        CHECK(s.n == 0.0);
    }

    SECTION("fixture sums as in aggregation") {
        NSState s(par.idx);
        s.N_ref(2, 1) = 3.0;
        s.N_ref(1, 0) = 5.0;
        const SState red = reduce_to_s_state(s, par);
        CHECK(red.S == Catch::Approx(3.0).epsilon(1e-15));
        CHECK(red.rho == Catch::Approx(11.0 * par.mc).epsilon(1e-15));
    }

    SECTION("non-uniform rates are rejected") {
        NSParams bad = par;
        bad.alpha.set(1, 0, bad.alpha(1, 0) + 0.1);
        NSState s(par.idx);
        CHECK_THROWS_AS(reduce_to_s_state(s, bad), std::domain_error);
    }
}

TEST_CASE("derivative-level aggregation identity on a one-step-extended lattice") {
    // Aggregating the chain derivative reproduces the aggregated-system
    // derivative exactly, provided the lattice keeps the cells one cleave
    // step beyond the triangle (row l = 0 and the band i = l + 1).
    std::mt19937_64 rng(43);
    for (int L : {2, 5, 10}) {
        for (int rep = 0; rep < 12; ++rep) {
            const NSParams par = testutil::random_ns_params(rng, L, 0.1, 1.5);
            const SParams sp = s_params_from(par);
            const RectGrid grid(0, L, L);
            const NSStateRect x = embed(testutil::random_ns_state(rng, par), grid);

            const SState lhs = reduce_to_s_state(ns_rhs(x, par), par);
            const SState rhs = s_rhs(reduce_to_s_state(x, par), sp);

            CHECK(rel_err(lhs.e1, rhs.e1) < 1e-12);
            CHECK(rel_err(lhs.e21, rhs.e21) < 1e-12);
            CHECK(rel_err(lhs.e22, rhs.e22) < 1e-12);
            CHECK(rel_err(lhs.S, rhs.S) < 1e-12);
            CHECK(rel_err(lhs.rho, rhs.rho) < 1e-12);
            CHECK(rel_err(lhs.p, rhs.p) < 1e-12);
            CHECK(rel_err(lhs.n, rhs.n) < 1e-12);
        }
    }
}

TEST_CASE("truncating to the triangle breaks the identity once the diagonal is occupied") {
    // Documents why the lattice extension exists: the cleave transition from
    // fully-sited chains leaves the triangle.
    std::mt19937_64 rng(47);
    const NSParams par = testutil::random_ns_params(rng, 2, 0.3, 1.0);
    NSState s = testutil::random_ns_state(rng, par);
    s.N_ref(2, 2) = 1.0;
    s.e22_ref(2, 2) = 0.5 * par.m2 * 2.0;
    const SState lhs = reduce_to_s_state(ns_rhs(s, par), par);
    const SState rhs = s_rhs(reduce_to_s_state(s, par), s_params_from(par));
    // site flux lost on the diagonal: sum_l l q_hat(l,l) e22^{l,l}
    const double expected_gap = 1.0 * par.q_hat(1, 1) * s.e22(1, 1) +
                                2.0 * par.q_hat(2, 2) * s.e22(2, 2);
    const double lhs_T = lhs.S + lhs.e22 / par.m2;
    const double rhs_T = rhs.S + rhs.e22 / par.m2;
    CHECK(rhs_T - lhs_T == Catch::Approx(expected_gap).epsilon(1e-10));
}

TEST_CASE("aggregated trajectories track the aggregated system") {
    std::mt19937_64 rng(53);
    StepControl ctrl;
    ctrl.rel_tol = 1e-9;
    ctrl.abs_tol = 1e-12;

    const int L = 3;
    const NSParams par = testutil::random_ns_params(rng, L, 0.1, 0.5);
    const NSState s0 = testutil::random_ns_state(rng, par);
    const RectGrid grid = RectGrid::padded(L, 25);

    std::vector<double> y0;
    embed(s0, grid).pack(y0);
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(0.5 * k);

    NsSystem<RectGrid> ns_sys(grid, par);
    const Trajectory tn = integrate_through(ns_sys, y0, times, ctrl);

    std::vector<double> ys0;
    reduce_to_s_state(s0, par).pack(ys0);
    SSystem s_sys{s_params_from(par)};
    const Trajectory ts = integrate_through(s_sys, ys0, times, ctrl);

    NSStateRect scratch(grid);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        scratch.unpack(tn.states[k]);
        std::vector<double> agg;
        reduce_to_s_state(scratch, par).pack(agg);
        for (std::size_t c = 0; c < agg.size(); ++c) {
            const double scale = std::max({std::abs(agg[c]), std::abs(ts.states[k][c]), 1e-9});
            worst = std::max(worst, std::abs(agg[c] - ts.states[k][c]) / scale);
        }
    }
    CHECK(worst < 10.0 * ctrl.rel_tol);
}

TEST_CASE("nonnegative initial data stays above the tolerance floor") {
    std::mt19937_64 rng(59);
    StepControl ctrl;
    ctrl.rel_tol = 1e-8;
    ctrl.abs_tol = 1e-12;
    const NSParams par = testutil::random_ns_params(rng, 3, 0.1, 0.5);
    const NSState s0 = testutil::random_ns_state(rng, par);
    std::vector<double> y0;
    s0.pack(y0);
    NsSystem<IndexSetIL> sys(par.idx, par);
    const Trajectory traj = integrate(sys, y0, 0.0, 10.0, ctrl);
    double floor = 0.0;
    for (const auto& st : traj.states)
        for (double v : st) floor = std::min(floor, v);
    CHECK(floor >= -10.0 * ctrl.rel_tol);
}

TEST_CASE("site identity holds along accepted steps") {
    std::mt19937_64 rng(61);
    StepControl ctrl;
    ctrl.rel_tol = 1e-9;
    const NSParams par = testutil::random_ns_params(rng, 2, 0.1, 0.5);
    const NSState s0 = testutil::random_ns_state(rng, par);
    std::vector<double> y0;
    s0.pack(y0);
    NsSystem<IndexSetIL> sys(par.idx, par);
    const Trajectory traj = integrate(sys, y0, 0.0, 5.0, ctrl);
    NSState scratch(par.idx);
    for (const auto& st : traj.states) {
        scratch.unpack(st);
        const NSAggregates a = aggregate(scratch, par);
        CHECK(rel_err(a.T, a.S + a.e22_tot / par.m2) < 1e-10);
    }
}
