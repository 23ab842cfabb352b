#pragma once

// Shared test utilities: random parameter draws, finite differences, and a
// longhand transliteration of the L = 2 chain equations kept independent of
// the library implementation.

#include <cmath>
#include <random>
#include <vector>

#include "cellodeg/cellodeg.hpp"

namespace testutil {

using namespace cellodeg;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Order-1 synthetic rates; every magnitude is a modelling choice, none come
/// from measurements.
inline TParams random_t_params(std::mt19937_64& rng, double rate_lo = 0.2, double rate_hi = 1.5) {
    TParams p;
    auto r = [&] { return uniform(rng, rate_lo, rate_hi); };
    p.b1 = r();
    p.d1 = r();
    p.b2 = r();
    p.d2 = r();
    p.alpha = r();
    p.beta = r();
    p.q = r();
    p.theta_r = uniform(rng, 0.0, 1.0);
    p.theta_p = uniform(rng, 0.05, 0.95);
    p.gamma_r = r();
    p.gamma_rho = r();
    p.gamma = r();
    p.gamma_p = r();
    p.gamma_n = r();
    p.mu = r();
    p.m1 = uniform(rng, 0.5, 2.0);
    p.m2 = uniform(rng, 0.5, 2.0);
    p.mc = uniform(rng, 0.5, 2.0);
    p.r = r();
    p.n_bar = uniform(rng, 0.5, 2.0);
    return p.validated();
}

inline MTParams random_mt_params(std::mt19937_64& rng, int M, bool diagonal_nu = false,
                                 double theta_p_max = 0.95) {
    MTParams p;
    p.M = M;
    auto r = [&] { return uniform(rng, 0.2, 1.5); };
    auto fill = [&](std::vector<double>& v, double lo, double hi) {
        v.resize(M);
        for (double& x : v) x = uniform(rng, lo, hi);
    };
    fill(p.b1, 0.2, 1.5);
    fill(p.d1, 0.2, 1.5);
    fill(p.b2, 0.2, 1.5);
    fill(p.d2, 0.2, 1.5);
    fill(p.alpha, 0.2, 1.5);
    fill(p.beta, 0.2, 1.5);
    fill(p.q, 0.2, 1.5);
    fill(p.theta_r, 0.0, 1.0);
    fill(p.theta_p, 0.05, theta_p_max);
    fill(p.gamma, 0.2, 1.5);
    fill(p.gamma_n, 0.2, 1.5);
    fill(p.mu, 0.2, 1.5);
    fill(p.m1, 0.5, 2.0);
    fill(p.m2, 0.5, 2.0);
    fill(p.n_bar, 0.5, 2.0);
    p.gamma_r = r();
    p.gamma_rho = r();
    p.gamma_p = r();
    p.r = r();
    p.mc = uniform(rng, 0.5, 2.0);
    p.nu_flat.assign(static_cast<std::size_t>(M) * M, 0.0);
    if (diagonal_nu) {
        for (int i = 0; i < M; ++i) p.nu(i, i) = 1.0;
    } else {
        for (int j = 0; j < M; ++j) {
            double col = 0.0;
            std::vector<double> w(M);
            for (int i = 0; i < M; ++i) {
                w[i] = uniform(rng, 0.1, 1.0);
                col += w[i];
            }
            for (int i = 0; i < M; ++i) p.nu(i, j) = w[i] / col;
        }
    }
    return p.validated();
}

inline NSParams random_ns_params(std::mt19937_64& rng, int L, double rate_lo = 0.1,
                                 double rate_hi = 0.6) {
    auto r = [&] { return uniform(rng, rate_lo, rate_hi); };
    NSParams p = NSParams::make_uniform(
        L, /*b1*/ r(), /*d1*/ uniform(rng, 0.3, 1.0), /*b2*/ r(), /*d21*/ uniform(rng, 0.3, 1.0),
        /*beta*/ r(), /*sigma*/ r(), /*gamma_r*/ r(), /*d22*/ r(), /*alpha*/ r(), /*q*/ r(),
        /*gamma_rho*/ uniform(rng, 0.3, 1.0), /*r_total*/ 0.0, /*m1*/ uniform(rng, 0.5, 2.0),
        /*m2*/ uniform(rng, 0.5, 2.0), /*mc*/ uniform(rng, 0.5, 2.0),
        /*theta_r*/ uniform(rng, 0.0, 1.0), /*theta_p*/ uniform(rng, 0.05, 0.95),
        /*gamma*/ r(), /*gamma_p*/ uniform(rng, 0.3, 1.0), /*gamma_n*/ r(),
        /*mu*/ r(), /*n_bar*/ uniform(rng, 0.5, 2.0));
    for (int l = 1; l <= L; ++l) p.r0[l - 1] = uniform(rng, 0.0, 0.5);
    return p.validated();
}

/// Admissible random chain state: nonnegative fields with occupied sites not
/// exceeding available sites.
inline NSState random_ns_state(std::mt19937_64& rng, const NSParams& par, double scale = 1.0) {
    NSState s(par.idx);
    par.idx.for_each([&](int l, int i) { s.N_ref(l, i) = uniform(rng, 0.0, scale); });
    par.idx.for_each_attached([&](int l, int i) {
        s.e22_ref(l, i) = uniform(rng, 0.0, 0.9) * par.m2 * i * s.N(l, i);
    });
    s.e1 = uniform(rng, 0.0, scale);
    s.e21 = uniform(rng, 0.0, scale);
    s.p = uniform(rng, 0.0, scale);
    s.n = uniform(rng, 0.0, scale);
    return s;
}

inline double rel_err(double got, double want) {
    const double scale = std::max(std::abs(want), std::abs(got));
    return scale == 0.0 ? 0.0 : std::abs(got - want) / scale;
}

/// Longhand chain-system derivative for L = 2, written term by term from the
/// transition rates; the five cells are spelled out with no index machinery.
struct NsL2Oracle {
    // state
    double N10, N11, N20, N21, N22;
    double E11, E21, E22;  // e22 on (1,1), (2,1), (2,2)
    double e1, e21, p, n;

    // derivative, same layout
    double dN10, dN11, dN20, dN21, dN22;
    double dE11, dE21, dE22;
    double de1, de21, dp, dn;

    void eval(const NSParams& par) {
        auto beta = [&](int l, int i) { return par.beta(l, i); };
        auto sigma = [&](int l, int i) { return par.sigma(l, i); };
        auto g_r = [&](int l, int i) { return par.gamma_r(l, i); };
        auto d22 = [&](int l, int i) { return par.d22(l, i); };
        auto alpha = [&](int l, int i) { return par.alpha(l, i); };
        auto q = [&](int l, int i) { return par.q(l, i); };
        auto g_rho = [&](int l, int i) { return par.gamma_rho(l, i); };
        const double m1 = par.m1, m2 = par.m2, mc = par.mc;

        const double S11 = 1 * N11 - E11 / m2;
        const double S21 = 1 * N21 - E21 / m2;
        const double S22 = 2 * N22 - E22 / m2;

        de1 = par.b1 * n - par.d1 * e1;

        de21 = par.b2 * n - (beta(1, 1) * S11 + beta(2, 1) * S21 + beta(2, 2) * S22) * e21 +
               sigma(1, 1) * E11 + sigma(2, 1) * E21 + sigma(2, 2) * E22 - par.d21 * e21;

        dE11 = beta(1, 1) * S11 * e21 - (sigma(1, 1) + d22(1, 1) + g_r(1, 1)) * E11;
        dE21 = beta(2, 1) * S21 * e21 - (sigma(2, 1) + d22(2, 1) + g_r(2, 1)) * E21;
        dE22 = beta(2, 2) * S22 * e21 - (sigma(2, 2) + d22(2, 2) + g_r(2, 2)) * E22;

        auto ahat = [&](int l, int i) { return alpha(l, i) * (l - i) / m1; };
        auto ghat = [&](int l, int i) { return i * g_r(l, i); };
        auto qhat = [&](int l, int i) { return q(l, i) / m2; };
        auto that = [&](int l, int i) { return par.theta_r * (sigma(l, i) + d22(l, i)) / m2; };

        // (1,0): influx, site creation out, site decay in from (1,1),
        // cleave in from (2,0) [no attached mass at i=0], unusable-site in
        // from (1,1), chain decay.
        dN10 = par.influx(1) - ahat(1, 0) * N10 * e1 + ghat(1, 1) * N11 + that(1, 1) * E11 -
               g_rho(1, 0) * N10;
        // (1,1): site creation in from (1,0); cleave in from (2,1); cleave out
        // to (0,1); site decay and unusable-site out.
        dN11 = ahat(1, 0) * N10 * e1 - ghat(1, 1) * N11 + qhat(2, 1) * E21 - qhat(1, 1) * E11 -
               that(1, 1) * E11 - g_rho(1, 1) * N11;
        // (2,0)
        dN20 = par.influx(2) - ahat(2, 0) * N20 * e1 + ghat(2, 1) * N21 + that(2, 1) * E21 -
               g_rho(2, 0) * N20;
        // (2,1): creation in from (2,0) and out to (2,2); decay in from (2,2);
        // cleave out to (1,1); unusable in from (2,2).
        dN21 = ahat(2, 0) * N20 * e1 - ahat(2, 1) * N21 * e1 + ghat(2, 2) * N22 - ghat(2, 1) * N21 -
               qhat(2, 1) * E21 + that(2, 2) * E22 - that(2, 1) * E21 - g_rho(2, 1) * N21;
        // (2,2): creation in from (2,1); cleave out to (1,2) leaves the
        // triangle; site decay and unusable-site out.
        dN22 = ahat(2, 1) * N21 * e1 - ghat(2, 2) * N22 - qhat(2, 2) * E22 - that(2, 2) * E22 -
               g_rho(2, 2) * N22;

        const double produced = mc * (qhat(1, 1) * E11 + qhat(2, 1) * E21 + qhat(2, 2) * E22);
        dp = par.theta_p * produced - par.gamma * n * p - par.gamma_p * p;
        dn = par.mu * n / (par.n_bar + n) * (par.gamma * p + (1 - par.theta_p) * produced) -
             par.gamma_n * n;
    }
};

}  // namespace testutil
