#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cellodeg/params.hpp"
#include "cellodeg/state.hpp"

namespace cellodeg {

/// Aggregated site-resolved system.
inline SState s_rhs(const SState& s, const SParams& p) {
    SState d;
    d.e1 = p.b1 * s.n - p.d1 * s.e1;
    d.e21 = p.b2 * s.n - p.beta * s.S * s.e21 + p.sigma * s.e22 - p.d21 * s.e21;
    d.e22 = p.beta * s.S * s.e21 - (p.sigma + p.d22 + p.gamma_r) * s.e22;
    d.S = p.alpha * (s.rho / p.mc - s.S - s.e22 / p.m2) * s.e1 / p.m1 -
          p.beta * s.S * s.e21 / p.m2 +
          ((1.0 - p.theta_r) * (p.sigma + p.d22) - p.gamma_rho) * s.e22 / p.m2 -
          (p.gamma_r + p.gamma_rho) * s.S;
    const double cleaved = p.mc * p.q * s.e22 / p.m2;
    d.rho = p.r - cleaved - p.gamma_rho * s.rho;
    d.p = p.theta_p * cleaved - p.gamma * s.n * s.p - p.gamma_p * s.p;
    d.n = p.mu * s.n / (p.n_bar + s.n) * (p.gamma * s.p + (1.0 - p.theta_p) * cleaved) -
          p.gamma_n * s.n;
    return d;
}

/// Lumped single-trait system.
inline TState t_rhs(const TState& s, const TParams& p) {
    TState d;
    d.e1 = p.b1 * s.n - p.d1 * s.e1;
    d.e2 = p.b2 * s.n - p.d2 * s.e2;
    d.T = p.alpha * (s.rho / p.mc - s.T) * s.e1 / p.m1 -
          p.theta_r * p.beta * s.T * s.e2 / p.m2 - (p.gamma_r + p.gamma_rho) * s.T;
    const double cleaved = p.q_hat() * s.T * s.e2;
    d.rho = p.r - cleaved - p.gamma_rho * s.rho;
    d.p = p.theta_p * cleaved - p.gamma * s.n * s.p - p.gamma_p * s.p;
    d.n = p.mu * s.n / (p.n_bar + s.n) * (p.gamma * s.p + (1.0 - p.theta_p) * cleaved) -
          p.gamma_n * s.n;
    return d;
}

/// Multi-trait lumped system. Consumption terms whose denominator vanishes
/// (nu = 0 and no competing population) contribute zero: no such cellobiose
/// stream exists.
inline MTState mt_rhs(const MTState& s, const MTParams& p) {
    if (s.traits() != p.M) throw std::invalid_argument("state/parameter trait count mismatch");
    MTState d(p.M);

    double site_creation = 0.0;  // sum_j alpha_hat^j e1^j
    double site_loss = 0.0;      // sum_j theta_r^j beta_hat^j e2^j
    double cleaved = 0.0;        // sum_j q_hat^j e2^j T
    double shared = 0.0;         // sum_j theta_p^j q_hat^j e2^j T
    double predation = 0.0;      // sum_j gamma^j n^j
    for (int j = 0; j < p.M; ++j) {
        site_creation += p.alpha_hat(j) * s.e1[j];
        site_loss += p.theta_r[j] * p.beta_hat(j) * s.e2[j];
        cleaved += p.q_hat(j) * s.e2[j] * s.T;
        shared += p.theta_p[j] * p.q_hat(j) * s.e2[j] * s.T;
        predation += p.gamma[j] * s.n[j];
    }

    for (int i = 0; i < p.M; ++i) {
        d.e1[i] = p.b1[i] * s.n[i] - p.d1[i] * s.e1[i];
        d.e2[i] = p.b2[i] * s.n[i] - p.d2[i] * s.e2[i];
    }
    d.T = (s.rho / p.mc - s.T) * site_creation - site_loss * s.T - p.gamma_hat_r() * s.T;
    d.rho = p.r - cleaved - p.gamma_rho * s.rho;
    d.p = shared - predation * s.p - p.gamma_p * s.p;

    for (int i = 0; i < p.M; ++i) {
        // shared pool: mu^i n^i gamma^i p / (n_bar^i + predation/gamma^i)
        double growth = 0.0;
        const double pool_den = p.gamma[i] * p.n_bar[i] + predation;
        if (pool_den > 0.0)
            growth += p.gamma[i] * p.gamma[i] * s.p / pool_den;
        // on-the-spot consumption of each trait's cleaving stream
        for (int j = 0; j < p.M; ++j) {
            double competitors = 0.0;
            for (int k = 0; k < p.M; ++k) competitors += p.nu(k, j) * s.n[k];
            const double den = p.nu(i, j) * p.n_bar[i] + competitors;
            if (den > 0.0)
                growth += (1.0 - p.theta_p[j]) * p.nu(i, j) * p.q_hat(j) * s.e2[j] * s.T / den;
        }
        d.n[i] = p.mu[i] * s.n[i] * growth - p.gamma_n[i] * s.n[i];
    }
    return d;
}

/// Place a single-trait state into slot `slot` (1-based) of an M-trait system;
/// the other traits get the same coefficients and zero populations.
inline std::pair<MTState, MTParams> embed_single_in_mt(const TState& s, const TParams& t,
                                                       int M, int slot) {
    if (slot < 1 || slot > M) throw std::invalid_argument("slot must be in [1, M]");
    MTParams mp = MTParams::replicate(t, M);
    MTState ms(M);
    ms.T = s.T;
    ms.rho = s.rho;
    ms.p = s.p;
    ms.e1[slot - 1] = s.e1;
    ms.e2[slot - 1] = s.e2;
    ms.n[slot - 1] = s.n;
    return {std::move(ms), std::move(mp)};
}

/// Packed-vector adapters.
struct SSystem {
    SParams par;
    void operator()(double, const std::vector<double>& y, std::vector<double>& dydt) const {
        SState s;
        s.unpack(y);
        s_rhs(s, par).pack(dydt);
    }
};

struct TSystem {
    TParams par;
    void operator()(double, const std::vector<double>& y, std::vector<double>& dydt) const {
        TState s;
        s.unpack(y);
        t_rhs(s, par).pack(dydt);
    }
};

struct MTSystem {
    MTParams par;
    void operator()(double, const std::vector<double>& y, std::vector<double>& dydt) const {
        MTState s(par.M);
        s.unpack(y);
        mt_rhs(s, par).pack(dydt);
    }
};

}  // namespace cellodeg
