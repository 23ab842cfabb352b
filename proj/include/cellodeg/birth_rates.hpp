#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellodeg/params.hpp"

namespace cellodeg {

/// Quadratic denominator of the landing-site equilibrium:
/// P2(n) = c2 n^2 + c1 n + c0 with
///   c0 = gamma_r + gamma_rho
///   c1 = alpha k1 / m1 + theta_r beta k2 / m2
///   c2 = alpha q_hat k2 k1 / (mc gamma_rho m1).
struct Quadratic {
    double c0 = 0, c1 = 0, c2 = 0;
    double operator()(double x) const { return (c2 * x + c1) * x + c0; }
    double derivative(double x) const { return 2.0 * c2 * x + c1; }
};

inline Quadratic site_equilibrium_poly(const TParams& p) {
    Quadratic q;
    q.c0 = p.gamma_r + p.gamma_rho;
    q.c1 = p.alpha * p.k1() / p.m1 + p.theta_r * p.beta * p.k2() / p.m2;
    q.c2 = p.alpha * p.q_hat() * p.k2() * p.k1() / (p.mc * p.gamma_rho * p.m1);
    return q;
}

/// Fast-variable equilibrium of the lumped system at frozen population n.
struct TQuasiEquilibrium {
    double e1 = 0, e2 = 0, T = 0, rho = 0, p = 0;
};

inline TQuasiEquilibrium t_quasi_equilibrium(double n, const TParams& par) {
    if (n < 0.0) throw std::invalid_argument("population must be >= 0");
    TQuasiEquilibrium eq;
    eq.e1 = par.k1() * n;
    eq.e2 = par.k2() * n;
    const Quadratic P2 = site_equilibrium_poly(par);
    const double site_feed = par.alpha * par.r * par.k1() / (par.mc * par.gamma_rho * par.m1);
    eq.T = site_feed * n / P2(n);
    eq.rho = par.r / par.gamma_rho - par.q_hat() * par.k2() * eq.T * n / par.gamma_rho;
    eq.p = par.theta_p * par.q_hat() * par.k2() * eq.T * n / (par.gamma * n + par.gamma_p);
    return eq;
}

/// Constant K with B(n) = K n^2 Phi(n).
inline double t_birth_rate_K(const TParams& p) {
    return p.mu * p.q_hat() * p.k2() * p.alpha * p.r * p.k1() / (p.mc * p.gamma_rho * p.m1);
}

/// Phi(n) = (theta_p gamma/(gamma n + gamma_p) + 1 - theta_p) / ((n + n_bar) P2(n)).
inline double t_phi(double n, const TParams& p) {
    const Quadratic P2 = site_equilibrium_poly(p);
    const double share = p.theta_p * p.gamma / (p.gamma * n + p.gamma_p) + (1.0 - p.theta_p);
    return share / ((n + p.n_bar) * P2(n));
}

/// Quasi-steady-state birth rate of the lumped system.
inline double t_birth_rate(double n, const TParams& p) {
    if (n < 0.0) throw std::invalid_argument("population must be >= 0");
    if (n == 0.0) return 0.0;
    return t_birth_rate_K(p) * n * n * t_phi(n, p);
}

/// d/dn log(n Phi(n)): positive where the per-capita birth rate B(n)/n is
/// still increasing (the cooperative window).
inline double cooperation_indicator(double n, const TParams& p) {
    const Quadratic P2 = site_equilibrium_poly(p);
    const double gp = p.gamma * n + p.gamma_p;
    const double share = p.theta_p * p.gamma / gp + (1.0 - p.theta_p);
    // derivative of the sharing factor over itself, kept regular at gamma = 0
    const double share_term =
        p.theta_p * p.gamma * p.gamma / (gp * gp * share);
    return 1.0 / n - share_term - 1.0 / (n + p.n_bar) - P2.derivative(n) / P2(n);
}

/// Smallest positive root of the cooperation indicator: B(n)/n increases on
/// (0, n_*). Bracketing by doubling from 1e-6 n_bar, then bisection to a
/// relative width of 1e-12.
inline double cooperation_threshold(const TParams& p) {
    double lo = 1e-6 * p.n_bar;
    while (!(cooperation_indicator(lo, p) > 0.0)) {
        lo *= 0.5;
        if (lo < 1e-300)
            throw std::runtime_error("cooperation indicator not positive near n = 0");
    }
    double hi = 2.0 * lo;
    const double hi_cap = 1e12 * p.n_bar;
    while (cooperation_indicator(hi, p) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > hi_cap)
            throw std::runtime_error("B(n)/n increasing on tested range (no root up to 1e12 n_bar)");
    }
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (cooperation_indicator(mid, p) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Sensitivity of the small-population law to the sharing fraction:
/// d/d(theta_p) [K Phi(0)] = K / (n_bar (gamma_rho + gamma_r)) (gamma/gamma_p - 1).
inline double sharing_sensitivity(const TParams& p) {
    return t_birth_rate_K(p) / (p.n_bar * (p.gamma_rho + p.gamma_r)) *
           (p.gamma / p.gamma_p - 1.0);
}

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace detail

/// tau(n) = <A,n><Q,n>/(gamma_rho mc) + <A,n> + <B,n> + gamma_hat_r.
inline double mt_tau(const std::vector<double>& n, const MTParams& p) {
    const TraitVectors v = p.vectors();
    const double an = detail::dot(v.A, n);
    const double qn = detail::dot(v.Q, n);
    const double bn = detail::dot(v.B, n);
    return an * qn / (p.gamma_rho * p.mc) + an + bn + p.gamma_hat_r();
}

/// Birth rate of trait i (0-based) at population vector n. Evaluation is the
/// closed form after eliminating the fast variables; consumption terms with a
/// vanishing denominator contribute zero.
inline double mt_birth_rate(int i, const std::vector<double>& n, const MTParams& p) {
    if (i < 0 || i >= p.M) throw std::invalid_argument("trait index out of range");
    if (n.size() != static_cast<std::size_t>(p.M))
        throw std::invalid_argument("population vector size mismatch");
    const TraitVectors v = p.vectors();
    const double an = detail::dot(v.A, n);
    const double tau = mt_tau(n, p);
    const double site_density = p.r / (p.gamma_rho * p.mc) * an / tau;  // equilibrium T

    const double theta_n = detail::dot(v.Theta, n);
    const double gamma_n = detail::dot(v.Gamma, n);

    double inner = 0.0;
    const double pool_den = (p.gamma[i] * p.n_bar[i] + gamma_n) * (gamma_n + p.gamma_p);
    if (pool_den > 0.0) inner += p.gamma[i] * p.gamma[i] * theta_n / pool_den;
    for (int j = 0; j < p.M; ++j) {
        double competitors = 0.0;
        for (int k = 0; k < p.M; ++k) competitors += p.nu(k, j) * n[k];
        const double den = p.nu(i, j) * p.n_bar[i] + competitors;
        if (den > 0.0) inner += (1.0 - p.theta_p[j]) * p.nu(i, j) * v.Q[j] * n[j] / den;
    }
    return p.mu[i] * site_density * inner;
}

/// Hessian of B^i at n = 0 (row-major M x M, symmetric):
///   mu^i r / (gamma_rho mc gamma_hat_r n_bar^i) *
///   ( (gamma^i/gamma_p)(A Theta^T + Theta A^T) + A (Q-Theta)^T + (Q-Theta) A^T ).
inline std::vector<double> mt_hessian_at_zero(int i, const MTParams& p) {
    if (i < 0 || i >= p.M) throw std::invalid_argument("trait index out of range");
    const TraitVectors v = p.vectors();
    const double pref =
        p.mu[i] * p.r / (p.gamma_rho * p.mc * p.gamma_hat_r() * p.n_bar[i]);
    const double w = p.gamma[i] / p.gamma_p;
    std::vector<double> H(static_cast<std::size_t>(p.M) * p.M);
    for (int a = 0; a < p.M; ++a)
        for (int b = 0; b < p.M; ++b) {
            const double qa = v.Q[a] - v.Theta[a];
            const double qb = v.Q[b] - v.Theta[b];
            H[static_cast<std::size_t>(a) * p.M + b] =
                pref * (w * (v.A[a] * v.Theta[b] + v.Theta[a] * v.A[b]) + v.A[a] * qb +
                        qa * v.A[b]);
        }
    return H;
}

/// Derivatives of the i-th birth rate along its own population at a boundary
/// point n0 (n0[i] = 0), in the no-cross-sharing case (nu diagonal):
/// `direct` is d/dn^i of the on-the-spot consumption part, `total` the full
/// derivative of B^i.
struct MtSelfDerivative {
    double direct = 0;
    double total = 0;
};

inline MtSelfDerivative mt_self_derivative(int i, const std::vector<double>& n0,
                                           const MTParams& p) {
    if (i < 0 || i >= p.M) throw std::invalid_argument("trait index out of range");
    if (n0.size() != static_cast<std::size_t>(p.M))
        throw std::invalid_argument("population vector size mismatch");
    if (n0[i] != 0.0) throw std::invalid_argument("n0 must vanish at the probed trait");
    for (int a = 0; a < p.M; ++a)
        for (int b = 0; b < p.M; ++b)
            if (a != b && p.nu(a, b) != 0.0)
                throw std::invalid_argument("sharing matrix must be diagonal");

    const TraitVectors v = p.vectors();
    const double an = detail::dot(v.A, n0);
    const double tau = mt_tau(n0, p);
    const double front = p.mu[i] * p.r / (p.gamma_rho * p.mc);

    MtSelfDerivative out;
    out.direct = front * an / tau * (1.0 - p.theta_p[i]) * v.Q[i] / p.n_bar[i];

    // F = front <A,n>/tau(n); dF/dn^i via the quotient rule.
    const double qn = detail::dot(v.Q, n0);
    const double dtau = (v.A[i] * qn + an * v.Q[i]) / (p.gamma_rho * p.mc) + v.A[i] + v.B[i];
    const double F = front * an / tau;
    const double dF = front * (v.A[i] * tau - an * dtau) / (tau * tau);

    // shared-pool part G1 = gamma^i^2 <Theta,n> / ((gamma^i n_bar^i + <Gamma,n>)(<Gamma,n> + gamma_p))
    const double gn = detail::dot(v.Gamma, n0);
    const double d1 = p.gamma[i] * p.n_bar[i] + gn;
    const double d2 = gn + p.gamma_p;
    const double tn = detail::dot(v.Theta, n0);
    double G1 = 0.0, dG1 = 0.0;
    if (d1 * d2 > 0.0) {
        const double g2 = p.gamma[i] * p.gamma[i];
        G1 = g2 * tn / (d1 * d2);
        dG1 = g2 * (v.Theta[i] * d1 * d2 - tn * (v.Gamma[i] * d2 + d1 * v.Gamma[i])) /
              (d1 * d1 * d2 * d2);
    }

    // direct part G2 = (1 - theta_p^i) Q^i n^i / (n_bar^i + n^i); at n^i = 0
    // it vanishes and its slope is (1 - theta_p^i) Q^i / n_bar^i.
    const double dG2 = (1.0 - p.theta_p[i]) * v.Q[i] / p.n_bar[i];

    out.total = dF * G1 + F * (dG1 + dG2);
    return out;
}

}  // namespace cellodeg
