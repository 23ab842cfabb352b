#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cellodeg/integrate.hpp"
#include "cellodeg/params.hpp"
#include "cellodeg/state.hpp"

namespace cellodeg {

/// Population measure over trait space: a finite list of point masses plus an
/// optional sampled density integrated by the composite trapezoid rule.
struct TraitMeasure {
    struct Atom {
        double x = 0, w = 0;
    };
    std::vector<Atom> atoms;
    std::vector<double> grid_x;  // strictly increasing nodes
    std::vector<double> grid_n;  // density samples, same length

    static TraitMeasure from_atoms(const std::vector<double>& xs,
                                   const std::vector<double>& ws) {
        if (xs.size() != ws.size()) throw std::invalid_argument("atom arrays size mismatch");
        TraitMeasure m;
        m.atoms.reserve(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) m.atoms.push_back({xs[k], ws[k]});
        return m;
    }
};

using TraitFn = std::function<double(double)>;

/// Trait-dependent model functions: composite coefficients A, B, Q built from
/// the underlying enzyme rates, sharing/consumption functions, and the scalar
/// environment constants.
struct TraitFunctions {
    TraitFn A, B, Q;
    TraitFn theta_p, gamma, gamma_n, mu, n_bar;
    std::function<double(double, double)> nu;  // nu(consumer x, producer z)
    double r = 0, gamma_rho = 1, gamma_p = 1, mc = 1, gamma_hat_r = 0;
};

/// Assemble A, B, Q from per-trait enzyme rates:
///   A = alpha_hat b1/d1, B = theta_r beta_hat b2/d2, Q = q_hat b2/d2.
inline TraitFunctions trait_functions_from_rates(
    TraitFn b1, TraitFn d1, TraitFn b2, TraitFn d2, TraitFn alpha_hat, TraitFn beta_hat,
    TraitFn q_hat, TraitFn theta_r, TraitFn theta_p, TraitFn gamma, TraitFn gamma_n,
    TraitFn mu, TraitFn n_bar, std::function<double(double, double)> nu, double r,
    double gamma_r, double gamma_rho, double gamma_p, double mc) {
    TraitFunctions f;
    f.A = [=](double x) { return alpha_hat(x) * b1(x) / d1(x); };
    f.B = [=](double x) { return theta_r(x) * beta_hat(x) * b2(x) / d2(x); };
    f.Q = [=](double x) { return q_hat(x) * b2(x) / d2(x); };
    f.theta_p = std::move(theta_p);
    f.gamma = std::move(gamma);
    f.gamma_n = std::move(gamma_n);
    f.mu = std::move(mu);
    f.n_bar = std::move(n_bar);
    f.nu = std::move(nu);
    f.r = r;
    f.gamma_rho = gamma_rho;
    f.gamma_p = gamma_p;
    f.mc = mc;
    f.gamma_hat_r = gamma_r + gamma_rho;
    return f;
}

/// Discrete-trait coefficients viewed as trait functions: atom location k maps
/// to trait index k through its coordinate.
inline TraitFunctions trait_functions_from_mt(const MTParams& par,
                                              const std::vector<double>& locations) {
    if (locations.size() != static_cast<std::size_t>(par.M))
        throw std::invalid_argument("need one trait location per trait");
    auto index_of = [locations](double x) -> int {
        for (std::size_t k = 0; k < locations.size(); ++k)
            if (locations[k] == x) return static_cast<int>(k);
        throw std::domain_error("trait coordinate does not match a sampled trait");
    };
    const TraitVectors v = par.vectors();
    TraitFunctions f;
    f.A = [=](double x) { return v.A[index_of(x)]; };
    f.B = [=](double x) { return v.B[index_of(x)]; };
    f.Q = [=](double x) { return v.Q[index_of(x)]; };
    f.theta_p = [=, tp = par.theta_p](double x) { return tp[index_of(x)]; };
    f.gamma = [=, g = par.gamma](double x) { return g[index_of(x)]; };
    f.gamma_n = [=, g = par.gamma_n](double x) { return g[index_of(x)]; };
    f.mu = [=, m = par.mu](double x) { return m[index_of(x)]; };
    f.n_bar = [=, nb = par.n_bar](double x) { return nb[index_of(x)]; };
    f.nu = [=, p = par](double x, double z) { return p.nu(index_of(x), index_of(z)); };
    f.r = par.r;
    f.gamma_rho = par.gamma_rho;
    f.gamma_p = par.gamma_p;
    f.mc = par.mc;
    f.gamma_hat_r = par.gamma_hat_r();
    return f;
}

/// Linear functional <W, n>: atom sum plus trapezoid quadrature of the density.
template <class W>
double inner(W&& weight, const TraitMeasure& n) {
    double s = 0.0;
    for (const auto& a : n.atoms) s += weight(a.x) * a.w;
    if (!n.grid_x.empty()) {
        if (n.grid_x.size() != n.grid_n.size())
            throw std::invalid_argument("grid arrays size mismatch");
        for (std::size_t k = 0; k + 1 < n.grid_x.size(); ++k) {
            const double h = n.grid_x[k + 1] - n.grid_x[k];
            s += 0.5 * h *
                 (weight(n.grid_x[k]) * n.grid_n[k] + weight(n.grid_x[k + 1]) * n.grid_n[k + 1]);
        }
    }
    return s;
}

/// tau[n] = <A,n><Q,n>/(gamma_rho mc) + <A,n> + <B,n> + gamma_hat_r.
inline double cont_tau(const TraitMeasure& n, const TraitFunctions& f) {
    const double an = inner(f.A, n);
    const double qn = inner(f.Q, n);
    const double bn = inner(f.B, n);
    return an * qn / (f.gamma_rho * f.mc) + an + bn + f.gamma_hat_r;
}

/// Birth-rate functional at trait x. The direct-consumption kernel
/// Xi(z;x) = nu(x,z) Q(z) / (nu(x,z) n_bar(x) + N[n](z)) contributes zero
/// where its denominator vanishes.
inline double cont_birth_rate(double x, const TraitMeasure& n, const TraitFunctions& f) {
    const double an = inner(f.A, n);
    const double tau = cont_tau(n, f);
    const double site_density = f.r / (f.gamma_rho * f.mc) * an / tau;

    const double theta_n = inner([&](double z) { return f.theta_p(z) * f.Q(z); }, n);
    const double gamma_n = inner(f.gamma, n);
    const double gx = f.gamma(x);

    double acc = 0.0;
    const double pool_den = (gx * f.n_bar(x) + gamma_n) * (gamma_n + f.gamma_p);
    if (pool_den > 0.0) acc += gx * gx * theta_n / pool_den;

    auto competitors = [&](double z) { return inner([&](double s) { return f.nu(s, z); }, n); };
    acc += inner(
        [&](double z) {
            const double nuxz = f.nu(x, z);
            const double den = nuxz * f.n_bar(x) + competitors(z);
            if (den <= 0.0) return 0.0;
            return (1.0 - f.theta_p(z)) * nuxz * f.Q(z) / den;
        },
        n);

    return f.mu(x) * site_density * acc;
}

/// Selection dynamics of an atom-only measure: dw_j/dt = w_j (B[n](x_j) - gamma_n(x_j)),
/// atom locations fixed.
inline Trajectory evolve_atoms(const TraitMeasure& n0, const TraitFunctions& f, double t0,
                               double t1, const StepControl& ctrl) {
    if (!n0.grid_x.empty())
        throw std::invalid_argument("atom evolution expects an atom-only measure");
    const std::size_t m = n0.atoms.size();
    std::vector<double> w0(m);
    for (std::size_t k = 0; k < m; ++k) w0[k] = n0.atoms[k].w;

    TraitMeasure scratch = n0;
    auto rhs = [&f, &scratch, m](double, const std::vector<double>& w, std::vector<double>& dw) {
        for (std::size_t k = 0; k < m; ++k) scratch.atoms[k].w = w[k];
        dw.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double x = scratch.atoms[k].x;
            dw[k] = w[k] * (cont_birth_rate(x, scratch, f) - f.gamma_n(x));
        }
    };
    return integrate(rhs, w0, t0, t1, ctrl);
}

}  // namespace cellodeg
