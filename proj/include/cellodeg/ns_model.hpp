#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellodeg/params.hpp"
#include "cellodeg/state.hpp"

namespace cellodeg {

/// Macroscopic totals of a chain-resolved state: cellulose mass rho, attached
/// enzyme mass, landing-site count T and unoccupied-site count S. They satisfy
/// T = S + e22_tot / m2 identically.
struct NSAggregates {
    double rho = 0, e22_tot = 0, T = 0, S = 0;
};

template <class Grid>
NSAggregates aggregate(const NsStateT<Grid>& s, const NSParams& par) {
    NSAggregates a;
    s.grid.for_each([&](int l, int i) {
        const double N = s.chain_count[s.grid.offset(l, i)];
        a.rho += l * N;
        a.T += i * N;
    });
    a.rho *= par.mc;
    s.grid.for_each_attached(
        [&](int l, int i) { a.e22_tot += s.attached_mass[s.grid.attached_offset(l, i)]; });
    a.S = a.T - a.e22_tot / par.m2;
    return a;
}

/// Unoccupied landing sites on (l,i)-chains.
template <class Grid>
double unoccupied_sites(const NsStateT<Grid>& s, const NSParams& par, int l, int i) {
    return i * s.N(l, i) - s.e22(l, i) / par.m2;
}

/// Time derivative of the chain-resolved system, written into `out`
/// (same grid as `s`). Off-grid neighbours read as zero.
///
/// Non-uniform per-(l,i) rates are only defined on the triangle, so a state
/// on an extended grid requires uniform tables (LocalTable enforces this).
template <class Grid>
void ns_rhs(const NsStateT<Grid>& s, const NSParams& par, NsStateT<Grid>& out) {
    if (!(s.grid == out.grid)) out = NsStateT<Grid>(s.grid);

    // Enzyme balances need the attack/detach sums over all cells.
    double attack_sum = 0.0;  // sum beta_{l,i} S_{l,i}
    double detach_sum = 0.0;  // sum sigma_{l,i} e22^{l,i}
    double production = 0.0;  // sum q_hat_{l,i} e22^{l,i} (site count rate)
    s.grid.for_each_attached([&](int l, int i) {
        const double e22 = s.attached_mass[s.grid.attached_offset(l, i)];
        const double S_li = i * s.chain_count[s.grid.offset(l, i)] - e22 / par.m2;
        attack_sum += par.beta(l, i) * S_li;
        detach_sum += par.sigma(l, i) * e22;
        production += par.q_hat(l, i) * e22;
    });

    out.e1 = par.b1 * s.n - par.d1 * s.e1;
    out.e21 = par.b2 * s.n - attack_sum * s.e21 + detach_sum - par.d21 * s.e21;

    s.grid.for_each_attached([&](int l, int i) {
        const double e22 = s.attached_mass[s.grid.attached_offset(l, i)];
        const double S_li = i * s.chain_count[s.grid.offset(l, i)] - e22 / par.m2;
        out.attached_mass[s.grid.attached_offset(l, i)] =
            par.beta(l, i) * S_li * s.e21 -
            (par.sigma(l, i) + par.d22(l, i) + par.gamma_r(l, i)) * e22;
    });

    s.grid.for_each([&](int l, int i) {
        double d = par.influx(l) * (i == 0 ? 1.0 : 0.0);
        // landing-site creation (l,i-1) -> (l,i) -> (l,i+1)
        if (i >= 1 && s.grid.contains(l, i - 1))
            d += par.alpha_hat(l, i - 1) * s.N(l, i - 1) * s.e1;
        d -= par.alpha_hat(l, i) * s.N(l, i) * s.e1;
        // site decay (l,i+1) -> (l,i) -> (l,i-1)
        if (s.grid.contains(l, i + 1)) d += par.gamma_hat(l, i + 1) * s.N(l, i + 1);
        d -= par.gamma_hat(l, i) * s.N(l, i);
        // cleaving (l+1,i) -> (l,i) -> (l-1,i)
        if (s.grid.contains_attached(l + 1, i)) d += par.q_hat(l + 1, i) * s.e22(l + 1, i);
        if (i >= 1) d -= par.q_hat(l, i) * s.e22(l, i);
        // detach/death making sites unusable: (l,i+1) -> (l,i) -> (l,i-1)
        if (s.grid.contains_attached(l, i + 1)) d += par.theta_hat(l, i + 1) * s.e22(l, i + 1);
        if (i >= 1) d -= par.theta_hat(l, i) * s.e22(l, i);
        d -= par.gamma_rho(l, i) * s.N(l, i);
        if (!std::isfinite(d))
            throw std::runtime_error("non-finite chain derivative at (l,i) = (" +
                                     std::to_string(l) + "," + std::to_string(i) + ")");
        out.chain_count[s.grid.offset(l, i)] = d;
    });

    const double mass_production = par.mc * production;
    out.p = par.theta_p * mass_production - par.gamma * s.n * s.p - par.gamma_p * s.p;
    out.n = par.mu * s.n / (par.n_bar + s.n) *
                (par.gamma * s.p + (1.0 - par.theta_p) * mass_production) -
            par.gamma_n * s.n;
}

template <class Grid>
NsStateT<Grid> ns_rhs(const NsStateT<Grid>& s, const NSParams& par) {
    NsStateT<Grid> out(s.grid);
    ns_rhs(s, par, out);
    return out;
}

/// Collapse a chain-resolved state (or state derivative) to the aggregated
/// site-resolved record. Requires uniform rates; the aggregated influx is
/// r = mc * sum_l l * r0[l].
template <class Grid>
SState reduce_to_s_state(const NsStateT<Grid>& s, const NSParams& par) {
    if (!par.uniform())
        throw std::domain_error("reduction to the site-resolved system requires uniform rates");
    const NSAggregates a = aggregate(s, par);
    SState out;
    out.e1 = s.e1;
    out.e21 = s.e21;
    out.e22 = a.e22_tot;
    out.S = a.S;
    out.rho = a.rho;
    out.p = s.p;
    out.n = s.n;
    return out;
}

/// Packed-vector adapter for the integrator.
template <class Grid>
class NsSystem {
public:
    NsSystem(const Grid& grid, const NSParams& par) : par_(par), scratch_(grid), deriv_(grid) {}

    void operator()(double /*t*/, const std::vector<double>& y, std::vector<double>& dydt) const {
        scratch_.unpack(y);
        ns_rhs(scratch_, par_, deriv_);
        deriv_.pack(dydt);
    }

    const NSParams& params() const { return par_; }

private:
    NSParams par_;
    mutable NsStateT<Grid> scratch_, deriv_;
};

}  // namespace cellodeg
