#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellodeg/linalg.hpp"
#include "cellodeg/params.hpp"
#include "cellodeg/state.hpp"

namespace cellodeg {

/// Leading-order coefficients of the fast-equilibrium branch through n = 0:
///   N_{l,i}(n)   = nu[l,i] n^i (1 + O(n))
///   e22^{l,i}(n) = e22_coeff[l,i] n^{i+1} (1 + O(n))
///   e21(n)       = e21_coeff n (1 + O(n))
///   p(n) gamma_p / theta_p = p_bar0 n^2 (1 + O(n)).
struct NsSeries {
    std::vector<double> nu;         // triangle layout
    std::vector<double> e22_coeff;  // attached layout
    double e21_coeff = 0;
    double p_bar0 = 0;
};

/// Recursion down each chain row: nu_{l,0} = r_{l,0}/gamma_rho_{l,0} and
/// nu_{l,i} = nu_{l,i-1} alpha_hat_{l,i-1} k1 / (gamma_hat_{l,i} + gamma_rho_{l,i}).
inline NsSeries ns_series_coefficients(const NSParams& par, int i_max = -1) {
    const IndexSetIL& idx = par.idx;
    NsSeries s;
    s.nu.assign(idx.size(), 0.0);
    s.e22_coeff.assign(idx.attached_size(), 0.0);
    s.e21_coeff = par.b2 / par.d21;
    const int cap = (i_max < 0) ? idx.max_length() : i_max;
    for (int l = 1; l <= idx.max_length(); ++l) {
        s.nu[idx.offset(l, 0)] = par.influx(l) / par.gamma_rho(l, 0);
        for (int i = 1; i <= std::min(l, cap); ++i) {
            const double denom = par.gamma_hat(l, i) + par.gamma_rho(l, i);
            s.nu[idx.offset(l, i)] =
                s.nu[idx.offset(l, i - 1)] * par.alpha_hat(l, i - 1) * par.k1() / denom;
        }
        for (int i = 1; i <= std::min(l, cap); ++i) {
            const double exit = par.sigma(l, i) + par.d22(l, i) + par.gamma_r(l, i);
            s.e22_coeff[idx.attached_offset(l, i)] =
                i * par.beta(l, i) * s.nu[idx.offset(l, i)] * s.e21_coeff / exit;
        }
    }
    for (int l = 1; l <= idx.max_length(); ++l)
        s.p_bar0 += par.mc * par.q_hat(l, 1) * s.e22_coeff[idx.attached_offset(l, 1)];
    return s;
}

/// Fast equilibrium of the chain system at frozen population n.
struct NSEquilibrium {
    double e1 = 0, e21 = 0;
    std::vector<double> chains;    // N_{l,i}, triangle layout
    std::vector<double> attached;  // e22^{l,i}, attached layout
    double p = 0;
    double residual = 0;  // inf-norm of the algebraic system at the solution
};

namespace detail {

/// Newton solve in scaled variables u = (e21/n, e22^{l,i}/n^{i+1}, N_{l,i}/n^i).
/// The scaling keeps every unknown O(1): at n = 0 the system collapses to the
/// series recursion, and high-order components retain relative accuracy.
class NsEquilibriumSolver {
public:
    explicit NsEquilibriumSolver(const NSParams& par)
        : par_(par), idx_(par.idx), n_cells_(idx_.size()), n_att_(idx_.attached_size()) {
        dim_ = 1 + n_att_ + n_cells_;
    }

    std::size_t dim() const { return dim_; }

    std::vector<double> series_guess() const {
        const NsSeries s = ns_series_coefficients(par_);
        std::vector<double> u(dim_);
        u[0] = s.e21_coeff;
        for (std::size_t k = 0; k < n_att_; ++k) u[1 + k] = s.e22_coeff[k];
        for (std::size_t k = 0; k < n_cells_; ++k) u[1 + n_att_ + k] = s.nu[k];
        return u;
    }

    void residual(double n, const std::vector<double>& u, std::vector<double>& F) const {
        F.assign(dim_, 0.0);
        const double k1 = par_.k1();
        const double e21s = u[0];

        // detached-enzyme balance, scaled by 1/n
        double acc = par_.b2 - par_.d21 * e21s;
        idx_.for_each_attached([&](int l, int i) {
            const double e22s = u[att(l, i)];
            const double Ssc = i * u[cell(l, i)] - n * e22s / par_.m2;
            acc -= std::pow(n, i) * (par_.beta(l, i) * Ssc * e21s - par_.sigma(l, i) * e22s);
        });
        F[0] = acc;

        // attached-enzyme balance per cell, scaled by 1/n^{i+1}
        idx_.for_each_attached([&](int l, int i) {
            const double e22s = u[att(l, i)];
            const double Ssc = i * u[cell(l, i)] - n * e22s / par_.m2;
            F[att(l, i)] = par_.beta(l, i) * Ssc * e21s -
                           (par_.sigma(l, i) + par_.d22(l, i) + par_.gamma_r(l, i)) * e22s;
        });

        // chain balance per cell, scaled by 1/n^i
        idx_.for_each([&](int l, int i) {
            double v = (i == 0) ? par_.influx(l) : 0.0;
            if (i >= 1) v += par_.alpha_hat(l, i - 1) * k1 * u[cell(l, i - 1)];
            v -= par_.alpha_hat(l, i) * k1 * n * u[cell(l, i)];
            if (idx_.contains(l, i + 1)) v += par_.gamma_hat(l, i + 1) * n * u[cell(l, i + 1)];
            v -= par_.gamma_hat(l, i) * u[cell(l, i)];
            if (idx_.contains_attached(l + 1, i)) v += par_.q_hat(l + 1, i) * n * u[att(l + 1, i)];
            if (i >= 1) v -= par_.q_hat(l, i) * n * u[att(l, i)];
            if (idx_.contains_attached(l, i + 1))
                v += par_.theta_hat(l, i + 1) * n * n * u[att(l, i + 1)];
            if (i >= 1) v -= par_.theta_hat(l, i) * n * u[att(l, i)];
            v -= par_.gamma_rho(l, i) * u[cell(l, i)];
            F[cell(l, i)] = v;
        });
    }

    void jacobian(double n, const std::vector<double>& u, std::vector<double>& J) const {
        J.assign(dim_ * dim_, 0.0);
        const double k1 = par_.k1();
        const double e21s = u[0];

        double d_e21 = -par_.d21;
        idx_.for_each_attached([&](int l, int i) {
            const double pw = std::pow(n, i);
            const double e22s = u[att(l, i)];
            const double Ssc = i * u[cell(l, i)] - n * e22s / par_.m2;
            d_e21 -= pw * par_.beta(l, i) * Ssc;
            at(J, 0, att(l, i)) = pw * (par_.beta(l, i) * n / par_.m2 * e21s + par_.sigma(l, i));
            at(J, 0, cell(l, i)) = -pw * par_.beta(l, i) * i * e21s;
        });
        at(J, 0, 0) = d_e21;

        idx_.for_each_attached([&](int l, int i) {
            const std::size_t row = att(l, i);
            const double e22s = u[att(l, i)];
            const double Ssc = i * u[cell(l, i)] - n * e22s / par_.m2;
            at(J, row, 0) = par_.beta(l, i) * Ssc;
            at(J, row, att(l, i)) = -par_.beta(l, i) * n / par_.m2 * e21s -
                                    (par_.sigma(l, i) + par_.d22(l, i) + par_.gamma_r(l, i));
            at(J, row, cell(l, i)) = par_.beta(l, i) * i * e21s;
        });

        idx_.for_each([&](int l, int i) {
            const std::size_t row = cell(l, i);
            if (i >= 1) at(J, row, cell(l, i - 1)) += par_.alpha_hat(l, i - 1) * k1;
            at(J, row, cell(l, i)) += -par_.alpha_hat(l, i) * k1 * n - par_.gamma_hat(l, i) -
                                      par_.gamma_rho(l, i);
            if (idx_.contains(l, i + 1)) at(J, row, cell(l, i + 1)) += par_.gamma_hat(l, i + 1) * n;
            if (idx_.contains_attached(l + 1, i)) at(J, row, att(l + 1, i)) += par_.q_hat(l + 1, i) * n;
            if (i >= 1) at(J, row, att(l, i)) -= par_.q_hat(l, i) * n;
            if (idx_.contains_attached(l, i + 1))
                at(J, row, att(l, i + 1)) += par_.theta_hat(l, i + 1) * n * n;
            if (i >= 1) at(J, row, att(l, i)) -= par_.theta_hat(l, i) * n;
        });
    }

    /// Damped Newton from `u`; returns the scaled-system residual norm.
    double solve(double n, std::vector<double>& u, int max_iter = 100) const {
        std::vector<double> F, J, step;
        residual(n, u, F);
        double fn = inf_norm(F);
        for (int it = 0; it < max_iter; ++it) {
            const double target = 1e-14 * (1.0 + inf_norm(u));
            if (fn <= target) break;
            jacobian(n, u, J);
            step = F;
            lu_solve(J, step, dim_);
            double lambda = 1.0;
            std::vector<double> trial(dim_);
            double fn_trial = fn;
            for (int half = 0; half < 40; ++half) {
                for (std::size_t k = 0; k < dim_; ++k) trial[k] = u[k] - lambda * step[k];
                residual(n, trial, F);
                fn_trial = inf_norm(F);
                if (fn_trial < fn) break;
                lambda *= 0.5;
            }
            if (!(fn_trial < fn)) break;  // stalled
            u.swap(trial);
            fn = fn_trial;
        }
        return fn;
    }

    std::size_t att(int l, int i) const { return 1 + idx_.attached_offset(l, i); }
    std::size_t cell(int l, int i) const { return 1 + n_att_ + idx_.offset(l, i); }

    static double inf_norm(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

private:
    double& at(std::vector<double>& J, std::size_t r, std::size_t c) const {
        return J[r * dim_ + c];
    }

    const NSParams& par_;
    const IndexSetIL& idx_;
    std::size_t n_cells_, n_att_, dim_;
};

}  // namespace detail

/// Solve the frozen-population fast equilibrium of the chain system.
/// e1 is closed-form; (e21, e22, N) by damped Newton in scaled variables with
/// the series as warm start (continuation from smaller n when needed); p in
/// closed form from the cellobiose balance.
inline NSEquilibrium ns_fast_equilibrium(double n, const NSParams& par) {
    if (n < 0.0) throw std::invalid_argument("population must be >= 0");
    const IndexSetIL& idx = par.idx;
    detail::NsEquilibriumSolver solver(par);

    std::vector<double> u = solver.series_guess();
    const double direct = solver.solve(n, u);
    double tol = 1e-12 * (1.0 + detail::NsEquilibriumSolver::inf_norm(u));
    if (direct > tol) {
        // walk up from n = 0 doubling the continuation step on success
        u = solver.series_guess();
        double reached = 0.0, step = n / 16.0;
        int tries = 0;
        while (reached < n) {
            const double target = std::min(n, reached + step);
            std::vector<double> trial = u;
            const double res = solver.solve(target, trial);
            const double ttol = 1e-12 * (1.0 + detail::NsEquilibriumSolver::inf_norm(trial));
            if (res <= ttol) {
                u = trial;
                reached = target;
                step *= 2.0;
            } else {
                step *= 0.5;
                if (++tries > 200 || step < n * 1e-12)
                    throw std::runtime_error(
                        "fast-equilibrium continuation failed at n = " + std::to_string(target) +
                        "; residual = " + std::to_string(res));
            }
        }
    }

    NSEquilibrium eq;
    eq.e1 = par.k1() * n;
    eq.e21 = u[0] * n;
    eq.chains.assign(idx.size(), 0.0);
    eq.attached.assign(idx.attached_size(), 0.0);
    idx.for_each([&](int l, int i) {
        eq.chains[idx.offset(l, i)] = u[solver.cell(l, i)] * std::pow(n, i);
    });
    idx.for_each_attached([&](int l, int i) {
        eq.attached[idx.attached_offset(l, i)] = u[solver.att(l, i)] * std::pow(n, i + 1);
    });

    double production = 0.0;  // mc sum q_hat e22
    idx.for_each_attached([&](int l, int i) {
        production += par.mc * par.q_hat(l, i) * eq.attached[idx.attached_offset(l, i)];
    });
    eq.p = par.theta_p * production / (par.gamma * n + par.gamma_p);

    // unscaled residual of the algebraic system (rows in the state layout)
    std::vector<double> F;
    solver.residual(n, u, F);
    double unorm = 0.0;
    unorm = std::max(unorm, std::abs(F[0]) * n);
    idx.for_each_attached([&](int l, int i) {
        unorm = std::max(unorm, std::abs(F[solver.att(l, i)]) * std::pow(n, i + 1));
    });
    idx.for_each([&](int l, int i) {
        unorm = std::max(unorm, std::abs(F[solver.cell(l, i)]) * std::pow(n, i));
    });
    eq.residual = unorm;

    double scale = std::max(eq.e21, detail::NsEquilibriumSolver::inf_norm(eq.chains));
    scale = std::max(scale, detail::NsEquilibriumSolver::inf_norm(eq.attached));
    if (eq.residual > 1e-10 * (1.0 + scale))
        throw std::runtime_error("fast-equilibrium residual too large: " +
                                 std::to_string(eq.residual));
    for (double v : eq.chains)
        if (v < 0.0)
            throw std::runtime_error("negative chain count in converged equilibrium (n outside "
                                     "the solvable neighbourhood)");
    for (double v : eq.attached)
        if (v < 0.0)
            throw std::runtime_error("negative attached mass in converged equilibrium (n outside "
                                     "the solvable neighbourhood)");
    return eq;
}

/// p_bar(n) = gamma_p p(n) / (theta_p n^2), evaluated in the theta_p-free form
/// gamma_p (mc sum q_hat e22) / ((gamma n + gamma_p) n^2); series limit at 0.
inline double ns_pbar(double n, const NSParams& par) {
    if (n < 0.0) throw std::invalid_argument("population must be >= 0");
    if (n == 0.0) return ns_series_coefficients(par).p_bar0;
    const NSEquilibrium eq = ns_fast_equilibrium(n, par);
    double production = 0.0;
    par.idx.for_each_attached([&](int l, int i) {
        production += par.mc * par.q_hat(l, i) * eq.attached[par.idx.attached_offset(l, i)];
    });
    return par.gamma_p * production / ((par.gamma * n + par.gamma_p) * n * n);
}

/// Quasi-steady-state birth rate of the chain system,
///   B(n) = mu n^2/(n_bar+n) (gamma theta_p/gamma_p + (1-theta_p)(gamma n/gamma_p + 1)) p_bar(n).
inline double ns_birth_rate(double n, const NSParams& par) {
    if (n < 0.0) throw std::invalid_argument("population must be >= 0");
    if (n == 0.0) return 0.0;
    const double share = par.gamma * par.theta_p / par.gamma_p +
                         (1.0 - par.theta_p) * (par.gamma * n / par.gamma_p + 1.0);
    return par.mu * n * n / (par.n_bar + n) * share * ns_pbar(n, par);
}

/// d/d(theta_p) [B(n)/n^2] at n = 0: (mu/n_bar)(gamma/gamma_p - 1) p_bar(0).
inline double ns_sharing_sensitivity(const NSParams& par) {
    return par.mu / par.n_bar * (par.gamma / par.gamma_p - 1.0) *
           ns_series_coefficients(par).p_bar0;
}

}  // namespace cellodeg
