#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellodeg/grid.hpp"

namespace cellodeg {

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

inline void require_finite(double v, const std::string& name) {
    require(std::isfinite(v), name + " not finite");
}

inline void require_nonneg(double v, const std::string& name) {
    require_finite(v, name);
    require(v >= 0.0, name + " negative");
}

inline void require_positive(double v, const std::string& name) {
    require_finite(v, name);
    require(v > 0.0, name + " must be > 0");
}

inline void require_fraction(double v, const std::string& name) {
    require_finite(v, name);
    require(v >= 0.0 && v <= 1.0, name + " outside [0,1]");
}

}  // namespace detail

/// Per-(l,i) rate table over the chain triangle. A single scalar broadcast
/// over all cells is the common case; per-cell overrides are allowed but
/// the aggregation reductions require uniformity.
class LocalTable {
public:
    LocalTable() = default;

    LocalTable(const IndexSetIL& idx, double value)
        : idx_(idx), uniform_(true), value_(value), entries_() {}

    LocalTable(const IndexSetIL& idx, std::vector<double> entries)
        : idx_(idx), uniform_(false), value_(0.0), entries_(std::move(entries)) {
        if (entries_.size() != idx_.size())
            throw std::invalid_argument("LocalTable: entry count does not match index set");
        refresh_uniform();
    }

    const IndexSetIL& index_set() const { return idx_; }

    bool uniform() const { return uniform_; }

    double uniform_value() const {
        if (!uniform_) throw std::logic_error("LocalTable: table is not uniform");
        return value_;
    }

    /// Value at (l,i). Cells outside the triangle only appear when a lattice
    /// extension is in play, which presumes a uniform table.
    double operator()(int l, int i) const {
        if (uniform_) return value_;
        if (idx_.contains(l, i)) return entries_[idx_.offset(l, i)];
        throw std::domain_error("LocalTable: non-uniform table queried outside the triangle");
    }

    void set(int l, int i, double v) {
        if (!idx_.contains(l, i)) throw std::out_of_range("LocalTable::set outside triangle");
        if (uniform_) {
            entries_.assign(idx_.size(), value_);
            uniform_ = false;
        }
        entries_[idx_.offset(l, i)] = v;
        refresh_uniform();
    }

    template <class F>
    void check_entries(F&& check) const {
        if (uniform_) {
            check(0, 0, value_);
            return;
        }
        idx_.for_each([&](int l, int i) { check(l, i, entries_[idx_.offset(l, i)]); });
    }

private:
    void refresh_uniform() {
        uniform_ = true;
        value_ = entries_.empty() ? 0.0 : entries_[0];
        for (double v : entries_)
            if (v != value_) {
                uniform_ = false;
                return;
            }
        entries_.clear();
    }

    IndexSetIL idx_{1};
    bool uniform_ = true;
    double value_ = 0.0;
    std::vector<double> entries_;
};

/// Rate constants of the chain-resolved system.
///
/// Scalars: enzyme production/decay (b1, d1, b2, d21), masses (m1 endoglucanase,
/// m2 exoglucanase, mc cellobiose unit), sharing/loss fractions (theta_r sites
/// unusable after detach, theta_p cellobiose share released to the pool),
/// consumption gamma, decays gamma_p / gamma_n, conversion efficiency mu, and
/// the population threshold n_bar. Per-(l,i): attack beta, detach sigma, site
/// decay gamma_r, attached-enzyme decay d22, cut rate alpha, cleave rate q,
/// chain decay gamma_rho. Influx r0[l-1] feeds (l,0) only; chains provided by
/// the environment carry no landing sites.
struct NSParams {
    IndexSetIL idx{1};

    double b1 = 1, d1 = 1, b2 = 1, d21 = 1;
    LocalTable beta, sigma, gamma_r, d22, alpha, q, gamma_rho;
    std::vector<double> r0;
    double m1 = 1, m2 = 1, mc = 1;
    double theta_r = 0, theta_p = 0;
    double gamma = 0, gamma_p = 1, gamma_n = 0;
    double mu = 0, n_bar = 1;

    int L() const { return idx.max_length(); }
    double k1() const { return b1 / d1; }

    double influx(int l) const {
        return (l >= 1 && l <= idx.max_length()) ? r0[static_cast<std::size_t>(l - 1)] : 0.0;
    }

    /// Mass influx of cellulose: mc * sum_l l * r0[l].
    double aggregate_influx() const {
        double s = 0.0;
        for (int l = 1; l <= idx.max_length(); ++l) s += l * influx(l);
        return mc * s;
    }

    // Hat coefficients of the chain transitions. The (l - i) factor caps
    // landing sites at one per cellobiose unit.
    double alpha_hat(int l, int i) const { return alpha(l, i) * (l - i) / m1; }
    double gamma_hat(int l, int i) const { return i * gamma_r(l, i); }
    double q_hat(int l, int i) const { return q(l, i) / m2; }
    double theta_hat(int l, int i) const {
        return theta_r * (sigma(l, i) + d22(l, i)) / m2;
    }

    bool uniform() const {
        return beta.uniform() && sigma.uniform() && gamma_r.uniform() && d22.uniform() &&
               alpha.uniform() && q.uniform() && gamma_rho.uniform();
    }

    NSParams validated() const {
        NSParams p = *this;
        if (!(p.d1 > 0.0)) throw std::invalid_argument("k1 undefined (d1 must be > 0)");
        detail::require_nonneg(p.b1, "b1");
        detail::require_nonneg(p.b2, "b2");
        detail::require_positive(p.d21, "d21");
        detail::require_positive(p.m1, "m1");
        detail::require_positive(p.m2, "m2");
        detail::require_positive(p.mc, "mc");
        detail::require_fraction(p.theta_r, "theta_r");
        detail::require_fraction(p.theta_p, "theta_p");
        detail::require_nonneg(p.gamma, "gamma");
        detail::require_positive(p.gamma_p, "gamma_p");
        detail::require_nonneg(p.gamma_n, "gamma_n");
        detail::require_nonneg(p.mu, "mu");
        detail::require_positive(p.n_bar, "n_bar");
        if (p.r0.size() != static_cast<std::size_t>(p.idx.max_length()))
            throw std::invalid_argument("r0 must have one entry per chain length");
        for (std::size_t l = 0; l < p.r0.size(); ++l)
            detail::require_nonneg(p.r0[l], "r0[" + std::to_string(l + 1) + "]");

        auto check_table = [&](const LocalTable& t, const std::string& name, bool strict) {
            detail::require(t.index_set() == p.idx, name + " table index set mismatch");
            t.check_entries([&](int l, int i, double v) {
                std::string cell = name + "[" + std::to_string(l) + "," + std::to_string(i) + "]";
                if (strict)
                    detail::require_positive(v, cell);
                else
                    detail::require_nonneg(v, cell);
            });
        };
        check_table(p.beta, "beta", false);
        check_table(p.sigma, "sigma", false);
        check_table(p.gamma_r, "gamma_r", false);
        check_table(p.d22, "d22", false);
        check_table(p.alpha, "alpha", false);
        check_table(p.q, "q", false);
        check_table(p.gamma_rho, "gamma_rho", true);
        // the attached-enzyme balance needs a positive total exit rate
        p.idx.for_each_attached([&](int l, int i) {
            if (p.sigma(l, i) + p.d22(l, i) + p.gamma_r(l, i) <= 0.0)
                throw std::invalid_argument("sigma + d22 + gamma_r must be > 0 at [" +
                                            std::to_string(l) + "," + std::to_string(i) + "]");
        });
        return p;
    }

    /// Uniform-rate parameter set; r0 defaults to influx only at l = L.
    static NSParams make_uniform(int L, double b1, double d1, double b2, double d21,
                                 double beta, double sigma, double gamma_r, double d22,
                                 double alpha, double q, double gamma_rho, double r_total,
                                 double m1, double m2, double mc, double theta_r,
                                 double theta_p, double gamma, double gamma_p,
                                 double gamma_n, double mu, double n_bar) {
        NSParams p;
        p.idx = IndexSetIL(L);
        p.b1 = b1;
        p.d1 = d1;
        p.b2 = b2;
        p.d21 = d21;
        p.beta = LocalTable(p.idx, beta);
        p.sigma = LocalTable(p.idx, sigma);
        p.gamma_r = LocalTable(p.idx, gamma_r);
        p.d22 = LocalTable(p.idx, d22);
        p.alpha = LocalTable(p.idx, alpha);
        p.q = LocalTable(p.idx, q);
        p.gamma_rho = LocalTable(p.idx, gamma_rho);
        p.r0.assign(static_cast<std::size_t>(L), 0.0);
        p.r0.back() = r_total;
        p.m1 = m1;
        p.m2 = m2;
        p.mc = mc;
        p.theta_r = theta_r;
        p.theta_p = theta_p;
        p.gamma = gamma;
        p.gamma_p = gamma_p;
        p.gamma_n = gamma_n;
        p.mu = mu;
        p.n_bar = n_bar;
        return p;
    }
};

/// Rate constants of the aggregated site-resolved system (detached/attached
/// exoglucanase kept distinct, so sigma, d21, d22 survive the aggregation).
struct SParams {
    double b1 = 1, d1 = 1, b2 = 1, d21 = 1, d22 = 0, sigma = 1;
    double alpha = 1, beta = 1, q = 1;
    double theta_r = 0, theta_p = 0;
    double gamma_r = 0, gamma_rho = 1;
    double gamma = 0, gamma_p = 1, gamma_n = 0;
    double mu = 0;
    double m1 = 1, m2 = 1, mc = 1;
    double r = 0, n_bar = 1;

    double k1() const { return b1 / d1; }

    SParams validated() const {
        const SParams& p = *this;
        if (!(p.d1 > 0.0)) throw std::invalid_argument("k1 undefined (d1 must be > 0)");
        detail::require_positive(p.d21, "d21");
        detail::require_nonneg(p.b1, "b1");
        detail::require_nonneg(p.b2, "b2");
        detail::require_nonneg(p.d22, "d22");
        detail::require_nonneg(p.sigma, "sigma");
        detail::require_nonneg(p.alpha, "alpha");
        detail::require_nonneg(p.beta, "beta");
        detail::require_nonneg(p.q, "q");
        detail::require_fraction(p.theta_r, "theta_r");
        detail::require_fraction(p.theta_p, "theta_p");
        detail::require_nonneg(p.gamma_r, "gamma_r");
        detail::require_positive(p.gamma_rho, "gamma_rho");
        detail::require_nonneg(p.gamma, "gamma");
        detail::require_positive(p.gamma_p, "gamma_p");
        detail::require_nonneg(p.gamma_n, "gamma_n");
        detail::require_nonneg(p.mu, "mu");
        detail::require_positive(p.m1, "m1");
        detail::require_positive(p.m2, "m2");
        detail::require_positive(p.mc, "mc");
        detail::require_nonneg(p.r, "r");
        detail::require_positive(p.n_bar, "n_bar");
        detail::require(p.sigma + p.d22 + p.gamma_r > 0.0, "sigma + d22 + gamma_r must be > 0");
        return p;
    }
};

/// Rate constants of the single-trait lumped system (instantaneous
/// land-cleave-detach; one exoglucanase pool e2).
struct TParams {
    double b1 = 1, d1 = 1, b2 = 1, d2 = 1;
    double alpha = 1, beta = 1, q = 1;
    double theta_r = 0, theta_p = 0;
    double gamma_r = 0, gamma_rho = 1;
    double gamma = 0, gamma_p = 1, gamma_n = 0;
    double mu = 0;
    double m1 = 1, m2 = 1, mc = 1;
    double r = 0, n_bar = 1;

    double k1() const { return b1 / d1; }
    double k2() const { return b2 / d2; }
    /// Mass of cellobiose cleaved per unit (site count x enzyme mass) flux.
    double q_hat() const { return mc * q * beta / m2; }

    TParams validated() const {
        const TParams& p = *this;
        if (!(p.d1 > 0.0)) throw std::invalid_argument("k1 undefined (d1 must be > 0)");
        if (!(p.d2 > 0.0)) throw std::invalid_argument("k2 undefined (d2 must be > 0)");
        detail::require_nonneg(p.b1, "b1");
        detail::require_nonneg(p.b2, "b2");
        detail::require_nonneg(p.alpha, "alpha");
        detail::require_nonneg(p.beta, "beta");
        detail::require_nonneg(p.q, "q");
        detail::require_fraction(p.theta_r, "theta_r");
        detail::require_fraction(p.theta_p, "theta_p");
        detail::require_nonneg(p.gamma_r, "gamma_r");
        detail::require_positive(p.gamma_rho, "gamma_rho");
        detail::require_nonneg(p.gamma, "gamma");
        detail::require_positive(p.gamma_p, "gamma_p");
        detail::require_nonneg(p.gamma_n, "gamma_n");
        detail::require_nonneg(p.mu, "mu");
        detail::require_positive(p.m1, "m1");
        detail::require_positive(p.m2, "m2");
        detail::require_positive(p.mc, "mc");
        detail::require_nonneg(p.r, "r");
        detail::require_positive(p.n_bar, "n_bar");
        return p;
    }
};

/// Composite per-trait coefficient vectors: A site generation, B site loss to
/// attacks, Q cellobiose production, Theta shared production, Gamma pool
/// consumption. All per unit population mass at enzyme equilibrium.
struct TraitVectors {
    std::vector<double> A, B, Q, Theta, Gamma;
};

/// Rate constants of the multi-trait lumped system. Per-trait vectors are
/// indexed 0..M-1; nu(i,j) is the weight with which trait i competes for the
/// cellobiose stream produced by trait j's enzymes (columns sum to 1).
struct MTParams {
    int M = 1;
    std::vector<double> b1, d1, b2, d2;
    std::vector<double> alpha, beta, q;
    std::vector<double> theta_r, theta_p;
    std::vector<double> gamma, gamma_n, mu;
    std::vector<double> m1, m2, n_bar;
    double gamma_r = 0, gamma_rho = 1, gamma_p = 1;
    double r = 0, mc = 1;
    std::vector<double> nu_flat;  // row-major M x M

    double nu(int i, int j) const { return nu_flat[static_cast<std::size_t>(i) * M + j]; }
    double& nu(int i, int j) { return nu_flat[static_cast<std::size_t>(i) * M + j]; }

    double k1(int j) const { return b1[j] / d1[j]; }
    double k2(int j) const { return b2[j] / d2[j]; }
    double alpha_hat(int j) const { return alpha[j] / m1[j]; }
    double beta_hat(int j) const { return beta[j] / m2[j]; }
    double q_hat(int j) const { return mc * q[j] * beta[j] / m2[j]; }
    double gamma_hat_r() const { return gamma_r + gamma_rho; }

    TraitVectors vectors() const {
        TraitVectors v;
        v.A.resize(M);
        v.B.resize(M);
        v.Q.resize(M);
        v.Theta.resize(M);
        v.Gamma.resize(M);
        for (int j = 0; j < M; ++j) {
            v.A[j] = alpha_hat(j) * k1(j);
            v.B[j] = theta_r[j] * beta_hat(j) * k2(j);
            v.Q[j] = q_hat(j) * k2(j);
            v.Theta[j] = theta_p[j] * v.Q[j];
            v.Gamma[j] = gamma[j];
        }
        return v;
    }

    MTParams validated() const {
        const MTParams& p = *this;
        detail::require(p.M >= 1, "M must be >= 1");
        auto sz = static_cast<std::size_t>(p.M);
        auto check_len = [&](const std::vector<double>& v, const std::string& name) {
            detail::require(v.size() == sz, name + " must have M entries");
        };
        check_len(p.b1, "b1");
        check_len(p.d1, "d1");
        check_len(p.b2, "b2");
        check_len(p.d2, "d2");
        check_len(p.alpha, "alpha");
        check_len(p.beta, "beta");
        check_len(p.q, "q");
        check_len(p.theta_r, "theta_r");
        check_len(p.theta_p, "theta_p");
        check_len(p.gamma, "gamma");
        check_len(p.gamma_n, "gamma_n");
        check_len(p.mu, "mu");
        check_len(p.m1, "m1");
        check_len(p.m2, "m2");
        check_len(p.n_bar, "n_bar");
        detail::require(p.nu_flat.size() == sz * sz, "nu must be an M x M matrix");
        for (int j = 0; j < p.M; ++j) {
            std::string t = "[" + std::to_string(j + 1) + "]";
            if (!(p.d1[j] > 0.0)) throw std::invalid_argument("k1 undefined (d1" + t + " must be > 0)");
            if (!(p.d2[j] > 0.0)) throw std::invalid_argument("k2 undefined (d2" + t + " must be > 0)");
            detail::require_nonneg(p.b1[j], "b1" + t);
            detail::require_nonneg(p.b2[j], "b2" + t);
            detail::require_nonneg(p.alpha[j], "alpha" + t);
            detail::require_nonneg(p.beta[j], "beta" + t);
            detail::require_nonneg(p.q[j], "q" + t);
            detail::require_fraction(p.theta_r[j], "theta_r" + t);
            detail::require_fraction(p.theta_p[j], "theta_p" + t);
            detail::require_nonneg(p.gamma[j], "gamma" + t);
            detail::require_nonneg(p.gamma_n[j], "gamma_n" + t);
            detail::require_nonneg(p.mu[j], "mu" + t);
            detail::require_positive(p.m1[j], "m1" + t);
            detail::require_positive(p.m2[j], "m2" + t);
            detail::require_positive(p.n_bar[j], "n_bar" + t);
        }
        detail::require_nonneg(p.gamma_r, "gamma_r");
        detail::require_positive(p.gamma_rho, "gamma_rho");
        detail::require_positive(p.gamma_p, "gamma_p");
        detail::require_nonneg(p.r, "r");
        detail::require_positive(p.mc, "mc");
        for (int i = 0; i < p.M; ++i)
            for (int j = 0; j < p.M; ++j)
                detail::require_nonneg(p.nu(i, j), "nu[" + std::to_string(i + 1) + "," +
                                                       std::to_string(j + 1) + "]");
        for (int j = 0; j < p.M; ++j) {
            double col = 0.0;
            for (int i = 0; i < p.M; ++i) col += p.nu(i, j);
            if (std::abs(col - 1.0) > 1e-12)
                throw std::invalid_argument("sharing matrix column " + std::to_string(j + 1) +
                                            " not stochastic");
        }
        return p;
    }

    /// Single-trait system replicated over M slots with uniform sharing.
    static MTParams replicate(const TParams& t, int M) {
        MTParams p;
        p.M = M;
        auto sz = static_cast<std::size_t>(M);
        p.b1.assign(sz, t.b1);
        p.d1.assign(sz, t.d1);
        p.b2.assign(sz, t.b2);
        p.d2.assign(sz, t.d2);
        p.alpha.assign(sz, t.alpha);
        p.beta.assign(sz, t.beta);
        p.q.assign(sz, t.q);
        p.theta_r.assign(sz, t.theta_r);
        p.theta_p.assign(sz, t.theta_p);
        p.gamma.assign(sz, t.gamma);
        p.gamma_n.assign(sz, t.gamma_n);
        p.mu.assign(sz, t.mu);
        p.m1.assign(sz, t.m1);
        p.m2.assign(sz, t.m2);
        p.n_bar.assign(sz, t.n_bar);
        p.gamma_r = t.gamma_r;
        p.gamma_rho = t.gamma_rho;
        p.gamma_p = t.gamma_p;
        p.r = t.r;
        p.mc = t.mc;
        p.nu_flat.assign(sz * sz, 1.0 / M);
        return p;
    }
};

/// Aggregated-system constants implied by uniform chain-resolved rates.
inline SParams s_params_from(const NSParams& ns) {
    if (!ns.uniform())
        throw std::domain_error("aggregation to the site-resolved system requires uniform rates");
    SParams s;
    s.b1 = ns.b1;
    s.d1 = ns.d1;
    s.b2 = ns.b2;
    s.d21 = ns.d21;
    s.d22 = ns.d22.uniform_value();
    s.sigma = ns.sigma.uniform_value();
    s.alpha = ns.alpha.uniform_value();
    s.beta = ns.beta.uniform_value();
    s.q = ns.q.uniform_value();
    s.theta_r = ns.theta_r;
    s.theta_p = ns.theta_p;
    s.gamma_r = ns.gamma_r.uniform_value();
    s.gamma_rho = ns.gamma_rho.uniform_value();
    s.gamma = ns.gamma;
    s.gamma_p = ns.gamma_p;
    s.gamma_n = ns.gamma_n;
    s.mu = ns.mu;
    s.m1 = ns.m1;
    s.m2 = ns.m2;
    s.mc = ns.mc;
    s.r = ns.aggregate_influx();
    s.n_bar = ns.n_bar;
    return s;
}

/// Lumped-system constants for the instantaneous-cleave limit of the
/// aggregated system (sigma = 1, d22 = 0, d21 -> d2).
inline TParams t_params_from(const SParams& s) {
    TParams t;
    t.b1 = s.b1;
    t.d1 = s.d1;
    t.b2 = s.b2;
    t.d2 = s.d21;
    t.alpha = s.alpha;
    t.beta = s.beta;
    t.q = s.q;
    t.theta_r = s.theta_r;
    t.theta_p = s.theta_p;
    t.gamma_r = s.gamma_r;
    t.gamma_rho = s.gamma_rho;
    t.gamma = s.gamma;
    t.gamma_p = s.gamma_p;
    t.gamma_n = s.gamma_n;
    t.mu = s.mu;
    t.m1 = s.m1;
    t.m2 = s.m2;
    t.mc = s.mc;
    t.r = s.r;
    t.n_bar = s.n_bar;
    return t;
}

}  // namespace cellodeg
