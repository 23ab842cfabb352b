#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellodeg/state.hpp"

namespace cellodeg {

/// Adaptive step control for the embedded 5(4) pair.
struct StepControl {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 20'000'000;

    StepControl validated() const {
        const StepControl& c = *this;
        if (!(c.rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
        if (!(c.abs_tol > 0.0)) throw std::invalid_argument("abs_tol must be > 0");
        if (!(c.h_min > 0.0)) throw std::invalid_argument("h_min must be > 0");
        if (!(c.h_min <= c.h_init && c.h_init <= c.h_max))
            throw std::invalid_argument("need h_min <= h_init <= h_max");
        if (c.max_steps <= 0) throw std::invalid_argument("max_steps must be > 0");
        return c;
    }
};

namespace rk {

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// difference between the 5th and embedded 4th order weights
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace rk

/// One Dormand-Prince step from (t, y) with size h. Fills the 5th-order
/// solution, the embedded local error estimate, and the derivative at the
/// new point (FSAL). `k1` must hold rhs(t, y) on entry.
template <class RHS>
void rk45_step(RHS&& rhs, double t, const std::vector<double>& y, double h,
               const std::vector<double>& k1, std::vector<double>& y_new,
               std::vector<double>& err, std::vector<double>& k_last,
               std::vector<std::vector<double>>& work) {
    using namespace rk;
    const std::size_t dim = y.size();
    work.resize(6);
    for (auto& w : work) w.resize(dim);
    std::vector<double>& k2 = work[0];
    std::vector<double>& k3 = work[1];
    std::vector<double>& k4 = work[2];
    std::vector<double>& k5 = work[3];
    std::vector<double>& k6 = work[4];
    std::vector<double>& tmp = work[5];

    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < dim; ++i)
        tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < dim; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < dim; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, tmp, k6);

    y_new.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        y_new[i] =
            y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k_last.resize(dim);
    rhs(t + h, y_new, k_last);

    err.resize(dim);
    for (std::size_t i = 0; i < dim; ++i)
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                      e7 * k_last[i]);
}

/// Convenience single-step form (no FSAL reuse); returns the 5th-order result.
template <class RHS>
std::vector<double> rk45_step(RHS&& rhs, double t, const std::vector<double>& y, double h) {
    std::vector<double> k1(y.size()), y_new, err, k_last;
    std::vector<std::vector<double>> work;
    rhs(t, y, k1);
    rk45_step(rhs, t, y, h, k1, y_new, err, k_last, work);
    return y_new;
}

namespace detail {

inline void check_finite(const std::vector<double>& y, double t) {
    for (double v : y)
        if (!std::isfinite(v))
            throw std::runtime_error("non-finite state at t = " + std::to_string(t));
}

// Componentwise acceptance measure: max_i |e_i| / (abs_tol + rel_tol*max(|y_i|,|y'_i|)).
inline double error_ratio(const std::vector<double>& err, const std::vector<double>& y,
                          const std::vector<double>& y_new, const StepControl& c) {
    double worst = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double scale = c.abs_tol + c.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        worst = std::max(worst, std::abs(err[i]) / scale);
    }
    return worst;
}

template <class RHS, class OnAccept>
void integrate_core(RHS&& rhs, std::vector<double>& y, double t0, double t1,
                    const StepControl& ctrl, StepStats& stats, OnAccept&& on_accept) {
    const StepControl c = ctrl.validated();
    if (!(t1 > t0)) throw std::invalid_argument("integration span must have t1 > t0");
    detail::check_finite(y, t0);

    double t = t0;
    double h = std::min(c.h_init, t1 - t0);
    std::vector<double> k1(y.size()), y_new, err, k_last;
    std::vector<std::vector<double>> work;
    rhs(t, y, k1);

    long steps = 0;
    while (t < t1) {
        if (++steps > c.max_steps)
            throw std::runtime_error("step limit exceeded at t = " + std::to_string(t));
        const double h_cap = std::min(c.h_max, t1 - t);
        h = std::min(std::max(h, c.h_min), h_cap);
        const bool clipped = (h >= t1 - t);

        rk45_step(rhs, t, y, h, k1, y_new, err, k_last, work);
        detail::check_finite(y_new, t + h);
        const double ratio = error_ratio(err, y, y_new, c);

        double factor = (ratio > 0.0) ? 0.9 * std::pow(ratio, -0.2) : 5.0;
        factor = std::clamp(factor, 0.2, 5.0);

        if (ratio <= 1.0) {
            t = clipped ? t1 : t + h;
            y.swap(y_new);
            k1.swap(k_last);
            stats.accepted++;
            stats.max_error_estimate = std::max(stats.max_error_estimate, ratio);
            if (!on_accept(t, y)) return;
            h *= factor;
        } else {
            if (h <= c.h_min)
                throw std::runtime_error("step size underflow at t = " + std::to_string(t));
            stats.rejected++;
            h *= factor;
        }
    }
}

}  // namespace detail

/// Integrate rhs over [t0, t1], recording every accepted step. The trajectory
/// starts at t0 and ends at t1 exactly.
template <class RHS>
Trajectory integrate(RHS&& rhs, const std::vector<double>& y0, double t0, double t1,
                     const StepControl& ctrl) {
    Trajectory traj;
    std::vector<double> y = y0;
    traj.times.push_back(t0);
    traj.states.push_back(y);
    detail::integrate_core(rhs, y, t0, t1, ctrl, traj.stats,
                           [&](double t, const std::vector<double>& s) {
                               traj.times.push_back(t);
                               traj.states.push_back(s);
                               return true;
                           });
    return traj;
}

/// Integrate through a strictly increasing checkpoint list, recording exactly
/// those times (first entry is the initial condition).
template <class RHS>
Trajectory integrate_through(RHS&& rhs, const std::vector<double>& y0,
                             const std::vector<double>& times, const StepControl& ctrl) {
    if (times.size() < 2) throw std::invalid_argument("need at least two checkpoint times");
    Trajectory traj;
    std::vector<double> y = y0;
    traj.times.push_back(times.front());
    traj.states.push_back(y);
    for (std::size_t k = 1; k < times.size(); ++k) {
        detail::integrate_core(rhs, y, times[k - 1], times[k], ctrl, traj.stats,
                               [](double, const std::vector<double>&) { return true; });
        traj.times.push_back(times[k]);
        traj.states.push_back(y);
    }
    return traj;
}

/// Relax toward an equilibrium: returns the first state with
/// ||rhs(y)||_inf <= stall_tol * (1 + ||y||_inf); fails at t_cap.
template <class RHS>
std::vector<double> integrate_to_steady(RHS&& rhs, const std::vector<double>& y0,
                                        const StepControl& ctrl, double stall_tol,
                                        double t_cap) {
    if (!(stall_tol > 0.0)) throw std::invalid_argument("stall_tol must be > 0");
    if (!(t_cap > 0.0)) throw std::invalid_argument("t_cap must be > 0");

    std::vector<double> y = y0, dydt(y0.size());
    auto residual = [&](const std::vector<double>& state) {
        rhs(0.0, state, dydt);
        double r = 0.0, s = 0.0;
        for (double v : dydt) r = std::max(r, std::abs(v));
        for (double v : state) s = std::max(s, std::abs(v));
        return r / (1.0 + s);
    };

    double res = residual(y);
    if (res <= stall_tol) return y;

    StepStats stats;
    bool done = false;
    detail::integrate_core(rhs, y, 0.0, t_cap, ctrl, stats,
                           [&](double, const std::vector<double>& s) {
                               done = residual(s) <= stall_tol;
                               return !done;
                           });
    if (!done)
        throw std::runtime_error("no steady state reached by t_cap; residual = " +
                                 std::to_string(residual(y)));
    return y;
}

}  // namespace cellodeg
