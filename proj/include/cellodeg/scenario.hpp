#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cellodeg/birth_rates.hpp"
#include "cellodeg/continuous.hpp"
#include "cellodeg/integrate.hpp"
#include "cellodeg/ns_equilibrium.hpp"
#include "cellodeg/ns_model.hpp"
#include "cellodeg/reduced_models.hpp"

namespace cellodeg {

using nlohmann::json;

/// A fully validated run description: model tier, command, parameter record,
/// optional initial state, time span and step control.
struct Scenario {
    std::string model;    // ns | s | t | mt | continuous
    std::string command;  // simulate | steady | birthrate | reduce-check | diagnostics
    json raw;             // the parsed config, echoed into run metadata

    std::variant<std::monostate, NSParams, SParams, TParams, MTParams> params;
    double t0 = 0, t1 = 0;
    StepControl ctrl;

    // continuous model pieces
    std::vector<double> atom_x, atom_w;
    std::optional<MTParams> atom_params;
};

namespace cfg {

inline const json& need(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::invalid_argument("config missing key '" + key + "' in " + where);
    return *it;
}

inline double number(const json& j, const std::string& key, const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_number())
        throw std::invalid_argument("config key '" + key + "' in " + where + " must be a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<double>();
}

inline std::vector<double> number_list(const json& j, const std::string& key,
                                       const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_array())
        throw std::invalid_argument("config key '" + key + "' in " + where + " must be an array");
    return v.get<std::vector<double>>();
}

inline LocalTable table(const json& j, const std::string& key, const IndexSetIL& idx) {
    const json& v = need(j, key, "params");
    if (v.is_number()) return LocalTable(idx, v.get<double>());
    if (v.is_object()) {
        LocalTable t(idx, number(v, "default", "params." + key));
        if (v.contains("overrides"))
            for (const auto& e : v.at("overrides")) {
                if (!e.is_array() || e.size() != 3)
                    throw std::invalid_argument("params." + key +
                                                ".overrides entries must be [l, i, value]");
                t.set(e[0].get<int>(), e[1].get<int>(), e[2].get<double>());
            }
        return t;
    }
    throw std::invalid_argument("params." + key + " must be a number or {default, overrides}");
}

inline NSParams ns_params(const json& p) {
    const int L = static_cast<int>(number(p, "L", "params"));
    NSParams out;
    out.idx = IndexSetIL(L);
    out.b1 = number(p, "b1", "params");
    out.d1 = number(p, "d1", "params");
    out.b2 = number(p, "b2", "params");
    out.d21 = number(p, "d21", "params");
    out.beta = table(p, "beta", out.idx);
    out.sigma = table(p, "sigma", out.idx);
    out.gamma_r = table(p, "gamma_r", out.idx);
    out.d22 = table(p, "d22", out.idx);
    out.alpha = table(p, "alpha", out.idx);
    out.q = table(p, "q", out.idx);
    out.gamma_rho = table(p, "gamma_rho", out.idx);
    const json& r0 = need(p, "r0", "params");
    if (r0.is_number())
        out.r0.assign(static_cast<std::size_t>(L), r0.get<double>());
    else
        out.r0 = r0.get<std::vector<double>>();
    out.m1 = number(p, "m1", "params");
    out.m2 = number(p, "m2", "params");
    out.mc = number(p, "mc", "params");
    out.theta_r = number(p, "theta_r", "params");
    out.theta_p = number(p, "theta_p", "params");
    out.gamma = number(p, "gamma", "params");
    out.gamma_p = number(p, "gamma_p", "params");
    out.gamma_n = number(p, "gamma_n", "params");
    out.mu = number(p, "mu", "params");
    out.n_bar = number(p, "n_bar", "params");
    return out.validated();
}

inline SParams s_params(const json& p) {
    SParams out;
    out.b1 = number(p, "b1", "params");
    out.d1 = number(p, "d1", "params");
    out.b2 = number(p, "b2", "params");
    out.d21 = number(p, "d21", "params");
    out.d22 = number(p, "d22", "params");
    out.sigma = number(p, "sigma", "params");
    out.alpha = number(p, "alpha", "params");
    out.beta = number(p, "beta", "params");
    out.q = number(p, "q", "params");
    out.theta_r = number(p, "theta_r", "params");
    out.theta_p = number(p, "theta_p", "params");
    out.gamma_r = number(p, "gamma_r", "params");
    out.gamma_rho = number(p, "gamma_rho", "params");
    out.gamma = number(p, "gamma", "params");
    out.gamma_p = number(p, "gamma_p", "params");
    out.gamma_n = number(p, "gamma_n", "params");
    out.mu = number(p, "mu", "params");
    out.m1 = number(p, "m1", "params");
    out.m2 = number(p, "m2", "params");
    out.mc = number(p, "mc", "params");
    out.r = number(p, "r", "params");
    out.n_bar = number(p, "n_bar", "params");
    return out.validated();
}

inline TParams t_params(const json& p) {
    TParams out;
    out.b1 = number(p, "b1", "params");
    out.d1 = number(p, "d1", "params");
    out.b2 = number(p, "b2", "params");
    out.d2 = number(p, "d2", "params");
    out.alpha = number(p, "alpha", "params");
    out.beta = number(p, "beta", "params");
    out.q = number(p, "q", "params");
    out.theta_r = number(p, "theta_r", "params");
    out.theta_p = number(p, "theta_p", "params");
    out.gamma_r = number(p, "gamma_r", "params");
    out.gamma_rho = number(p, "gamma_rho", "params");
    out.gamma = number(p, "gamma", "params");
    out.gamma_p = number(p, "gamma_p", "params");
    out.gamma_n = number(p, "gamma_n", "params");
    out.mu = number(p, "mu", "params");
    out.m1 = number(p, "m1", "params");
    out.m2 = number(p, "m2", "params");
    out.mc = number(p, "mc", "params");
    out.r = number(p, "r", "params");
    out.n_bar = number(p, "n_bar", "params");
    return out.validated();
}

inline MTParams mt_params(const json& p) {
    MTParams out;
    out.M = static_cast<int>(number(p, "M", "params"));
    out.b1 = number_list(p, "b1", "params");
    out.d1 = number_list(p, "d1", "params");
    out.b2 = number_list(p, "b2", "params");
    out.d2 = number_list(p, "d2", "params");
    out.alpha = number_list(p, "alpha", "params");
    out.beta = number_list(p, "beta", "params");
    out.q = number_list(p, "q", "params");
    out.theta_r = number_list(p, "theta_r", "params");
    out.theta_p = number_list(p, "theta_p", "params");
    out.gamma = number_list(p, "gamma", "params");
    out.gamma_n = number_list(p, "gamma_n", "params");
    out.mu = number_list(p, "mu", "params");
    out.m1 = number_list(p, "m1", "params");
    out.m2 = number_list(p, "m2", "params");
    out.n_bar = number_list(p, "n_bar", "params");
    out.gamma_r = number(p, "gamma_r", "params");
    out.gamma_rho = number(p, "gamma_rho", "params");
    out.gamma_p = number(p, "gamma_p", "params");
    out.r = number(p, "r", "params");
    out.mc = number(p, "mc", "params");
    const json& nu = need(p, "nu", "params");
    for (const auto& row : nu)
        for (const auto& v : row) out.nu_flat.push_back(v.get<double>());
    return out.validated();
}

inline StepControl control(const json& j) {
    StepControl c;
    if (!j.contains("control")) return c;
    const json& v = j.at("control");
    c.rel_tol = number_or(v, "rel_tol", c.rel_tol);
    c.abs_tol = number_or(v, "abs_tol", c.abs_tol);
    c.h_init = number_or(v, "h_init", c.h_init);
    c.h_min = number_or(v, "h_min", c.h_min);
    c.h_max = number_or(v, "h_max", c.h_max);
    c.max_steps = static_cast<long>(number_or(v, "max_steps", double(c.max_steps)));
    return c.validated();
}

}  // namespace cfg

/// Parse and validate a scenario file. Parameter validation is delegated to
/// the parameter records and reported with the offending key.
inline Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }

    Scenario sc;
    sc.raw = j;
    sc.model = cfg::need(j, "model", "config").get<std::string>();
    sc.command = cfg::need(j, "command", "config").get<std::string>();

    static const std::vector<std::string> models = {"ns", "s", "t", "mt", "continuous"};
    static const std::vector<std::string> commands = {"simulate", "steady", "birthrate",
                                                      "reduce-check", "diagnostics"};
    if (std::find(models.begin(), models.end(), sc.model) == models.end())
        throw std::invalid_argument("unknown model '" + sc.model + "'");
    if (std::find(commands.begin(), commands.end(), sc.command) == commands.end())
        throw std::invalid_argument("unknown command '" + sc.command + "'");

    const json& p = cfg::need(j, "params", "config");
    if (sc.model == "ns")
        sc.params = cfg::ns_params(p);
    else if (sc.model == "s")
        sc.params = cfg::s_params(p);
    else if (sc.model == "t")
        sc.params = cfg::t_params(p);
    else if (sc.model == "mt")
        sc.params = cfg::mt_params(p);
    else {
        const json& atoms = cfg::need(j, "atoms", "config");
        sc.atom_x = cfg::number_list(atoms, "x", "atoms");
        sc.atom_w = cfg::number_list(atoms, "w", "atoms");
        if (sc.atom_x.size() != sc.atom_w.size())
            throw std::invalid_argument("atoms.x and atoms.w must have equal length");
        json pp = p;
        pp["M"] = sc.atom_x.size();
        sc.atom_params = cfg::mt_params(pp);
    }

    if (j.contains("t_span")) {
        const auto span = j.at("t_span").get<std::vector<double>>();
        if (span.size() != 2) throw std::invalid_argument("t_span must be [t0, t1]");
        sc.t0 = span[0];
        sc.t1 = span[1];
    }
    sc.ctrl = cfg::control(j);
    return sc;
}

namespace out {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<double>& times,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "time";
    for (const auto& h : header) f << "," << h;
    f << "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        f << fmt(times[r]);
        for (double v : rows[r]) f << "," << fmt(v);
        f << "\n";
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

inline json stats_json(const StepStats& s) {
    return json{{"accepted", s.accepted},
                {"rejected", s.rejected},
                {"max_error_estimate", s.max_error_estimate}};
}

}  // namespace out

namespace detail {

inline NSState ns_initial_state(const json& j, const NSParams& par) {
    NSState s(par.idx);
    if (!j.contains("initial")) return s;
    const json& v = j.at("initial");
    if (v.contains("N"))
        for (const auto& e : v.at("N")) s.N_ref(e[0].get<int>(), e[1].get<int>()) = e[2].get<double>();
    if (v.contains("e22"))
        for (const auto& e : v.at("e22"))
            s.e22_ref(e[0].get<int>(), e[1].get<int>()) = e[2].get<double>();
    s.e1 = cfg::number_or(v, "e1", 0.0);
    s.e21 = cfg::number_or(v, "e21", 0.0);
    s.p = cfg::number_or(v, "p", 0.0);
    s.n = cfg::number_or(v, "n", 0.0);
    return s;
}

inline SState s_initial_state(const json& j) {
    SState s;
    if (!j.contains("initial")) return s;
    const json& v = j.at("initial");
    s.e1 = cfg::number_or(v, "e1", 0.0);
    s.e21 = cfg::number_or(v, "e21", 0.0);
    s.e22 = cfg::number_or(v, "e22", 0.0);
    s.S = cfg::number_or(v, "S", 0.0);
    s.rho = cfg::number_or(v, "rho", 0.0);
    s.p = cfg::number_or(v, "p", 0.0);
    s.n = cfg::number_or(v, "n", 0.0);
    return s;
}

inline TState t_initial_state(const json& j) {
    TState s;
    if (!j.contains("initial")) return s;
    const json& v = j.at("initial");
    s.e1 = cfg::number_or(v, "e1", 0.0);
    s.e2 = cfg::number_or(v, "e2", 0.0);
    s.T = cfg::number_or(v, "T", 0.0);
    s.rho = cfg::number_or(v, "rho", 0.0);
    s.p = cfg::number_or(v, "p", 0.0);
    s.n = cfg::number_or(v, "n", 0.0);
    return s;
}

inline MTState mt_initial_state(const json& j, const MTParams& par) {
    MTState s(par.M);
    if (!j.contains("initial")) return s;
    const json& v = j.at("initial");
    if (v.contains("e1")) s.e1 = v.at("e1").get<std::vector<double>>();
    if (v.contains("e2")) s.e2 = v.at("e2").get<std::vector<double>>();
    if (v.contains("n")) s.n = v.at("n").get<std::vector<double>>();
    s.T = cfg::number_or(v, "T", 0.0);
    s.rho = cfg::number_or(v, "rho", 0.0);
    s.p = cfg::number_or(v, "p", 0.0);
    if (s.e1.size() != static_cast<std::size_t>(par.M) ||
        s.e2.size() != static_cast<std::size_t>(par.M) ||
        s.n.size() != static_cast<std::size_t>(par.M))
        throw std::invalid_argument("initial state arrays must have M entries");
    return s;
}

template <class System, class State>
void run_simulate(const Scenario& sc, const System& sys, const State& s0,
                  const std::vector<std::string>& labels, const std::filesystem::path& dir) {
    std::vector<double> y0;
    s0.pack(y0);
    Trajectory traj;
    if (sc.t1 > sc.t0) {
        traj = integrate(sys, y0, sc.t0, sc.t1, sc.ctrl);
    } else if (sc.t1 == sc.t0) {
        traj.times.push_back(sc.t0);
        traj.states.push_back(y0);
    } else {
        throw std::invalid_argument("t_span must have t1 >= t0");
    }
    out::write_csv(dir / "trajectory.csv", labels, traj.times, traj.states);
    json meta = {{"config", sc.raw}, {"stats", out::stats_json(traj.stats)}};
    out::write_json(dir / "meta.json", meta);
}

inline std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    for (int k = 0; k < points; ++k)
        g[k] = lo * std::pow(hi / lo, points == 1 ? 0.0 : double(k) / (points - 1));
    return g;
}

inline void run_birthrate(const Scenario& sc, const std::filesystem::path& dir) {
    double lo_f = 1e-6, hi_f = 1e3;
    int points = 60;
    if (sc.raw.contains("birthrate")) {
        const json& b = sc.raw.at("birthrate");
        lo_f = cfg::number_or(b, "n_min", lo_f);
        hi_f = cfg::number_or(b, "n_max", hi_f);
        points = static_cast<int>(cfg::number_or(b, "points", points));
    }

    std::vector<double> grid, B;
    json diag;
    if (sc.model == "t") {
        const TParams& par = std::get<TParams>(sc.params);
        grid = log_grid(lo_f * par.n_bar, hi_f * par.n_bar, points);
        for (double n : grid) B.push_back(t_birth_rate(n, par));
        const Quadratic P2 = site_equilibrium_poly(par);
        diag["K"] = t_birth_rate_K(par);
        diag["Phi0"] = t_phi(0.0, par);
        diag["K_Phi0"] = t_birth_rate_K(par) * t_phi(0.0, par);
        diag["c0"] = P2.c0;
        diag["c1"] = P2.c1;
        diag["c2"] = P2.c2;
        try {
            diag["n_star"] = cooperation_threshold(par);
        } catch (const std::exception& e) {
            diag["n_star"] = nullptr;
            diag["n_star_note"] = e.what();
        }
        const double sens = sharing_sensitivity(par);
        diag["sharing_sensitivity"] = sens;
        diag["sharing_sign"] = sens > 0 ? 1 : (sens < 0 ? -1 : 0);
    } else if (sc.model == "ns") {
        const NSParams& par = std::get<NSParams>(sc.params);
        grid = log_grid(lo_f * par.n_bar, hi_f * par.n_bar, points);
        for (double n : grid) B.push_back(ns_birth_rate(n, par));
        diag["p_bar0"] = ns_series_coefficients(par).p_bar0;
        const double sens = ns_sharing_sensitivity(par);
        diag["sharing_sensitivity"] = sens;
        diag["sharing_sign"] = sens > 0 ? 1 : (sens < 0 ? -1 : 0);
    } else {
        throw std::invalid_argument("birthrate supports the t and ns models");
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < grid.size(); ++k)
        rows.push_back({B[k], B[k] / (grid[k] * grid[k])});
    out::write_csv(dir / "birthrate.csv", {"B", "B_over_n2"}, grid, rows);
    json meta = {{"config", sc.raw}, {"diagnostics", diag}};
    out::write_json(dir / "meta.json", meta);
}

inline void run_steady(const Scenario& sc, const std::filesystem::path& dir) {
    json meta = {{"config", sc.raw}};
    const json& st = sc.raw.contains("steady") ? sc.raw.at("steady") : json::object();
    if (sc.model == "ns") {
        const NSParams& par = std::get<NSParams>(sc.params);
        const double n = cfg::number(st, "n", "steady");
        const NSEquilibrium eq = ns_fast_equilibrium(n, par);
        NSState s(par.idx);
        s.chain_count = eq.chains;
        s.attached_mass = eq.attached;
        s.e1 = eq.e1;
        s.e21 = eq.e21;
        s.p = eq.p;
        s.n = n;
        std::vector<double> y;
        s.pack(y);
        out::write_csv(dir / "steady.csv", s.labels(), {0.0}, {y});
        meta["residual"] = eq.residual;
        meta["p_hat"] = eq.p;
    } else if (sc.model == "t") {
        const TParams& par = std::get<TParams>(sc.params);
        const double n = cfg::number(st, "n", "steady");
        const TQuasiEquilibrium eq = t_quasi_equilibrium(n, par);
        TState s{eq.e1, eq.e2, eq.T, eq.rho, eq.p, n};
        std::vector<double> y;
        s.pack(y);
        const TState d = t_rhs(s, par);
        const double residual = std::max({std::abs(d.e1), std::abs(d.e2), std::abs(d.T),
                                          std::abs(d.rho), std::abs(d.p)});
        out::write_csv(dir / "steady.csv", TState::labels(), {0.0}, {y});
        meta["residual"] = residual;
    } else if (sc.model == "s" || sc.model == "mt") {
        const double stall = cfg::number_or(st, "stall_tol", 1e-10);
        const double t_cap = cfg::number_or(st, "t_cap", 1e8);
        auto inf_norm = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m = std::max(m, std::abs(x));
            return m;
        };
        std::vector<double> y0, y;
        if (sc.model == "s") {
            SSystem sys{std::get<SParams>(sc.params)};
            s_initial_state(sc.raw).pack(y0);
            y = integrate_to_steady(sys, y0, sc.ctrl, stall, t_cap);
            out::write_csv(dir / "steady.csv", SState::labels(), {0.0}, {y});
            std::vector<double> d(y.size());
            sys(0.0, y, d);
            meta["residual"] = inf_norm(d);
        } else {
            MTSystem sys{std::get<MTParams>(sc.params)};
            mt_initial_state(sc.raw, std::get<MTParams>(sc.params)).pack(y0);
            y = integrate_to_steady(sys, y0, sc.ctrl, stall, t_cap);
            out::write_csv(dir / "steady.csv",
                           mt_initial_state(sc.raw, std::get<MTParams>(sc.params)).labels(), {0.0},
                           {y});
            std::vector<double> d(y.size());
            sys(0.0, y, d);
            meta["residual"] = inf_norm(d);
        }
    } else {
        throw std::invalid_argument("steady supports the ns, t, s and mt models");
    }
    out::write_json(dir / "meta.json", meta);
}

inline void run_reduce_check(const Scenario& sc, const std::filesystem::path& dir) {
    if (sc.model != "ns") throw std::invalid_argument("reduce-check requires the ns model");
    const NSParams& par = std::get<NSParams>(sc.params);
    if (!par.uniform()) throw std::domain_error("reduce-check requires uniform rates");

    int checkpoints = 50, margin = 30;
    if (sc.raw.contains("reduce_check")) {
        const json& rc = sc.raw.at("reduce_check");
        checkpoints = static_cast<int>(cfg::number_or(rc, "checkpoints", checkpoints));
        margin = static_cast<int>(cfg::number_or(rc, "margin", margin));
    }
    if (!(sc.t1 > sc.t0)) throw std::invalid_argument("reduce-check needs t1 > t0");

    const NSState s0 = ns_initial_state(sc.raw, par);
    const RectGrid grid = RectGrid::padded(par.L(), margin);
    const NSStateRect x0 = embed(s0, grid);
    NsSystem<RectGrid> ns_sys(grid, par);

    const SParams sp = s_params_from(par);
    SSystem s_sys{sp};
    std::vector<double> ys0;
    reduce_to_s_state(s0, par).pack(ys0);

    std::vector<double> times(checkpoints + 1);
    for (int k = 0; k <= checkpoints; ++k)
        times[k] = sc.t0 + (sc.t1 - sc.t0) * double(k) / checkpoints;

    std::vector<double> yn0;
    x0.pack(yn0);
    const Trajectory tn = integrate_through(ns_sys, yn0, times, sc.ctrl);
    const Trajectory ts = integrate_through(s_sys, ys0, times, sc.ctrl);

    NSStateRect scratch(grid);
    double max_dev = 0.0;
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < times.size(); ++k) {
        scratch.unpack(tn.states[k]);
        std::vector<double> agg, s_state;
        reduce_to_s_state(scratch, par).pack(agg);
        s_state = ts.states[k];
        std::vector<double> row;
        for (std::size_t c = 0; c < agg.size(); ++c) {
            row.push_back(agg[c]);
            row.push_back(s_state[c]);
            const double scale = std::max({std::abs(agg[c]), std::abs(s_state[c]), 1e-12});
            max_dev = std::max(max_dev, std::abs(agg[c] - s_state[c]) / scale);
        }
        rows.push_back(std::move(row));
    }

    std::vector<std::string> header;
    for (const auto& lbl : SState::labels()) {
        header.push_back("ns_" + lbl);
        header.push_back("s_" + lbl);
    }
    out::write_csv(dir / "reduce_check.csv", header, times, rows);
    json meta = {{"config", sc.raw},
                 {"max_relative_deviation", max_dev},
                 {"tolerance", 10.0 * sc.ctrl.rel_tol},
                 {"ns_stats", out::stats_json(tn.stats)},
                 {"s_stats", out::stats_json(ts.stats)}};
    out::write_json(dir / "meta.json", meta);
    if (max_dev > 10.0 * sc.ctrl.rel_tol)
        throw std::runtime_error("aggregated trajectories deviate beyond tolerance: " +
                                 std::to_string(max_dev));
}

inline void run_diagnostics(const Scenario& sc, const std::filesystem::path& dir) {
    if (sc.model != "mt") throw std::invalid_argument("diagnostics requires the mt model");
    const MTParams& par = std::get<MTParams>(sc.params);
    json report;

    for (int i = 0; i < par.M; ++i) {
        json entry;
        const double nb = par.n_bar[i];
        const double h_grad = 1e-8 * nb;
        std::vector<double> n(par.M, 0.0);
        double grad_norm = 0.0;
        for (int j = 0; j < par.M; ++j) {
            n[j] = h_grad;
            const double up = mt_birth_rate(i, n, par);
            n[j] = -h_grad;
            const double dn = mt_birth_rate(i, n, par);
            n[j] = 0.0;
            grad_norm = std::max(grad_norm, std::abs(up - dn) / (2.0 * h_grad));
        }
        entry["grad_fd_norm"] = grad_norm;

        const std::vector<double> H = mt_hessian_at_zero(i, par);
        entry["hessian"] = json::array();
        for (int a = 0; a < par.M; ++a) {
            json row = json::array();
            for (int b = 0; b < par.M; ++b) row.push_back(H[a * par.M + b]);
            entry["hessian"].push_back(row);
        }

        const double h = 1e-5 * nb;
        double max_dev = 0.0, h_max = 0.0;
        for (double v : H) h_max = std::max(h_max, std::abs(v));
        for (int a = 0; a < par.M; ++a)
            for (int b = 0; b < par.M; ++b) {
                double fd;
                if (a == b) {
                    n.assign(par.M, 0.0);
                    n[a] = h;
                    const double up = mt_birth_rate(i, n, par);
                    n[a] = -h;
                    const double dn = mt_birth_rate(i, n, par);
                    fd = (up + dn) / (h * h);
                } else {
                    auto probe = [&](double sa, double sb) {
                        n.assign(par.M, 0.0);
                        n[a] = sa * h;
                        n[b] = sb * h;
                        return mt_birth_rate(i, n, par);
                    };
                    fd = (probe(1, 1) + probe(-1, -1) - probe(1, -1) - probe(-1, 1)) /
                         (4.0 * h * h);
                }
                const double exact = H[a * par.M + b];
                if (std::abs(exact) > 1e-6 * h_max)
                    max_dev = std::max(max_dev, std::abs(fd - exact) / std::abs(exact));
            }
        entry["hessian_fd_max_rel_dev"] = max_dev;
        report["trait_" + std::to_string(i + 1)] = entry;
    }

    bool diagonal = true;
    for (int a = 0; a < par.M; ++a)
        for (int b = 0; b < par.M; ++b)
            if (a != b && par.nu(a, b) != 0.0) diagonal = false;
    if (diagonal && par.M >= 2) {
        std::vector<double> n0(par.M, 0.5 * par.n_bar[0]);
        n0[0] = 0.0;
        const MtSelfDerivative d = mt_self_derivative(0, n0, par);
        report["self_derivative_trait_1"] = {{"direct", d.direct}, {"total", d.total}};
    }

    out::write_json(dir / "diagnostics.json", json{{"config", sc.raw}, {"report", report}});
}

}  // namespace detail

/// Execute a parsed scenario; artifacts land in `dir`.
inline void run_scenario(const Scenario& sc, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    if (sc.command == "simulate") {
        if (sc.model == "ns") {
            const NSParams& par = std::get<NSParams>(sc.params);
            const NSState s0 = detail::ns_initial_state(sc.raw, par);
            detail::run_simulate(sc, NsSystem<IndexSetIL>(par.idx, par), s0, s0.labels(), dir);
        } else if (sc.model == "s") {
            detail::run_simulate(sc, SSystem{std::get<SParams>(sc.params)},
                                 detail::s_initial_state(sc.raw), SState::labels(), dir);
        } else if (sc.model == "t") {
            detail::run_simulate(sc, TSystem{std::get<TParams>(sc.params)},
                                 detail::t_initial_state(sc.raw), TState::labels(), dir);
        } else if (sc.model == "mt") {
            const MTParams& par = std::get<MTParams>(sc.params);
            const MTState s0 = detail::mt_initial_state(sc.raw, par);
            detail::run_simulate(sc, MTSystem{par}, s0, s0.labels(), dir);
        } else {
            const TraitMeasure n0 = TraitMeasure::from_atoms(sc.atom_x, sc.atom_w);
            const TraitFunctions f = trait_functions_from_mt(*sc.atom_params, sc.atom_x);
            Trajectory traj;
            if (sc.t1 > sc.t0) {
                traj = evolve_atoms(n0, f, sc.t0, sc.t1, sc.ctrl);
            } else if (sc.t1 == sc.t0) {
                traj.times.push_back(sc.t0);
                traj.states.push_back(sc.atom_w);
            } else {
                throw std::invalid_argument("t_span must have t1 >= t0");
            }
            std::vector<std::string> labels;
            for (std::size_t k = 1; k <= sc.atom_x.size(); ++k)
                labels.push_back("w_" + std::to_string(k));
            out::write_csv(dir / "trajectory.csv", labels, traj.times, traj.states);
            out::write_json(dir / "meta.json",
                            json{{"config", sc.raw}, {"stats", out::stats_json(traj.stats)}});
        }
    } else if (sc.command == "birthrate") {
        detail::run_birthrate(sc, dir);
    } else if (sc.command == "steady") {
        detail::run_steady(sc, dir);
    } else if (sc.command == "reduce-check") {
        detail::run_reduce_check(sc, dir);
    } else if (sc.command == "diagnostics") {
        detail::run_diagnostics(sc, dir);
    } else {
        throw std::invalid_argument("unknown command '" + sc.command + "'");
    }
}

}  // namespace cellodeg
