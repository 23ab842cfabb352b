#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellodeg/grid.hpp"

namespace cellodeg {

/// Chain-resolved state: chain counts N_{l,i}, detached/attached exoglucanase,
/// endoglucanase, pooled cellobiose, population mass. Accessors are guarded:
/// indices off the grid read as zero.
template <class Grid>
struct NsStateT {
    Grid grid{};
    std::vector<double> chain_count;    // N_{l,i}
    std::vector<double> attached_mass;  // e22^{l,i}, i >= 1
    double e1 = 0, e21 = 0, p = 0, n = 0;

    NsStateT() = default;

    explicit NsStateT(const Grid& g)
        : grid(g), chain_count(g.size(), 0.0), attached_mass(g.attached_size(), 0.0) {}

    double N(int l, int i) const {
        return grid.contains(l, i) ? chain_count[grid.offset(l, i)] : 0.0;
    }

    double e22(int l, int i) const {
        return grid.contains_attached(l, i) ? attached_mass[grid.attached_offset(l, i)] : 0.0;
    }

    double& N_ref(int l, int i) {
        if (!grid.contains(l, i)) throw std::out_of_range("N index off grid");
        return chain_count[grid.offset(l, i)];
    }

    double& e22_ref(int l, int i) {
        if (!grid.contains_attached(l, i)) throw std::out_of_range("e22 index off grid");
        return attached_mass[grid.attached_offset(l, i)];
    }

    std::size_t packed_size() const { return chain_count.size() + attached_mass.size() + 4; }

    void pack(std::vector<double>& y) const {
        y.resize(packed_size());
        std::size_t k = 0;
        for (double v : chain_count) y[k++] = v;
        for (double v : attached_mass) y[k++] = v;
        y[k++] = e1;
        y[k++] = e21;
        y[k++] = p;
        y[k++] = n;
    }

    void unpack(const std::vector<double>& y) {
        std::size_t k = 0;
        for (double& v : chain_count) v = y[k++];
        for (double& v : attached_mass) v = y[k++];
        e1 = y[k++];
        e21 = y[k++];
        p = y[k++];
        n = y[k++];
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        out.reserve(packed_size());
        grid.for_each([&](int l, int i) {
            out.push_back("N_" + std::to_string(l) + "_" + std::to_string(i));
        });
        grid.for_each_attached([&](int l, int i) {
            out.push_back("e22_" + std::to_string(l) + "_" + std::to_string(i));
        });
        out.push_back("e1");
        out.push_back("e21");
        out.push_back("p");
        out.push_back("n");
        return out;
    }
};

using NSState = NsStateT<IndexSetIL>;
using NSStateRect = NsStateT<RectGrid>;

/// Copy a triangle state into a (larger) rectangular grid.
inline NSStateRect embed(const NSState& s, const RectGrid& grid) {
    NSStateRect out(grid);
    s.grid.for_each([&](int l, int i) {
        if (!grid.contains(l, i)) throw std::domain_error("embedding grid does not cover triangle");
        out.N_ref(l, i) = s.N(l, i);
    });
    s.grid.for_each_attached([&](int l, int i) { out.e22_ref(l, i) = s.e22(l, i); });
    out.e1 = s.e1;
    out.e21 = s.e21;
    out.p = s.p;
    out.n = s.n;
    return out;
}

/// Aggregated site-resolved state.
struct SState {
    double e1 = 0, e21 = 0, e22 = 0, S = 0, rho = 0, p = 0, n = 0;

    static constexpr std::size_t packed_size() { return 7; }

    void pack(std::vector<double>& y) const { y = {e1, e21, e22, S, rho, p, n}; }

    void unpack(const std::vector<double>& y) {
        e1 = y[0];
        e21 = y[1];
        e22 = y[2];
        S = y[3];
        rho = y[4];
        p = y[5];
        n = y[6];
    }

    static std::vector<std::string> labels() {
        return {"e1", "e21", "e22", "S", "rho", "p", "n"};
    }
};

/// Lumped single-trait state.
struct TState {
    double e1 = 0, e2 = 0, T = 0, rho = 0, p = 0, n = 0;

    static constexpr std::size_t packed_size() { return 6; }

    void pack(std::vector<double>& y) const { y = {e1, e2, T, rho, p, n}; }

    void unpack(const std::vector<double>& y) {
        e1 = y[0];
        e2 = y[1];
        T = y[2];
        rho = y[3];
        p = y[4];
        n = y[5];
    }

    static std::vector<std::string> labels() { return {"e1", "e2", "T", "rho", "p", "n"}; }
};

/// Multi-trait lumped state: per-trait enzymes and populations plus the shared
/// pool variables.
struct MTState {
    std::vector<double> e1, e2, n;
    double T = 0, rho = 0, p = 0;

    MTState() = default;

    explicit MTState(int M) : e1(M, 0.0), e2(M, 0.0), n(M, 0.0) {}

    int traits() const { return static_cast<int>(n.size()); }

    std::size_t packed_size() const { return 3 * n.size() + 3; }

    void pack(std::vector<double>& y) const {
        y.clear();
        y.reserve(packed_size());
        y.insert(y.end(), e1.begin(), e1.end());
        y.insert(y.end(), e2.begin(), e2.end());
        y.push_back(T);
        y.push_back(rho);
        y.push_back(p);
        y.insert(y.end(), n.begin(), n.end());
    }

    void unpack(const std::vector<double>& y) {
        std::size_t k = 0;
        for (double& v : e1) v = y[k++];
        for (double& v : e2) v = y[k++];
        T = y[k++];
        rho = y[k++];
        p = y[k++];
        for (double& v : n) v = y[k++];
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        const int M = traits();
        for (int j = 1; j <= M; ++j) out.push_back("e1_" + std::to_string(j));
        for (int j = 1; j <= M; ++j) out.push_back("e2_" + std::to_string(j));
        out.push_back("T");
        out.push_back("rho");
        out.push_back("p");
        for (int j = 1; j <= M; ++j) out.push_back("n_" + std::to_string(j));
        return out;
    }
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    double max_error_estimate = 0.0;
};

/// Time-stamped sequence of packed states plus integrator bookkeeping.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    StepStats stats;
};

}  // namespace cellodeg
