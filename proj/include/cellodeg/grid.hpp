#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cellodeg {

/// Triangular index set of chain states (l, i): a chain of l cellobiose
/// units carrying i landing sites, with 1 <= l <= L and 0 <= i <= l.
/// Enumeration is row-major in l, then i: (1,0),(1,1),(2,0),...,(L,L).
class IndexSetIL {
public:
    IndexSetIL() = default;

    explicit IndexSetIL(int max_length) : L_(max_length) {
        if (max_length < 1)
            throw std::invalid_argument("IndexSetIL: max chain length must be >= 1");
    }

    int max_length() const { return L_; }
    int min_length() const { return 1; }

    bool contains(int l, int i) const { return l >= 1 && l <= L_ && i >= 0 && i <= l; }

    /// Cells that can carry attached-enzyme mass (i >= 1; no enzyme sits on a
    /// zero-site chain).
    bool contains_attached(int l, int i) const { return contains(l, i) && i >= 1; }

    std::size_t offset(int l, int i) const {
        return static_cast<std::size_t>((l - 1) * (l + 2) / 2 + i);
    }

    std::size_t attached_offset(int l, int i) const {
        return static_cast<std::size_t>((l - 1) * l / 2 + (i - 1));
    }

    std::size_t size() const { return static_cast<std::size_t>(L_) * (L_ + 3) / 2; }
    std::size_t attached_size() const { return static_cast<std::size_t>(L_) * (L_ + 1) / 2; }

    template <class F>
    void for_each(F&& f) const {
        for (int l = 1; l <= L_; ++l)
            for (int i = 0; i <= l; ++i) f(l, i);
    }

    template <class F>
    void for_each_attached(F&& f) const {
        for (int l = 1; l <= L_; ++l)
            for (int i = 1; i <= l; ++i) f(l, i);
    }

    friend bool operator==(const IndexSetIL& a, const IndexSetIL& b) { return a.L_ == b.L_; }

private:
    int L_ = 1;
};

/// Rectangular chain-state lattice l in [l_lo, L], i in [0, i_hi].
///
/// The triangle above is the physically meaningful state space, but the
/// aggregation identities that collapse the chain system to its macroscopic
/// form telescope over the unbounded lattice: cleaving moves mass from (l,l)
/// to (l-1,l) and onward below l = 1. A rectangle with generous margins makes
/// those identities hold to rounding as long as the boundary cells stay
/// empty over the integration horizon.
class RectGrid {
public:
    RectGrid() = default;

    RectGrid(int l_lo, int l_hi, int i_hi) : l_lo_(l_lo), l_hi_(l_hi), i_hi_(i_hi) {
        if (l_hi < l_lo || i_hi < 0)
            throw std::invalid_argument("RectGrid: empty index range");
    }

    /// Grid covering everything reachable from triangle data over a finite
    /// horizon, with `margin` extra rows below l = 1 and columns above i = L.
    static RectGrid padded(int L, int margin) { return RectGrid(1 - margin, L, L + margin); }

    int max_length() const { return l_hi_; }
    int min_length() const { return l_lo_; }
    int max_sites() const { return i_hi_; }

    bool contains(int l, int i) const {
        return l >= l_lo_ && l <= l_hi_ && i >= 0 && i <= i_hi_;
    }

    bool contains_attached(int l, int i) const { return contains(l, i) && i >= 1; }

    std::size_t offset(int l, int i) const {
        return static_cast<std::size_t>(l - l_lo_) * (i_hi_ + 1) + i;
    }

    std::size_t attached_offset(int l, int i) const {
        return static_cast<std::size_t>(l - l_lo_) * i_hi_ + (i - 1);
    }

    std::size_t size() const {
        return static_cast<std::size_t>(l_hi_ - l_lo_ + 1) * (i_hi_ + 1);
    }

    std::size_t attached_size() const {
        return static_cast<std::size_t>(l_hi_ - l_lo_ + 1) * i_hi_;
    }

    template <class F>
    void for_each(F&& f) const {
        for (int l = l_lo_; l <= l_hi_; ++l)
            for (int i = 0; i <= i_hi_; ++i) f(l, i);
    }

    template <class F>
    void for_each_attached(F&& f) const {
        for (int l = l_lo_; l <= l_hi_; ++l)
            for (int i = 1; i <= i_hi_; ++i) f(l, i);
    }

    friend bool operator==(const RectGrid& a, const RectGrid& b) {
        return a.l_lo_ == b.l_lo_ && a.l_hi_ == b.l_hi_ && a.i_hi_ == b.i_hi_;
    }

private:
    int l_lo_ = 1, l_hi_ = 1, i_hi_ = 1;
};

}  // namespace cellodeg
