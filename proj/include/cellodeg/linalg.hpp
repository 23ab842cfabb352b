#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cellodeg {

/// Solve A x = b in place by LU with partial pivoting (A row-major n x n,
/// destroyed; b overwritten with the solution). Sized for the small dense
/// systems of the equilibrium solver.
inline void lu_solve(std::vector<double>& A, std::vector<double>& b, std::size_t n) {
    if (A.size() != n * n || b.size() != n) throw std::invalid_argument("lu_solve: bad sizes");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(A[perm[col] * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(A[perm[r] * n + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        std::swap(perm[col], perm[piv]);
        const std::size_t prow = perm[col];
        const double diag = A[prow * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const std::size_t row = perm[r];
            const double f = A[row * n + col] / diag;
            if (f == 0.0) continue;
            A[row * n + col] = f;
            for (std::size_t c = col + 1; c < n; ++c) A[row * n + c] -= f * A[prow * n + c];
            b[row] -= f * b[prow];
        }
    }

    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[perm[k]];
        for (std::size_t c = k + 1; c < n; ++c) s -= A[perm[k] * n + c] * x[c];
        x[k] = s / A[perm[k] * n + k];
    }
    b = std::move(x);
}

}  // namespace cellodeg
