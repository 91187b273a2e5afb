#pragma once

#include <optional>
#include <vector>

#include "gm/bigint.hpp"

namespace gm {

// Solve A x = b exactly by Gaussian elimination. Returns nullopt when the
// system is singular or inconsistent. A is square.
inline std::optional<std::vector<Rational>> solve_linear(std::vector<std::vector<Rational>> A,
                                                         std::vector<Rational> b) {
    size_t n = A.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        while (piv < n && A[piv][col].is_zero()) ++piv;
        if (piv == n) return std::nullopt;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (size_t r = 0; r < n; ++r) {
            if (r == col || A[r][col].is_zero()) continue;
            Rational factor = A[r][col] / A[col][col];
            for (size_t c = col; c < n; ++c) A[r][c] = A[r][c] - factor * A[col][c];
            b[r] = b[r] - factor * b[col];
        }
    }
    std::vector<Rational> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = b[i] / A[i][i];
    return x;
}

}  // namespace gm
