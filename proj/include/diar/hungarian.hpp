#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "linalg.hpp"

namespace diar {

namespace detail {

// Kuhn-Munkres (shortest augmenting path, potentials) maximizing the total
// of a nonnegative rectangular matrix. Returns row -> column (or -1).
inline std::vector<int> hungarian_max(const Matrix& w) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    const std::size_t n = std::max(rows, cols);
    std::vector<int> assign(rows, -1);
    if (n == 0) return assign;
    double top = 0.0;
    for (double v : w.data()) top = std::max(top, v);
    auto cost = [&](std::size_t i, std::size_t j) {
        double v = (i < rows && j < cols) ? w(i, j) : 0.0;
        return top - v;
    };
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays as in the classic formulation
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            std::size_t i0 = p[j0], j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] >= 1 && p[j] <= rows && j <= cols) assign[p[j] - 1] = static_cast<int>(j - 1);
    }
    return assign;
}

inline double assignment_total(const Matrix& w, const std::vector<int>& assign) {
    double t = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i)
        if (assign[i] >= 0) t += w(i, static_cast<std::size_t>(assign[i]));
    return t;
}

}  // namespace detail

/// One-to-one partial mapping between reference rows and hypothesis
/// columns maximizing total overlap.
///
/// Among optimal mappings the lexicographically smallest is returned: rows
/// are fixed in order, each to the smallest column that still admits an
/// optimal completion. On the smaller side every label is mapped.
inline std::vector<int> optimal_mapping(const Matrix& overlap) {
    const std::size_t rows = overlap.rows();
    const std::size_t cols = overlap.cols();
    std::vector<int> result(rows, -1);
    if (rows == 0 || cols == 0) return result;
    const double best = detail::assignment_total(overlap, detail::hungarian_max(overlap));
    const double tol = 1e-9 * std::max(1.0, best);

    std::vector<bool> row_done(rows, false), col_used(cols, false);
    double fixed_total = 0.0;
    // optimum of the residual problem over rows not yet decided
    auto residual_best = [&](std::size_t skip_row) {
        std::vector<std::size_t> rs, cs;
        for (std::size_t i = 0; i < rows; ++i)
            if (!row_done[i] && i != skip_row) rs.push_back(i);
        for (std::size_t j = 0; j < cols; ++j)
            if (!col_used[j]) cs.push_back(j);
        Matrix sub(rs.size(), cs.size());
        for (std::size_t a = 0; a < rs.size(); ++a)
            for (std::size_t b = 0; b < cs.size(); ++b) sub(a, b) = overlap(rs[a], cs[b]);
        return detail::assignment_total(sub, detail::hungarian_max(sub));
    };

    for (std::size_t i = 0; i < rows; ++i) {
        bool placed = false;
        for (std::size_t j = 0; j < cols && !placed; ++j) {
            if (col_used[j]) continue;
            col_used[j] = true;
            row_done[i] = true;
            double total = fixed_total + overlap(i, j) + residual_best(rows);
            if (total >= best - tol) {
                result[i] = static_cast<int>(j);
                fixed_total += overlap(i, j);
                placed = true;
            } else {
                col_used[j] = false;
                row_done[i] = false;
            }
        }
        if (!placed) row_done[i] = true;
    }
    return result;
}

}  // namespace diar
