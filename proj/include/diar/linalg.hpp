#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace diar {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }

    double frobenius() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending; column j of
/// `vectors` belongs to `values[j]`.
struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors;
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Sweeps (p, q) pairs in row-major order until the off-diagonal Frobenius
/// norm falls to `tol`. Each eigenvector is sign-canonicalized so that its
/// largest-magnitude component is positive (ties go to the first index).
inline EigenDecomposition jacobi_eigh(const Matrix& input, double tol = 1e-10, int max_sweeps = 100) {
    if (!input.square()) throw std::invalid_argument("jacobi_eigh: matrix must be square");
    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix vt = Matrix::identity(n);  // eigenvectors stored as rows

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    // a is kept symmetric: rows p and q are rotated in place, then mirrored
    // into the matching columns
    const double skip = tol / (2.0 * static_cast<double>(std::max<std::size_t>(n, 1)));
    for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                // entries this small cannot keep the off-diagonal norm above tol
                if (std::abs(apq) <= skip) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                auto rp = a.row(p);
                auto rq = a.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = rp[k];
                    const double akq = rq[k];
                    rp[k] = c * akp - s * akq;
                    rq[k] = s * akp + c * akq;
                }
                rp[p] -= t * apq;
                rq[q] += t * apq;
                rp[q] = 0.0;
                rq[p] = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    a(k, p) = rp[k];
                    a(k, q) = rq[k];
                }
                auto vp = vt.row(p);
                auto vq = vt.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = vp[k];
                    const double y = vq[k];
                    vp[k] = c * x - s * y;
                    vq[k] = s * x + c * y;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = a(src, src);
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            double m = std::abs(vt(src, k));
            // 1e-12 slack keeps equal-magnitude ties on the first index despite round-off
            if (m > best + 1e-12) {
                best = m;
                arg = k;
            }
        }
        const double sign = vt(src, arg) < 0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = sign * vt(src, k);
    }
    return out;
}

/// ‖A·v − λ·v‖ for eigenpair j.
inline double eigen_residual(const Matrix& a, const EigenDecomposition& eig, std::size_t j) {
    const std::size_t n = a.rows();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double av = 0.0;
        for (std::size_t k = 0; k < n; ++k) av += a(i, k) * eig.vectors(k, j);
        double r = av - eig.values[j] * eig.vectors(i, j);
        s += r * r;
    }
    return std::sqrt(s);
}

}  // namespace diar
