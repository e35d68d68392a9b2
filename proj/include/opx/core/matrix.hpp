#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "opx/core/error.hpp"
#include "opx/core/real.hpp"

namespace opx {

template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
        return m;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

// Determinant by LU with partial pivoting. Works for any ordered field type.
template <class T>
T lu_det(Matrix<T> a) {
    const std::size_t n = a.rows();
    require(n == a.cols(), "lu_det: matrix must be square");
    T det = T(1);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        T best = abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            T v = abs(a(i, k));
            if (v > best) { best = v; p = i; }
        }
        if (best == T(0)) return T(0);
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            T f = a(i, k) / a(k, k);
            if (f == T(0)) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

template <class T>
struct FullPivotResult {
    std::vector<T> x;
    T det;
    T min_pivot; // smallest |pivot| relative to the largest entry of A
};

// Solve A x = b by Gaussian elimination with full pivoting.
// Throws numerical_error("singular_system") when a pivot is exactly zero;
// callers decide what "too small" means from min_pivot / det.
template <class T>
FullPivotResult<T> solve_full_pivot(Matrix<T> a, std::vector<T> b) {
    const std::size_t n = a.rows();
    require(n == a.cols() && b.size() == n, "solve_full_pivot: dimension mismatch");
    std::vector<std::size_t> colperm(n);
    for (std::size_t j = 0; j < n; ++j) colperm[j] = j;

    T scale = T(0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max<T>(scale, abs(a(i, j)));

    T det = T(1), minpiv = scale;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pi = k, pj = k;
        T best = T(-1);
        for (std::size_t i = k; i < n; ++i)
            for (std::size_t j = k; j < n; ++j) {
                T v = abs(a(i, j));
                if (v > best) { best = v; pi = i; pj = j; }
            }
        if (best == T(0))
            throw numerical_error("singular linear system (zero pivot at step " + std::to_string(k) + ")",
                                  "singular_system", 0.0, static_cast<long>(k));
        if (pi != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(pi, j));
            std::swap(b[k], b[pi]);
            det = -det;
        }
        if (pj != k) {
            for (std::size_t i = 0; i < n; ++i) std::swap(a(i, k), a(i, pj));
            std::swap(colperm[k], colperm[pj]);
            det = -det;
        }
        det *= a(k, k);
        if (best < minpiv) minpiv = best;
        for (std::size_t i = k + 1; i < n; ++i) {
            T f = a(i, k) / a(k, k);
            if (f == T(0)) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    std::vector<T> y(n);
    for (std::size_t ii = n; ii-- > 0;) {
        T s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * y[j];
        y[ii] = s / a(ii, ii);
    }
    std::vector<T> x(n);
    for (std::size_t j = 0; j < n; ++j) x[colperm[j]] = y[j];
    return {std::move(x), det, scale == T(0) ? T(0) : minpiv / scale};
}

} // namespace opx
