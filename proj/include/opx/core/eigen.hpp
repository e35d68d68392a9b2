#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "opx/core/error.hpp"
#include "opx/core/matrix.hpp"

namespace opx {

// Implicit QL for a symmetric tridiagonal matrix.
// d: diagonal (overwritten by eigenvalues), e: e[i] couples rows i and i+1.
// If z is non-null its columns are rotated along (start from identity to get
// eigenvectors of the tridiagonal matrix).
template <class T>
void tridiagonal_ql(std::vector<T>& d, std::vector<T> e, Matrix<T>* z = nullptr) {
    using std::abs;
    using std::sqrt;
    const int n = static_cast<int>(d.size());
    if (n == 0) return;
    e.resize(n);
    e[n - 1] = T(0);
    const T eps = std::numeric_limits<T>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0, m;
        do {
            for (m = l; m < n - 1; ++m) {
                T dd = abs(d[m]) + abs(d[m + 1]);
                if (abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (++iter > 200) throw numerical_error("tridiagonal QL: too many iterations", "no_convergence");
                T g = (d[l + 1] - d[l]) / (2 * e[l]);
                T r = sqrt(g * g + 1);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? r : -r));
                T s = 1, c = 1, p = 0;
                int i;
                bool underflow = false;
                for (i = m - 1; i >= l; --i) {
                    T f = s * e[i], b = c * e[i];
                    r = sqrt(f * f + g * g);
                    e[i + 1] = r;
                    if (r == T(0)) {
                        d[i + 1] -= p;
                        e[m] = T(0);
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if (z) {
                        for (std::size_t k = 0; k < z->rows(); ++k) {
                            T fz = (*z)(k, i + 1);
                            (*z)(k, i + 1) = s * (*z)(k, i) + c * fz;
                            (*z)(k, i) = c * (*z)(k, i) - s * fz;
                        }
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = T(0);
            }
        } while (m != l);
    }
}

// Householder reduction of a real symmetric matrix to tridiagonal form
// (eigenvalues only, so no transformation is accumulated).
template <class T>
void householder_tridiagonal(Matrix<T> a, std::vector<T>& d, std::vector<T>& e) {
    using std::abs;
    using std::sqrt;
    const std::size_t n = a.rows();
    d.assign(n, T(0));
    e.assign(n, T(0));
    std::vector<T> v(n), p(n), w(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        T norm2 = 0;
        for (std::size_t i = k + 1; i < n; ++i) norm2 += a(i, k) * a(i, k);
        T norm = sqrt(norm2);
        if (norm == T(0)) continue;
        T alpha = a(k + 1, k) > 0 ? -norm : norm;
        std::fill(v.begin(), v.end(), T(0));
        for (std::size_t i = k + 1; i < n; ++i) v[i] = a(i, k);
        v[k + 1] -= alpha;
        T vn = 0;
        for (std::size_t i = k + 1; i < n; ++i) vn += v[i] * v[i];
        vn = sqrt(vn);
        if (vn == T(0)) continue;
        for (std::size_t i = k + 1; i < n; ++i) v[i] /= vn;
        // A <- (I - 2vv^T) A (I - 2vv^T), only the trailing block and column k change
        for (std::size_t i = k; i < n; ++i) {
            T s = 0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            p[i] = s;
        }
        T vp = 0;
        for (std::size_t i = k + 1; i < n; ++i) vp += v[i] * p[i];
        for (std::size_t i = k; i < n; ++i) w[i] = p[i] - vp * v[i];
        for (std::size_t i = k; i < n; ++i)
            for (std::size_t j = k; j < n; ++j) a(i, j) -= 2 * (v[i] * w[j] + w[i] * v[j]);
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = a(i + 1, i);
}

template <class T>
std::vector<T> symmetric_eigenvalues(const Matrix<T>& a) {
    std::vector<T> d, e;
    householder_tridiagonal(a, d, e);
    tridiagonal_ql(d, e);
    std::sort(d.begin(), d.end());
    return d;
}

// Hermitian eigenvalues through the real symmetric embedding
// [[Re, -Im], [Im, Re]], whose spectrum is that of H with every value doubled.
inline std::vector<double> hermitian_eigenvalues(const Matrix<std::complex<double>>& h) {
    const std::size_t n = h.rows();
    Matrix<double> big(2 * n, 2 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double re = h(i, j).real(), im = h(i, j).imag();
            big(i, j) = re;
            big(i + n, j + n) = re;
            big(i + n, j) = im;
            big(i, j + n) = -im;
        }
    auto all = symmetric_eigenvalues(big);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 * (all[2 * i] + all[2 * i + 1]);
    return out;
}

} // namespace opx
