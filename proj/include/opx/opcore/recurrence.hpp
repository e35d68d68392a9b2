#pragma once

#include <algorithm>
#include <vector>

#include "opx/core/eigen.hpp"
#include "opx/core/matrix.hpp"
#include "opx/core/quadrature.hpp"
#include "opx/core/real.hpp"
#include "opx/opcore/moments.hpp"

namespace opx {

// Monic recurrence x P_n = P_{n+1} + b_n P_n + a_n^2 P_{n-1}.
// a_sq[0] is an unused placeholder (0) so that a_sq[n] is a_n^2.
template <class Real>
struct RecurrenceCoefficients {
    Weight weight;
    std::vector<Real> a_sq; // size N+1
    std::vector<Real> b;    // size N
    Real m0 = Real(1);
    int precision_bits = mantissa_bits<Real>();

    int size() const { return static_cast<int>(b.size()); }

    // gamma_n^2 = 1 / (m0 prod_{k<=n} a_k^2), the leading coefficient of p_n squared
    Real gamma_sq(int n) const {
        require(n >= 0 && n < static_cast<int>(a_sq.size()), "gamma_sq: index out of range");
        Real g = 1 / m0;
        for (int k = 1; k <= n; ++k) g /= a_sq[k];
        return g;
    }

    template <class U>
    RecurrenceCoefficients<U> cast() const {
        RecurrenceCoefficients<U> r;
        r.weight = weight;
        r.precision_bits = precision_bits;
        auto conv = [](const Real& v) -> U {
            if constexpr (std::is_same_v<U, double>) return to_double(v);
            else return U(v);
        };
        for (const auto& v : a_sq) r.a_sq.push_back(conv(v));
        for (const auto& v : b) r.b.push_back(conv(v));
        r.m0 = conv(m0);
        return r;
    }
};

// D_n = det(m_{i+j})_{i,j<n}, D_0 = 1.
template <class Real>
Real hankel_det(const MomentSequence<Real>& m, int n) {
    require(n >= 0, "hankel_det: n must be >= 0");
    if (n == 0) return Real(1);
    require(static_cast<int>(m.size()) >= 2 * n - 1,
            "hankel_det: need moments m_0..m_" + std::to_string(2 * n - 2) + ", have " + std::to_string(m.size()));
    Matrix<Real> H(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) H(i, j) = m[i + j];
    return lu_det(H);
}

// Chebyshev algorithm on the moment sequence. sigma_{k,l} = int P_k x^l dmu,
// sigma_{k,k} = D_{k+1}/D_k, so a_k^2 and b_k come out as the Hankel ratios
// without forming determinants.
template <class Real>
RecurrenceCoefficients<Real> recurrence_from_moments(const MomentSequence<Real>& m, int N) {
    require(N >= 0, "recurrence_from_moments: N must be >= 0");
    require(static_cast<int>(m.size()) >= 2 * N + 1,
            "recurrence_from_moments: need moments through m_" + std::to_string(2 * N) + ", have " +
                std::to_string(m.size()));
    RecurrenceCoefficients<Real> r;
    r.weight = m.weight;
    r.precision_bits = m.precision_bits;
    r.m0 = m[0];
    r.a_sq.assign(N + 1, Real(0));
    r.b.assign(N, Real(0));
    if (!(m[0] > 0)) throw hankel_degenerate(1);
    if (N == 0) return r;

    const int L = 2 * N + 1;
    const Real thresh = pow(epsilon<Real>(), Real(3) / 4);
    std::vector<Real> prev2(L, Real(0)), prev(L), cur(L, Real(0));
    for (int l = 0; l < L; ++l) prev[l] = m[l];
    r.b[0] = m[1] / m[0];
    for (int k = 1; k <= N; ++k) {
        const Real bk = r.b[k - 1], ak = r.a_sq[k - 1];
        Real scale = 0;
        for (int l = k; l <= 2 * N - k; ++l) {
            Real t1 = prev[l + 1], t2 = bk * prev[l], t3 = ak * prev2[l];
            cur[l] = t1 - t2 - t3;
            if (l == k) scale = std::max({abs(t1), abs(t2), abs(t3)});
        }
        if (!(cur[k] > thresh * scale)) throw hankel_degenerate(k + 1);
        r.a_sq[k] = cur[k] / prev[k - 1];
        if (k < N) r.b[k] = cur[k + 1] / cur[k] - prev[k] / prev[k - 1];
        std::swap(prev2, prev);
        std::swap(prev, cur);
    }
    return r;
}

// Moments plus recurrence in one call: N coefficient pairs need m_0..m_{2N}.
template <class Real>
RecurrenceCoefficients<Real> recurrence_for(const Weight& w, int N) {
    return recurrence_from_moments(compute_moments<Real>(w, 2 * N + 1), N);
}

enum class Normalization { monic, orthonormal };

// P_0(x)..P_n(x) (or p_k = gamma_k P_k) by forward recurrence.
template <class Real, class X>
std::vector<X> eval_poly(const RecurrenceCoefficients<Real>& rec, int n, const X& x,
                         Normalization norm = Normalization::monic) {
    require(n >= 0, "eval_poly: n must be >= 0");
    require(n <= rec.size() || n == 0, "eval_poly: recurrence holds coefficients through index " +
                                           std::to_string(rec.size()) + ", asked for " + std::to_string(n));
    std::vector<X> P(n + 1);
    P[0] = X(1);
    if (n >= 1) P[1] = x - X(rec.b[0]);
    for (int k = 1; k < n; ++k) P[k + 1] = (x - X(rec.b[k])) * P[k] - X(rec.a_sq[k]) * P[k - 1];
    if (norm == Normalization::orthonormal) {
        Real g = 1 / rec.m0;
        for (int k = 0; k <= n; ++k) {
            if (k > 0) g /= rec.a_sq[k];
            P[k] *= X(sqrt(g));
        }
    }
    return P;
}

// Values and first derivatives of P_0..P_n from the differentiated recurrence.
template <class Real, class X>
std::pair<std::vector<X>, std::vector<X>> eval_poly_with_derivative(const RecurrenceCoefficients<Real>& rec, int n,
                                                                     const X& x,
                                                                     Normalization norm = Normalization::monic) {
    require(n >= 0 && (n <= rec.size() || n == 0), "eval_poly_with_derivative: missing coefficients");
    std::vector<X> P(n + 1), D(n + 1);
    P[0] = X(1);
    D[0] = X(0);
    if (n >= 1) {
        P[1] = x - X(rec.b[0]);
        D[1] = X(1);
    }
    for (int k = 1; k < n; ++k) {
        P[k + 1] = (x - X(rec.b[k])) * P[k] - X(rec.a_sq[k]) * P[k - 1];
        D[k + 1] = P[k] + (x - X(rec.b[k])) * D[k] - X(rec.a_sq[k]) * D[k - 1];
    }
    if (norm == Normalization::orthonormal) {
        Real g = 1 / rec.m0;
        for (int k = 0; k <= n; ++k) {
            if (k > 0) g /= rec.a_sq[k];
            X s = X(sqrt(g));
            P[k] *= s;
            D[k] *= s;
        }
    }
    return {P, D};
}

// Monic P_n as an explicit coefficient list.
template <class Real>
Polynomial<Real> monic_polynomial(const RecurrenceCoefficients<Real>& rec, int n) {
    require(n >= 0 && (n <= rec.size() || n == 0), "monic_polynomial: missing coefficients");
    Polynomial<Real> p0 = Polynomial<Real>::constant(Real(1));
    if (n == 0) return p0;
    Polynomial<Real> p1 = Polynomial<Real>::x() - Polynomial<Real>::constant(rec.b[0]);
    for (int k = 1; k < n; ++k) {
        Polynomial<Real> p2 = p1.shift_up() - p1 * rec.b[k] - p0 * rec.a_sq[k];
        p0 = std::move(p1);
        p1 = std::move(p2);
    }
    return p1;
}

// Zeros of P_n by bisection. Zeros of P_k interlace those of P_{k-1}, so the
// brackets for degree k are the previous zeros plus a Gershgorin bound of the
// Jacobi matrix.
template <class Real>
std::vector<double> zeros(const RecurrenceCoefficients<Real>& rec, int n) {
    require(n >= 1 && n <= rec.size(), "zeros: need 1 <= n <= number of stored coefficients");
    auto r = rec.template cast<double>();
    double bound = 0;
    for (int k = 0; k < n; ++k) {
        double off = (k >= 1 ? std::sqrt(r.a_sq[k]) : 0.0) + (k + 1 < n ? std::sqrt(r.a_sq[k + 1]) : 0.0);
        bound = std::max(bound, std::abs(r.b[k]) + off);
    }
    bound = bound * (1 + 1e-12) + 1e-300;
    auto Pk = [&](int k, double x) { return eval_poly(r, k, x).back(); };
    std::vector<double> prev;
    for (int k = 1; k <= n; ++k) {
        std::vector<double> edges{-bound};
        edges.insert(edges.end(), prev.begin(), prev.end());
        edges.push_back(bound);
        std::vector<double> cur;
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            double lo = edges[i], hi = edges[i + 1];
            double flo = Pk(k, lo), fhi = Pk(k, hi);
            if (flo == 0) { cur.push_back(lo); continue; }
            if (fhi == 0) continue; // picked up by the next bracket
            if ((flo > 0) == (fhi > 0))
                throw numerical_error("zeros: no sign change in interlacing bracket of P_" + std::to_string(k),
                                      "no_convergence", 0.0, k);
            for (int it = 0; it < 200 && hi - lo > 4e-16 * (std::abs(lo) + std::abs(hi)) + 1e-300; ++it) {
                double mid = 0.5 * (lo + hi), fm = Pk(k, mid);
                if (fm == 0) { lo = hi = mid; break; }
                if ((fm > 0) == (flo > 0)) { lo = mid; flo = fm; }
                else hi = mid;
            }
            cur.push_back(0.5 * (lo + hi));
        }
        prev = cur;
    }
    return prev;
}

// Gauss rule with n nodes (Golub-Welsch): eigenvalues of the Jacobi matrix,
// weights m0 times squared first eigenvector components.
template <class Real>
GaussRule<Real> gauss_rule(const RecurrenceCoefficients<Real>& rec, int n) {
    require(n >= 1 && n <= rec.size(), "gauss_rule: need 1 <= n <= number of stored coefficients");
    std::vector<Real> d(rec.b.begin(), rec.b.begin() + n), e(n, Real(0));
    for (int k = 0; k + 1 < n; ++k) e[k] = sqrt(rec.a_sq[k + 1]);
    Matrix<Real> z = Matrix<Real>::identity(n);
    tridiagonal_ql(d, e, &z);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return d[i] < d[j]; });
    GaussRule<Real> g;
    for (int i : idx) {
        g.x.push_back(d[i]);
        g.w.push_back(rec.m0 * z(0, i) * z(0, i));
    }
    return g;
}

} // namespace opx
