#pragma once

#include <vector>

#include "opx/mop/mop.hpp"

namespace opx {

enum class MopFamilyKind { multiple_hermite, multiple_laguerre1, multiple_laguerre2, jacobi_pineiro };

struct MopFamily {
    MopFamilyKind kind = MopFamilyKind::multiple_hermite;
    std::vector<double> c;     // multiple_hermite, multiple_laguerre2
    std::vector<double> alpha; // multiple_laguerre1, jacobi_pineiro
    double alpha0 = 0;         // multiple_laguerre2
    double beta = 0;           // jacobi_pineiro

    int r() const {
        return (kind == MopFamilyKind::multiple_hermite || kind == MopFamilyKind::multiple_laguerre2)
                   ? static_cast<int>(c.size())
                   : static_cast<int>(alpha.size());
    }

    static MopFamily hermite(std::vector<double> c) { return {MopFamilyKind::multiple_hermite, std::move(c), {}, 0, 0}; }
    static MopFamily laguerre1(std::vector<double> a) { return {MopFamilyKind::multiple_laguerre1, {}, std::move(a), 0, 0}; }
    static MopFamily laguerre2(double a, std::vector<double> c) {
        return {MopFamilyKind::multiple_laguerre2, std::move(c), {}, a, 0};
    }
    static MopFamily jacobi_pineiro(std::vector<double> a, double b) {
        return {MopFamilyKind::jacobi_pineiro, {}, std::move(a), 0, b};
    }

    void validate() const {
        auto noninteger_gaps = [](const std::vector<double>& v, const char* what) {
            for (std::size_t i = 0; i < v.size(); ++i)
                for (std::size_t j = i + 1; j < v.size(); ++j) {
                    double d = v[i] - v[j];
                    require(std::abs(d - std::round(d)) > 1e-12,
                            std::string(what) + ": alpha_i - alpha_j must not be an integer");
                }
        };
        auto distinct = [](const std::vector<double>& v, const char* what) {
            for (std::size_t i = 0; i < v.size(); ++i)
                for (std::size_t j = i + 1; j < v.size(); ++j)
                    require(v[i] != v[j], std::string(what) + ": parameters c_i must be distinct");
        };
        require(r() >= 1, "MOP family needs r >= 1");
        switch (kind) {
        case MopFamilyKind::multiple_hermite: distinct(c, "multiple_hermite"); break;
        case MopFamilyKind::multiple_laguerre2:
            distinct(c, "multiple_laguerre2");
            require(alpha0 > -1, "multiple_laguerre2: alpha must be > -1");
            for (double v : c) require(v > 0, "multiple_laguerre2: c_j must be > 0");
            break;
        case MopFamilyKind::multiple_laguerre1:
            noninteger_gaps(alpha, "multiple_laguerre1");
            for (double v : alpha) require(v > -1, "multiple_laguerre1: alpha_j must be > -1");
            break;
        case MopFamilyKind::jacobi_pineiro:
            noninteger_gaps(alpha, "jacobi_pineiro");
            for (double v : alpha) require(v > -1, "jacobi_pineiro: alpha_j must be > -1");
            require(beta > -1, "jacobi_pineiro: beta must be > -1");
            break;
        }
    }

    std::vector<Weight> weights() const {
        std::vector<Weight> w;
        switch (kind) {
        case MopFamilyKind::multiple_hermite:
            for (double cj : c) w.push_back(Weight::hermite(1.0, cj));
            break;
        case MopFamilyKind::multiple_laguerre1:
            for (double a : alpha) w.push_back(Weight::laguerre(a, 1.0));
            break;
        case MopFamilyKind::multiple_laguerre2:
            for (double cj : c) w.push_back(Weight::laguerre(alpha0, cj));
            break;
        case MopFamilyKind::jacobi_pineiro:
            for (double a : alpha) w.push_back(Weight::jacobi01(a, beta));
            break;
        }
        return w;
    }
};

template <class Real>
MOPSystem<Real> make_family_system(const MopFamily& f, int max_order) {
    f.validate();
    return make_system<Real>(f.weights(), SystemClass::at_system, max_order);
}

// Angelesco test fixture: unit weights on [-1, -0.2] and [0.2, 1].
template <class Real>
MOPSystem<Real> angelesco_fixture(int max_order) {
    return make_system<Real>({Weight::custom({-1.0, -0.2}, {1.0, 1.0}), Weight::custom({0.2, 1.0}, {1.0, 1.0})},
                             SystemClass::angelesco, max_order);
}

namespace detail {

// Visit every k with 0 <= k_j <= n_j.
template <class F>
void for_each_sub_index(const MultiIndex& n, F&& f) {
    std::vector<int> k(n.r(), 0);
    for (;;) {
        f(k);
        int p = 0;
        while (p < n.r() && ++k[p] > n[p]) k[p++] = 0;
        if (p == n.r()) return;
    }
}

// Physicists' Hermite H_m as a polynomial.
template <class Real>
Polynomial<Real> physicists_hermite(int m) {
    Polynomial<Real> h0 = Polynomial<Real>::constant(Real(1));
    if (m == 0) return h0;
    Polynomial<Real> h1(std::vector<Real>{Real(0), Real(2)});
    for (int k = 1; k < m; ++k) {
        Polynomial<Real> h2 = h1.shift_up() * Real(2) - h0 * Real(2 * k);
        h0 = std::move(h1);
        h1 = std::move(h2);
    }
    return h1;
}

} // namespace detail

// Type II polynomial from the explicit finite sums.
template <class Real>
TypeIIPoly<Real> family_closed_form(const MopFamily& f, const MultiIndex& n) {
    f.validate();
    require(n.r() == f.r(), "family_closed_form: multi-index length must equal r");
    const int r = n.r(), N = n.total();
    Polynomial<Real> p(std::vector<Real>(N + 1, Real(0)));
    switch (f.kind) {
    case MopFamilyKind::multiple_hermite: {
        // H_n = (-1)^{|n|} 2^{-|n|} sum_k prod C(n_j,k_j) c_j^{n_j-k_j} (-1)^{|k|} H_{|k|}
        detail::for_each_sub_index(n, [&](const std::vector<int>& k) {
            Real coef = 1;
            int K = 0;
            for (int j = 0; j < r; ++j) {
                coef *= binom(Real(n[j]), k[j]) * pow(Real(f.c[j]), n[j] - k[j]);
                K += k[j];
            }
            if (K % 2) coef = -coef;
            p += detail::physicists_hermite<Real>(K) * coef;
        });
        Real s = pow(Real(2), -N);
        if (N % 2) s = -s;
        p *= s;
        break;
    }
    case MopFamilyKind::multiple_laguerre1: {
        detail::for_each_sub_index(n, [&](const std::vector<int>& k) {
            Real coef = 1;
            int K = 0, tail = 0; // tail = sum_{i>j} (n_i - k_i)
            for (int j = r - 1; j >= 0; --j) {
                coef *= factorial<Real>(n[j]) / factorial<Real>(n[j] - k[j]);
                coef *= binom(Real(n[j] + tail) + Real(f.alpha[j]), k[j]);
                tail += n[j] - k[j];
                K += k[j];
            }
            if (K % 2) coef = -coef;
            p.c[N - K] += coef;
        });
        break;
    }
    case MopFamilyKind::multiple_laguerre2: {
        detail::for_each_sub_index(n, [&](const std::vector<int>& k) {
            Real coef = 1;
            int K = 0;
            for (int j = 0; j < r; ++j) {
                coef *= binom(Real(n[j]), k[j]) / pow(Real(f.c[j]), k[j]);
                K += k[j];
            }
            coef *= binom(Real(N) + Real(f.alpha0), K) * factorial<Real>(K);
            if (K % 2) coef = -coef;
            p.c[N - K] += coef;
        });
        break;
    }
    case MopFamilyKind::jacobi_pineiro: {
        // sum_k (-1)^{|k|} prod C(n_j + a_j + sum_{i<j} k_i, n_j - k_j) C(|n|+b, |k|) |k|!
        //       x^{|k|} (1-x)^{|n|-|k|} / prod k_j!
        detail::for_each_sub_index(n, [&](const std::vector<int>& k) {
            Real coef = 1;
            int K = 0;
            for (int j = 0; j < r; ++j) {
                coef *= binom(Real(n[j] + K) + Real(f.alpha[j]), n[j] - k[j]) / factorial<Real>(k[j]);
                K += k[j];
            }
            coef *= binom(Real(N) + Real(f.beta), K) * factorial<Real>(K);
            if (K % 2) coef = -coef;
            Polynomial<Real> term = Polynomial<Real>::monomial(K);
            Polynomial<Real> omx(std::vector<Real>{Real(1), Real(-1)});
            for (int q = 0; q < N - K; ++q) term = term * omx;
            p += term * coef;
        });
        Real lead = p.coeff(N);
        require(lead != 0, "jacobi_pineiro: vanishing leading coefficient");
        p *= Real(1) / lead;
        break;
    }
    }
    return {n, p};
}

// Closed-form NNRR coefficients where they are known explicitly.
template <class Real>
NNRRCoefficients<Real> family_nnrr(const MopFamily& f, const MultiIndex& n) {
    f.validate();
    const int r = n.r();
    const int N = n.total();
    NNRRCoefficients<Real> c{n, std::vector<Real>(r, Real(0)), std::vector<Real>(r, Real(0))};
    switch (f.kind) {
    case MopFamilyKind::multiple_hermite:
        for (int j = 0; j < r; ++j) {
            c.a[j] = Real(n[j]) / 2;
            c.b[j] = Real(f.c[j]) / 2;
        }
        break;
    case MopFamilyKind::multiple_laguerre1:
        for (int j = 0; j < r; ++j) {
            Real aj = f.alpha[j];
            Real v = Real(n[j]) * (n[j] + aj);
            for (int i = 0; i < r; ++i)
                if (i != j) v *= (n[j] + aj - Real(f.alpha[i])) / (Real(n[j] - n[i]) + aj - Real(f.alpha[i]));
            c.a[j] = v;
            c.b[j] = Real(N + n[j]) + aj + 1;
        }
        break;
    case MopFamilyKind::multiple_laguerre2: {
        Real s = 0;
        for (int j = 0; j < r; ++j) s += Real(n[j]) / Real(f.c[j]);
        for (int j = 0; j < r; ++j) {
            Real cj = f.c[j];
            c.a[j] = Real(n[j]) * (N + Real(f.alpha0)) / (cj * cj);
            c.b[j] = (N + Real(f.alpha0) + 1) / cj + s;
        }
        break;
    }
    case MopFamilyKind::jacobi_pineiro:
        throw validation_error("no closed-form NNRR registered for jacobi_pineiro");
    }
    return c;
}

inline NNRRField closed_form_nnrr_field(const MopFamily& f) {
    return [f](const MultiIndex& n) {
        auto c = family_nnrr<double>(f, n);
        return c;
    };
}

} // namespace opx
