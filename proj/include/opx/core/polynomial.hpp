#pragma once

#include <algorithm>
#include <vector>

#include "opx/core/real.hpp"

namespace opx {

// Dense polynomial, ascending coefficients c[0] + c[1] x + ...
template <class T>
struct Polynomial {
    std::vector<T> c;

    Polynomial() : c{T(0)} {}
    explicit Polynomial(std::vector<T> coeffs) : c(std::move(coeffs)) {
        if (c.empty()) c.push_back(T(0));
    }
    static Polynomial constant(const T& v) { return Polynomial(std::vector<T>{v}); }
    static Polynomial x() { return Polynomial(std::vector<T>{T(0), T(1)}); }
    static Polynomial monomial(int k) {
        std::vector<T> v(k + 1, T(0));
        v[k] = T(1);
        return Polynomial(v);
    }

    int degree() const {
        for (int i = static_cast<int>(c.size()) - 1; i > 0; --i)
            if (c[i] != T(0)) return i;
        return 0;
    }
    T leading() const { return c[degree()]; }
    T coeff(int k) const { return k < static_cast<int>(c.size()) ? c[k] : T(0); }

    template <class X>
    X operator()(const X& x) const {
        X r = X(0);
        for (std::size_t i = c.size(); i-- > 0;) r = r * x + X(c[i]);
        return r;
    }

    Polynomial derivative() const {
        if (c.size() <= 1) return Polynomial();
        std::vector<T> d(c.size() - 1);
        for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * T(static_cast<int>(i));
        return Polynomial(d);
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.c.size() > c.size()) c.resize(o.c.size(), T(0));
        for (std::size_t i = 0; i < o.c.size(); ++i) c[i] += o.c[i];
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        if (o.c.size() > c.size()) c.resize(o.c.size(), T(0));
        for (std::size_t i = 0; i < o.c.size(); ++i) c[i] -= o.c[i];
        return *this;
    }
    Polynomial& operator*=(const T& s) {
        for (auto& v : c) v *= s;
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, const T& s) { return a *= s; }
    friend Polynomial operator*(const T& s, Polynomial a) { return a *= s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::vector<T> r(a.c.size() + b.c.size() - 1, T(0));
        for (std::size_t i = 0; i < a.c.size(); ++i)
            for (std::size_t j = 0; j < b.c.size(); ++j) r[i + j] += a.c[i] * b.c[j];
        return Polynomial(r);
    }

    // x * p
    Polynomial shift_up() const {
        std::vector<T> r(c.size() + 1, T(0));
        for (std::size_t i = 0; i < c.size(); ++i) r[i + 1] = c[i];
        return Polynomial(r);
    }

    template <class U>
    Polynomial<U> cast() const {
        std::vector<U> r(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            if constexpr (std::is_same_v<U, double>) r[i] = to_double(c[i]);
            else r[i] = U(c[i]);
        }
        return Polynomial<U>(r);
    }
};

// Largest coefficient magnitude, used for scale-relative residuals.
template <class T>
T max_abs_coeff(const Polynomial<T>& p) {
    T m = T(0);
    for (const auto& v : p.c) m = std::max<T>(m, abs(v));
    return m;
}

// Build a monic polynomial from its roots.
template <class T>
Polynomial<T> from_roots(const std::vector<T>& roots) {
    Polynomial<T> p = Polynomial<T>::constant(T(1));
    for (const auto& r : roots) p = p.shift_up() - p * r;
    return p;
}

} // namespace opx
