#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "opx/core/error.hpp"
#include "opx/core/real.hpp"

namespace opx {

template <class Real>
struct GaussRule {
    std::vector<Real> x, w;
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_n at full working
// precision. Rules are cached per (type, n).
template <class Real>
const GaussRule<Real>& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule<Real>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    require(n >= 1, "gauss_legendre: n >= 1");
    GaussRule<Real> r;
    r.x.resize(n);
    r.w.resize(n);
    const Real tol = epsilon<Real>() * 8;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Real x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        Real dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            Real p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (x * p1 - p0) / (x * x - 1);
            Real dx = p1 / dp;
            x -= dx;
            if (abs(dx) <= tol) break;
        }
        // recompute the derivative at the converged node
        Real p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
            Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) p0 = 1;
        dp = n * (x * p1 - p0) / (x * x - 1);
        Real w = 2 / ((1 - x * x) * dp * dp);
        r.x[i] = -x;
        r.w[i] = w;
        r.x[n - 1 - i] = x;
        r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0;
    return cache.emplace(n, std::move(r)).first->second;
}

template <class Real>
struct QuadResult {
    Real value;
    Real error;
    long evaluations = 0;
};

template <class Real>
int default_gauss_order() {
    int bits = mantissa_bits<Real>();
    return std::clamp(bits / 4, 20, 160) & ~1;
}

namespace detail {

template <class Real>
struct Panel {
    Real a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class Real, class F>
Panel<Real> gauss_panel(const F& f, const Real& a, const Real& b, int m, long& evals) {
    const auto& hi = gauss_legendre<Real>(m);
    const auto& lo = gauss_legendre<Real>(m / 2);
    Real c = (a + b) / 2, h = (b - a) / 2;
    Real s_hi = 0, s_lo = 0;
    for (std::size_t i = 0; i < hi.x.size(); ++i) s_hi += hi.w[i] * f(c + h * hi.x[i]);
    for (std::size_t i = 0; i < lo.x.size(); ++i) s_lo += lo.w[i] * f(c + h * lo.x[i]);
    evals += static_cast<long>(hi.x.size() + lo.x.size());
    return {a, b, s_hi * h, abs(s_hi - s_lo) * abs(h)};
}

} // namespace detail

// Globally adaptive Gauss-Legendre quadrature. Infinite endpoints are handled
// by cutting the half-line into panels of doubling length until the panel
// contributions fall below the working epsilon; the panels are then refined
// by bisection alongside the finite part.
template <class Real, class F>
QuadResult<Real> integrate(const F& f, Real a, Real b, Real rel_tol, Real abs_tol = Real(0),
                           long max_panels = 20000) {
    using detail::Panel;
    if (a == b) return {Real(0), Real(0), 0};
    if (a > b) {
        auto r = integrate<Real>(f, b, a, rel_tol, abs_tol, max_panels);
        r.value = -r.value;
        return r;
    }
    const int m = default_gauss_order<Real>();
    long evals = 0;
    std::priority_queue<Panel<Real>> heap;
    const Real inf = std::numeric_limits<Real>::infinity();
    const bool left_inf = (a == -inf), right_inf = (b == inf);

    auto push_tail = [&](Real start, int dir) {
        // dir = +1 for [start, inf), -1 for (-inf, start]
        Real len = 1, lo = start;
        Real total = 0;
        int small = 0;
        for (int k = 0; k < 400; ++k) {
            Real hi = lo + dir * len;
            Panel<Real> p = dir > 0 ? detail::gauss_panel<Real>(f, lo, hi, m, evals)
                                    : detail::gauss_panel<Real>(f, hi, lo, m, evals);
            total += p.value;
            heap.push(p);
            if (abs(p.value) + p.error <= epsilon<Real>() * (abs(total) + abs_tol) &&
                abs(f(hi)) <= epsilon<Real>() * (abs(total) + abs_tol)) {
                if (++small >= 3) return;
            } else {
                small = 0;
            }
            lo = hi;
            len *= 2;
        }
        throw no_convergence("integrate: integrand does not decay on an infinite range", 0.0);
    };

    if (left_inf && right_inf) {
        push_tail(Real(0), -1);
        push_tail(Real(0), +1);
    } else if (left_inf) {
        push_tail(b, -1);
    } else if (right_inf) {
        push_tail(a, +1);
    } else {
        heap.push(detail::gauss_panel<Real>(f, a, b, m, evals));
    }

    auto totals = [&]() {
        Real v = 0, e = 0;
        auto copy = heap;
        while (!copy.empty()) {
            v += copy.top().value;
            e += copy.top().error;
            copy.pop();
        }
        return std::pair<Real, Real>(v, e);
    };

    auto [value, err] = totals();
    long panels = static_cast<long>(heap.size());
    while (err > std::max<Real>(abs_tol, rel_tol * abs(value))) {
        if (panels >= max_panels)
            throw no_convergence("integrate: panel budget exhausted", to_double(Real(err / (abs(value) + abs_tol + 1e-300))));
        Panel<Real> worst = heap.top();
        heap.pop();
        Real mid = (worst.a + worst.b) / 2;
        Panel<Real> l = detail::gauss_panel<Real>(f, worst.a, mid, m, evals);
        Panel<Real> r = detail::gauss_panel<Real>(f, mid, worst.b, m, evals);
        value += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        ++panels;
        if (panels % 64 == 0) std::tie(value, err) = totals(); // resync running sums
    }
    std::tie(value, err) = totals();
    return {value, err, evals};
}

// Double-precision double-exponential quadrature (tanh-sinh family). Infinite
// endpoints use the sinh-sinh / exp-sinh maps with their built-in tail
// truncation.
inline double integrate_de(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                           double* error = nullptr) {
    double err = 0, l1 = 0;
    double v;
    const double inf = std::numeric_limits<double>::infinity();
    if (a == b) return 0.0;
    if (a == -inf && b == inf) {
        boost::math::quadrature::sinh_sinh<double> q;
        v = q.integrate(f, tol, &err, &l1);
    } else if (b == inf) {
        boost::math::quadrature::exp_sinh<double> q;
        v = q.integrate([&](double x) { return f(x); }, a, b, tol, &err, &l1);
    } else if (a == -inf) {
        boost::math::quadrature::exp_sinh<double> q;
        v = q.integrate([&](double x) { return f(x); }, a, b, tol, &err, &l1);
    } else {
        boost::math::quadrature::tanh_sinh<double> q;
        v = q.integrate(f, a, b, tol, &err, &l1);
    }
    if (error) *error = err;
    return v;
}

} // namespace opx
