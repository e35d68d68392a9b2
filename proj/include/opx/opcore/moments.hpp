#pragma once

#include <string>
#include <vector>

#include "opx/core/quadrature.hpp"
#include "opx/core/real.hpp"
#include "opx/core/special.hpp"
#include "opx/opcore/weight.hpp"

namespace opx {

template <class Real>
struct MomentSequence {
    Weight weight;
    std::vector<Real> values;
    int precision_bits = mantissa_bits<Real>();
    std::string provenance; // closed_form, series, quadrature, ...
    double error_estimate = 0.0; // relative, only nonzero for quadrature routes

    std::size_t size() const { return values.size(); }
    const Real& operator[](std::size_t k) const { return values[k]; }
};

namespace detail {

template <class Real>
Real param(const Weight& w, const char* k) {
    return Real(w.param(k));
}

// Jacobi moments on [-1,1] for (1-x)^a (1+x)^b, from
// ((1-x^2) w)' = (b - a - (a+b+2) x) w integrated against x^k.
template <class Real>
std::vector<Real> jacobi_pm1_moments(const Real& a, const Real& b, int count) {
    std::vector<Real> J(count);
    J[0] = pow(Real(2), a + b + 1) * beta<Real>(a + 1, b + 1);
    if (count > 1) J[1] = (b - a) * J[0] / (a + b + 2);
    for (int k = 1; k + 1 < count; ++k) J[k + 1] = ((b - a) * J[k] + k * J[k - 1]) / (a + b + 2 + k);
    return J;
}

// Moments of a discrete weight with point masses p_k on k = 0,1,2,...
// next(k, p_k) returns p_{k+1}. Summation stops once the highest moment's
// term drops below 2^{-bits} of its partial sum and terms are decreasing.
template <class Real, class Next>
std::vector<Real> discrete_moments(Real p, const Next& next, int count) {
    std::vector<Real> m(count, Real(0));
    const Real tiny = pow(Real(2), -mantissa_bits<Real>());
    Real prev_top = 0;
    for (long k = 0; k < 10000000; ++k) {
        Real pw = p;
        for (int j = 0; j < count; ++j) {
            m[j] += pw;
            if (j + 1 < count) pw *= k;
        }
        // pw is k^{count-1} p_k
        if (k > 2 && pw < prev_top && pw <= tiny * m[count - 1] && p <= tiny * m[0]) return m;
        prev_top = pw;
        p = next(k, p);
    }
    throw no_convergence("discrete moment series", 1.0);
}

} // namespace detail

// m_0..m_{count-1} at the precision of Real.
template <class Real>
MomentSequence<Real> compute_moments(const Weight& w, int count) {
    require(count >= 1, "compute_moments: count must be >= 1");
    MomentSequence<Real> out;
    out.weight = w;
    auto& m = out.values;
    m.assign(count, Real(0));
    using detail::param;
    const Real quad_tol = pow(Real(2), -(mantissa_bits<Real>() * 3) / 4);

    switch (w.family) {
    case Family::hermite: {
        Real s = param<Real>(w, "s"), c = param<Real>(w, "c");
        Real mu = c / (2 * s);
        Real pref = exp(c * c / (4 * s));
        // central moments M_i = Gamma((i+1)/2) / s^{(i+1)/2}, i even
        std::vector<Real> M(count, Real(0));
        Real g = sqrt(pi<Real>()) / sqrt(s);
        for (int i = 0; i < count; i += 2) {
            M[i] = g;
            g = g * (Real(i + 1) / 2) / s;
        }
        for (int k = 0; k < count; ++k) {
            Real sum = 0;
            for (int i = 0; i <= k; i += 2) {
                Real mu_pow = 1;
                for (int q = 0; q < k - i; ++q) mu_pow *= mu;
                sum += binom(Real(k), i) * mu_pow * M[i];
            }
            m[k] = pref * sum;
        }
        out.provenance = "closed_form";
        break;
    }
    case Family::laguerre: {
        Real a = param<Real>(w, "alpha"), c = param<Real>(w, "c");
        if (!(a > -1)) throw divergent_moment("laguerre", "alpha must be > -1");
        if (!(c > 0)) throw divergent_moment("laguerre", "decay rate c must be > 0");
        m[0] = tgamma<Real>(a + 1) / pow(c, a + 1);
        for (int k = 1; k < count; ++k) m[k] = m[k - 1] * (k + a) / c;
        out.provenance = "closed_form";
        break;
    }
    case Family::jacobi: {
        Real a = param<Real>(w, "alpha"), b = param<Real>(w, "beta");
        if (!(a > -1) || !(b > -1)) throw divergent_moment("jacobi", "alpha and beta must be > -1");
        m = detail::jacobi_pm1_moments(a, b, count);
        if (w.symmetric())
            for (int k = 1; k < count; k += 2) m[k] = 0;
        out.provenance = "closed_form";
        break;
    }
    case Family::jacobi01: {
        Real a = param<Real>(w, "alpha"), b = param<Real>(w, "beta");
        if (!(a > -1) || !(b > -1)) throw divergent_moment("jacobi01", "alpha and beta must be > -1");
        m[0] = beta<Real>(a + 1, b + 1);
        for (int k = 1; k < count; ++k) m[k] = m[k - 1] * (k + a) / (k + a + b + 1);
        out.provenance = "closed_form";
        break;
    }
    case Family::freud: {
        Real t = param<Real>(w, "t");
        int kmax = (count - 1) / 2;
        // g_j = Gamma((2j+1)/4)/2, g_{j+2} = g_j (2j+1)/4; enough for the tail
        std::vector<Real> g{tgamma<Real>(Real(1) / 4) / 2, tgamma<Real>(Real(3) / 4) / 2};
        auto G = [&](int j) -> const Real& {
            while (static_cast<int>(g.size()) <= j) {
                int i = static_cast<int>(g.size()) - 2;
                g.push_back(g[i] * (2 * i + 1) / 4);
            }
            return g[j];
        };
        const Real tiny = pow(Real(2), -mantissa_bits<Real>());
        for (int k = 0; k <= kmax; ++k) {
            if (t == 0) {
                m[2 * k] = G(k);
                continue;
            }
            Real sum = G(k), tj = 1;
            for (int j = 1; j < 100000; ++j) {
                tj = tj * t / j;
                Real term = tj * G(k + j);
                sum += term;
                if (abs(term) <= tiny * abs(sum) && j > abs(to_double(t))) break;
            }
            m[2 * k] = sum;
        }
        out.provenance = (w.param("t") == 0) ? "closed_form" : "series";
        break;
    }
    case Family::chen_its: {
        Real a = param<Real>(w, "alpha"), t = param<Real>(w, "t");
        if (t == 0) {
            if (!(a > -1)) throw divergent_moment("chen_its", "alpha must be > -1 when t = 0");
            m[0] = tgamma<Real>(a + 1);
            for (int k = 1; k < count; ++k) m[k] = m[k - 1] * (k + a);
            out.provenance = "closed_form";
            break;
        }
        auto f0 = [&](const Real& x) -> Real { return x == 0 ? Real(0) : pow(x, a) * exp(-x - t / x); };
        auto f1 = [&](const Real& x) -> Real { return x == 0 ? Real(0) : pow(x, a + 1) * exp(-x - t / x); };
        const Real inf = std::numeric_limits<Real>::infinity();
        auto q0 = integrate<Real>(f0, Real(0), inf, quad_tol);
        m[0] = q0.value;
        double err = to_double(Real(q0.error / abs(q0.value)));
        if (count > 1) {
            auto q1 = integrate<Real>(f1, Real(0), inf, quad_tol);
            m[1] = q1.value;
            err = std::max(err, to_double(Real(q1.error / abs(q1.value))));
        }
        // x^k w integrated by parts: m_{k+1} = (k+a+1) m_k + t m_{k-1}
        for (int k = 1; k + 1 < count; ++k) m[k + 1] = (k + a + 1) * m[k] + t * m[k - 1];
        out.error_estimate = err;
        out.provenance = "quadrature+recurrence";
        break;
    }
    case Family::bce_jacobi: {
        Real a = param<Real>(w, "alpha"), b = param<Real>(w, "beta"), t = param<Real>(w, "t");
        if (!(a > -1) || !(b > -1)) throw divergent_moment("bce_jacobi", "alpha and beta must be > -1");
        const Real tiny = pow(Real(2), -mantissa_bits<Real>());
        // |J_k| <= J_0, so the j-series is bounded by e^{|t|} J_0
        int jmax = 8;
        {
            Real bound = 1, at = abs(t);
            while (true) {
                bound = bound * at / jmax;
                if (bound * exp(at) <= tiny || at == 0) break;
                ++jmax;
                if (jmax > 100000) throw no_convergence("bce_jacobi moment series", 1.0);
            }
        }
        auto J = detail::jacobi_pm1_moments(a, b, count + jmax + 1);
        for (int k = 0; k < count; ++k) {
            Real sum = 0, c = 1;
            for (int j = 0; j <= jmax; ++j) {
                sum += c * J[k + j];
                c = -c * t / (j + 1);
            }
            m[k] = sum;
        }
        out.provenance = "series";
        break;
    }
    case Family::gen_charlier: {
        Real b = param<Real>(w, "beta"), c = param<Real>(w, "c");
        m = detail::discrete_moments<Real>(Real(1), [&](long k, const Real& p) { return p * c / ((k + 1) * (b + k)); },
                                           count);
        out.provenance = "series";
        break;
    }
    case Family::gen_meixner: {
        Real g = param<Real>(w, "gamma"), b = param<Real>(w, "beta"), a = param<Real>(w, "a");
        m = detail::discrete_moments<Real>(
            Real(1), [&](long k, const Real& p) { return p * (g + k) * a / ((b + k) * (k + 1)); }, count);
        out.provenance = "series";
        break;
    }
    case Family::opuc_bessel: {
        // trigonometric moments (1/2pi) int e^{ik theta} e^{t cos theta} = I_k(t)
        Real t = param<Real>(w, "t");
        for (int k = 0; k < count; ++k) m[k] = bessel_i<Real>(k, t);
        out.provenance = "closed_form";
        break;
    }
    case Family::custom: {
        double err = 0;
        const auto& tx = w.table_x;
        for (int k = 0; k < count; ++k) {
            Real sum = 0, e = 0;
            for (std::size_t i = 1; i < tx.size(); ++i) {
                auto f = [&](const Real& x) { return pow(x, k) * density<Real>(w, x); };
                auto q = integrate<Real>(f, Real(tx[i - 1]), Real(tx[i]), quad_tol, quad_tol * 1e-30);
                sum += q.value;
                e += q.error;
            }
            m[k] = sum;
            if (sum != 0) err = std::max(err, to_double(Real(e / abs(sum))));
        }
        if (!(m[0] > 0)) throw divergent_moment("custom", "density has zero mass");
        out.error_estimate = err;
        out.provenance = "quadrature";
        break;
    }
    }
    if (w.symmetric())
        for (int k = 1; k < count; k += 2) m[k] = 0;
    return out;
}

// Total mass m0 only (used by samplers and normalizations).
template <class Real>
Real total_mass(const Weight& w) {
    return compute_moments<Real>(w, 1).values[0];
}

} // namespace opx
