#pragma once

#include <cmath>
#include <vector>

#include "opx/core/matrix.hpp"
#include "opx/core/quadrature.hpp"
#include "opx/opcore/kernel.hpp"

namespace opx {

struct CorrelationResult {
    int k = 0;
    std::vector<double> points;
    double value = 0;
};

struct GapQuery {
    double a = 0, b = 0;
    int quad_order = 0;              // order of the returned value
    std::vector<int> order_sequence; // orders tried
    std::vector<double> values;      // det(I - K_A) at each order
    bool converged = false;
    double result = 1;
};

namespace detail {

inline KernelOperator weighted(const KernelOperator& k) {
    KernelOperator w = k;
    w.mode = KernelMode::weighted;
    return w;
}

inline double det_of_kernel(const KernelOperator& k, const std::vector<double>& pts) {
    const std::size_t m = pts.size();
    if (m == 0) return 1.0;
    if (k.recurrence_hp) {
        // sum form at 256 bits
        const auto& r = *k.recurrence_hp;
        std::vector<std::vector<real256>> p(m);
        std::vector<real256> sw(m, real256(1));
        for (std::size_t i = 0; i < m; ++i) {
            p[i] = eval_poly(r, k.n - 1, real256(pts[i]), Normalization::orthonormal);
            if (k.mode == KernelMode::weighted) {
                require(k.weight.domain().contains(pts[i]), "cd_kernel: point outside the weight domain in weighted mode");
                sw[i] = sqrt(density<real256>(k.weight, real256(pts[i])));
            }
        }
        Matrix<real256> A(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i; j < m; ++j) {
                real256 s = 0;
                for (int l = 0; l < k.n; ++l) s += p[i][l] * p[j][l];
                A(i, j) = A(j, i) = s * sw[i] * sw[j];
            }
        return to_double(lu_det(A));
    }
    Matrix<double> A(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) A(i, j) = A(j, i) = cd_kernel(k, pts[i], pts[j]);
    return lu_det(A);
}

} // namespace detail

// rho_k(x_1..x_k) = det K(x_i, x_j), weighted kernel.
inline CorrelationResult correlation_k(const KernelOperator& kernel, const std::vector<double>& points) {
    const int k = static_cast<int>(points.size());
    require(k <= kernel.n, "correlation_k: k = " + std::to_string(k) + " exceeds kernel degree " +
                               std::to_string(kernel.n));
    return {k, points, detail::det_of_kernel(detail::weighted(kernel), points)};
}

// Joint density of the n points, determinant route (1/n!) det K.
inline double joint_density(const KernelOperator& kernel, const std::vector<double>& points) {
    require(static_cast<int>(points.size()) == kernel.n, "joint_density: need exactly n points");
    return detail::det_of_kernel(detail::weighted(kernel), points) / std::tgamma(kernel.n + 1.0);
}

// Vandermonde route Delta_n^2 prod w(x_i) / (n! D_n), with
// D_n = prod_{k<n} m0 a_1^2 ... a_k^2.
inline double joint_density_vandermonde(const KernelOperator& kernel, const std::vector<double>& points) {
    const int n = kernel.n;
    require(static_cast<int>(points.size()) == n, "joint_density: need exactly n points");
    const auto& r = kernel.recurrence;
    double logD = 0, h = r.m0;
    for (int k = 0; k < n; ++k) {
        if (k > 0) h *= r.a_sq[k];
        logD += std::log(h);
    }
    double v = 1;
    for (int i = 0; i < n; ++i) {
        require(kernel.weight.domain().contains(points[i]), "joint_density: point outside the weight domain");
        v *= density<double>(kernel.weight, points[i]);
        for (int j = i + 1; j < n; ++j) v *= (points[j] - points[i]) * (points[j] - points[i]);
    }
    return v * std::exp(-logD) / std::tgamma(n + 1.0);
}

// E N([a,b]) = int_a^b K_n(x,x) w(x) dx; sums over mass points for discrete weights.
inline double expected_count(const KernelOperator& kernel, double a, double b, double* error = nullptr) {
    require(a <= b, "expected_count: need a <= b");
    const auto d = kernel.weight.domain();
    auto k = detail::weighted(kernel);
    if (d.discrete) {
        double s = 0;
        double lo = std::max(0.0, std::ceil(a));
        for (double x = lo; x <= b; x += 1) {
            double v = cd_kernel(k, x, x);
            s += v;
            if (x > lo + 10 && v < 1e-18 * s) break;
        }
        if (error) *error = 0;
        return s;
    }
    a = std::max(a, d.lo);
    b = std::min(b, d.hi);
    if (a >= b) return 0.0;
    double err = 0, v = 0;
    if (std::isfinite(d.lo) && std::isfinite(d.hi)) {
        // each half in the distance to its nearer end
        auto plain = kernel;
        plain.mode = KernelMode::plain;
        const double m = 0.5 * (a + b);
        for (int side = 0; side < 2; ++side) {
            double e = 0;
            auto g = [&](double u) {
                double x = side == 0 ? a + u : b - u;
                double dlo = side == 0 ? (a - d.lo) + u : x - d.lo;
                double dhi = side == 0 ? d.hi - x : (d.hi - b) + u;
                if (dlo <= 0 || dhi <= 0) return 0.0;
                return cd_kernel(plain, x, x) * density_from_edges(kernel.weight, x, dlo, dhi);
            };
            v += integrate_de(g, 0.0, side == 0 ? m - a : b - m, 1e-13, &e);
            err += e;
        }
    } else {
        v = integrate_de([&](double x) { return cd_kernel(k, x, x); }, a, b, 1e-13, &err);
    }
    if (!(err < 1e-10 * std::max(1.0, std::abs(v))))
        throw no_convergence("expected_count quadrature", err);
    if (error) *error = err;
    return v;
}

// Fredholm determinant det(I - K) on [a,b], Nystrom discretization on
// Gauss-Legendre nodes with sqrt-weight symmetrization; order doubles until
// two successive values agree to 1e-8.
inline GapQuery gap_probability(const KernelOperator& kernel, double a, double b, int quad_order,
                                double tol = 1e-8, int max_doublings = 4) {
    require(std::isfinite(a) && std::isfinite(b) && a <= b, "gap_probability: need a finite interval a <= b");
    require(quad_order >= 10, "gap_probability: quad_order must be >= 10");
    GapQuery q;
    q.a = a;
    q.b = b;
    auto k = detail::weighted(kernel);
    const auto d = kernel.weight.domain();
    if (a == b && !d.discrete) {
        q.quad_order = quad_order;
        q.order_sequence = {quad_order};
        q.values = {1.0};
        q.converged = true;
        q.result = 1.0;
        return q;
    }
    if (d.discrete) {
        // the restriction of K to the mass points in [a,b] is already finite
        std::vector<double> pts;
        for (double x = std::max(0.0, std::ceil(a)); x <= b; x += 1) pts.push_back(x);
        Matrix<double> M(pts.size(), pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = 0; j < pts.size(); ++j) M(i, j) = (i == j) - cd_kernel(k, pts[i], pts[j]);
        q.result = pts.empty() ? 1.0 : lu_det(M);
        q.quad_order = static_cast<int>(pts.size());
        q.order_sequence = {q.quad_order};
        q.values = {q.result};
        q.converged = true;
        return q;
    }
    require(a >= d.lo && b <= d.hi, "gap_probability: interval outside the weight domain");
    auto fredholm = [&](int m) {
        const auto& g = gauss_legendre<double>(m);
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        std::vector<double> x(m), sw(m);
        for (int i = 0; i < m; ++i) {
            x[i] = c + h * g.x[i];
            sw[i] = std::sqrt(h * g.w[i]);
        }
        Matrix<double> M(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) {
                double v = sw[i] * sw[j] * cd_kernel(k, x[i], x[j]);
                M(i, j) = (i == j) - v;
                M(j, i) = M(i, j);
            }
        return lu_det(M);
    };
    int m = quad_order;
    double prev = fredholm(m);
    q.order_sequence.push_back(m);
    q.values.push_back(prev);
    for (int it = 0; it < max_doublings; ++it) {
        m *= 2;
        double cur = fredholm(m);
        q.order_sequence.push_back(m);
        q.values.push_back(cur);
        if (std::abs(cur - prev) < tol) {
            q.converged = true;
            q.quad_order = m;
            q.result = cur;
            return q;
        }
        prev = cur;
    }
    throw no_convergence("gap_probability after " + std::to_string(max_doublings) + " doublings",
                         std::abs(q.values.back() - q.values[q.values.size() - 2]));
}

} // namespace opx
