#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "opx/core/matrix.hpp"
#include "opx/core/polynomial.hpp"
#include "opx/core/quadrature.hpp"
#include "opx/mop/multi_index.hpp"
#include "opx/opcore/moments.hpp"

namespace opx {

enum class SystemClass { angelesco, at_system, nikishin, generic };

inline std::string to_string(SystemClass c) {
    switch (c) {
    case SystemClass::angelesco: return "angelesco";
    case SystemClass::at_system: return "at_system";
    case SystemClass::nikishin: return "nikishin";
    case SystemClass::generic: return "generic";
    }
    return "generic";
}

// r weights with their joint moment table m_k^{(j)}.
template <class Real>
struct MOPSystem {
    std::vector<Weight> weights;
    SystemClass system_class = SystemClass::generic;
    std::vector<std::vector<Real>> moments; // moments[j][k]

    int r() const { return static_cast<int>(weights.size()); }
    int moment_count() const { return moments.empty() ? 0 : static_cast<int>(moments[0].size()); }

    const Real& m(int j, int k) const {
        if (k >= static_cast<int>(moments[j].size()))
            throw validation_error("MOPSystem: moment m_" + std::to_string(k) + " of weight " + std::to_string(j + 1) +
                                   " not available (have " + std::to_string(moments[j].size()) + ")");
        return moments[j][k];
    }
};

// Moments are computed for indices with |n| + max n_j <= max_order.
template <class Real>
MOPSystem<Real> make_system(const std::vector<Weight>& weights, SystemClass cls, int max_order) {
    require(!weights.empty(), "MOPSystem: need r >= 1 weights");
    MOPSystem<Real> s;
    s.weights = weights;
    s.system_class = cls;
    for (const auto& w : weights) s.moments.push_back(compute_moments<Real>(w, max_order + 2).values);
    if (cls == SystemClass::angelesco) {
        for (std::size_t i = 0; i < weights.size(); ++i)
            for (std::size_t j = i + 1; j < weights.size(); ++j) {
                auto a = weights[i].domain(), b = weights[j].domain();
                require(a.hi <= b.lo || b.hi <= a.lo, "angelesco system: weight supports must be disjoint");
            }
    }
    return s;
}

template <class Real>
struct TypeIIPoly {
    MultiIndex index;
    Polynomial<Real> p; // monic, degree |n|
};

template <class Real>
struct TypeIVector {
    MultiIndex index;
    std::vector<Polynomial<Real>> A; // deg A_j <= n_j - 1
};

template <class Real>
struct NNRRCoefficients {
    MultiIndex index;
    std::vector<Real> a; // a_{n,j}
    std::vector<Real> b; // b_{n,k}
};

namespace detail {

// Rows (j, k < n_j), columns i < |n|: m^{(j)}_{k+i}.
template <class Real>
Matrix<Real> type_ii_matrix(const MOPSystem<Real>& s, const MultiIndex& n) {
    require(n.r() == s.r(), "multi-index length does not match the number of weights");
    const int N = n.total();
    Matrix<Real> A(N, N);
    int row = 0;
    for (int j = 0; j < s.r(); ++j)
        for (int k = 0; k < n[j]; ++k, ++row)
            for (int i = 0; i < N; ++i) A(row, i) = s.m(j, k + i);
    return A;
}

template <class Real>
void check_normal(const Matrix<Real>& A, const Real& det, const MultiIndex& n) {
    Real rowprod = 1;
    for (std::size_t i = 0; i < A.rows(); ++i) {
        Real s = 0;
        for (std::size_t j = 0; j < A.cols(); ++j) s += A(i, j) * A(i, j);
        rowprod *= sqrt(s);
    }
    if (!(abs(det) > Real(1e-30) * rowprod))
        throw numerical_error("multi-index " + n.str() + " is not normal (singular system)", "singular_system");
}

} // namespace detail

// Determinant of the stacked block-Hankel moment matrix.
template <class Real>
Real normality_det(const MOPSystem<Real>& s, const MultiIndex& n) {
    if (n.total() == 0) return Real(1);
    return lu_det(detail::type_ii_matrix(s, n));
}

template <class Real>
TypeIIPoly<Real> solve_type_ii(const MOPSystem<Real>& s, const MultiIndex& n) {
    const int N = n.total();
    if (N == 0) return {n, Polynomial<Real>::constant(Real(1))};
    auto A = detail::type_ii_matrix(s, n);
    std::vector<Real> rhs(N);
    int row = 0;
    for (int j = 0; j < s.r(); ++j)
        for (int k = 0; k < n[j]; ++k, ++row) rhs[row] = -s.m(j, k + N);
    FullPivotResult<Real> sol;
    try {
        sol = solve_full_pivot(A, rhs);
    } catch (const numerical_error&) {
        throw numerical_error("multi-index " + n.str() + " is not normal (singular system)", "singular_system");
    }
    detail::check_normal(A, sol.det, n);
    std::vector<Real> c(N + 1);
    for (int i = 0; i < N; ++i) c[i] = sol.x[i];
    c[N] = 1;
    return {n, Polynomial<Real>(c)};
}

template <class Real>
TypeIVector<Real> solve_type_i(const MOPSystem<Real>& s, const MultiIndex& n) {
    const int N = n.total();
    require(N >= 1, "type I needs |n| >= 1");
    auto B = detail::type_ii_matrix(s, n);
    Matrix<Real> A(N, N); // transpose: rows k < |n|, columns (j, i < n_j)
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) A(k, i) = B(i, k);
    std::vector<Real> rhs(N, Real(0));
    rhs[N - 1] = 1;
    FullPivotResult<Real> sol;
    try {
        sol = solve_full_pivot(A, rhs);
    } catch (const numerical_error&) {
        throw numerical_error("multi-index " + n.str() + " is not normal (singular system)", "singular_system");
    }
    detail::check_normal(A, sol.det, n);
    TypeIVector<Real> out{n, {}};
    int col = 0;
    for (int j = 0; j < s.r(); ++j) {
        std::vector<Real> c(std::max(1, n[j]), Real(0));
        for (int i = 0; i < n[j]; ++i) c[i] = sol.x[col++];
        out.A.push_back(Polynomial<Real>(c));
    }
    return out;
}

// int x^k p(x) dmu_j from the moment table.
template <class Real>
Real moment_functional(const MOPSystem<Real>& s, int j, const Polynomial<Real>& p, int k = 0) {
    Real v = 0;
    for (std::size_t i = 0; i < p.c.size(); ++i)
        if (p.c[i] != 0) v += p.c[i] * s.m(j, k + static_cast<int>(i));
    return v;
}

// int P(x) Q(x) dmu with Q = sum_j A_j w_j, exact through moments.
template <class Real>
Real pairing(const MOPSystem<Real>& s, const Polynomial<Real>& P, const TypeIVector<Real>& Q) {
    Real v = 0;
    for (int j = 0; j < s.r(); ++j) v += moment_functional(s, j, P * Q.A[j]);
    return v;
}

// Type I function Q(x) = sum_j A_j(x) w_j(x), with w_j the weight densities.
template <class Real>
double type_i_value(const MOPSystem<Real>& s, const TypeIVector<Real>& Q, double x) {
    double v = 0;
    for (int j = 0; j < s.r(); ++j) {
        if (!s.weights[j].domain().contains(x)) continue;
        v += to_double(Q.A[j](Real(x))) * density<double>(s.weights[j], x);
    }
    return v;
}

// NNRR coefficients at n by moment-functional matching:
//   b_{n,k}: x^{|n|} coefficient of x P_n - P_{n+e_k};
//   a_{n,j} = int x^{n_j-1} (x P_n - P_{n+e_k}) dmu_j / int x^{n_j-1} P_{n-e_j} dmu_j.
template <class Real>
NNRRCoefficients<Real> nnrr_coefficients(const MOPSystem<Real>& s, const MultiIndex& n) {
    const int r = s.r(), N = n.total();
    NNRRCoefficients<Real> out{n, std::vector<Real>(r, Real(0)), std::vector<Real>(r, Real(0))};
    auto Pn = solve_type_ii(s, n);
    Polynomial<Real> R0;
    for (int k = 0; k < r; ++k) {
        auto Pk = solve_type_ii(s, n.plus(k));
        Polynomial<Real> R = Pn.p.shift_up() - Pk.p;
        out.b[k] = R.coeff(N);
        if (k == 0) R0 = R;
    }
    for (int j = 0; j < r; ++j) {
        if (n[j] == 0) continue;
        auto Pm = solve_type_ii(s, n.minus(j));
        out.a[j] = moment_functional(s, j, R0, n[j] - 1) / moment_functional(s, j, Pm.p, n[j] - 1);
    }
    return out;
}

// Largest coefficient of x P_n - P_{n+e_k} - b_{n,k} P_n - sum_j a_{n,j} P_{n-e_j}
// over k, relative to the largest coefficient of x P_n.
template <class Real>
Real nnrr_identity_residual(const MOPSystem<Real>& s, const NNRRCoefficients<Real>& c) {
    const MultiIndex& n = c.index;
    auto Pn = solve_type_ii(s, n).p;
    Polynomial<Real> low;
    for (int j = 0; j < s.r(); ++j)
        if (n[j] > 0) low += solve_type_ii(s, n.minus(j)).p * c.a[j];
    Real worst = 0, scale = max_abs_coeff(Pn);
    for (int k = 0; k < s.r(); ++k) {
        Polynomial<Real> R = Pn.shift_up() - solve_type_ii(s, n.plus(k)).p - Pn * c.b[k] - low;
        worst = std::max<Real>(worst, max_abs_coeff(R) / scale);
    }
    return worst;
}

// Coefficients on a box: NNRR at every index with components < box[j].
using NNRRField = std::function<NNRRCoefficients<double>(const MultiIndex&)>;

template <class Real>
NNRRField numeric_nnrr_field(const MOPSystem<Real>& s) {
    auto cache = std::make_shared<std::map<MultiIndex, NNRRCoefficients<double>>>();
    return [s, cache](const MultiIndex& n) {
        auto it = cache->find(n);
        if (it != cache->end()) return it->second;
        auto c = nnrr_coefficients(s, n);
        NNRRCoefficients<double> d{n, {}, {}};
        for (const auto& v : c.a) d.a.push_back(to_double(v));
        for (const auto& v : c.b) d.b.push_back(to_double(v));
        cache->emplace(n, d);
        return d;
    };
}

struct CompatibilityReport {
    double max_residual = 0;
    double b_symmetry = 0;   // b_{n+e_i,j} - b_{n,j} - (b_{n+e_j,i} - b_{n,i})
    double a_sum = 0;        // sum_k a_{n+e_j,k} - sum_k a_{n+e_i,k} - det(...)
    double a_ratio = 0;      // a_{n,i}(b_{n,j}-b_{n,i}) - a_{n+e_j,i}(b_{n-e_i,j}-b_{n-e_i,i})
    int checked = 0;
};

// The three partial difference equations at a single n, over every i != j.
// The ratio identity is compared cross-multiplied so that a_{n+e_j,i} = 0 or
// b_{n,j} = b_{n,i} cause no division.
inline CompatibilityReport compatibility_at(const NNRRField& f, const MultiIndex& n) {
    const int r = n.r();
    CompatibilityReport rep;
    auto cn = f(n);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            if (i == j) continue;
            auto ci = f(n.plus(i)), cj = f(n.plus(j));
            double e1 = (ci.b[j] - cn.b[j]) - (cj.b[i] - cn.b[i]);
            double sj = 0, si = 0;
            for (int k = 0; k < r; ++k) {
                sj += cj.a[k];
                si += ci.a[k];
            }
            double det = cj.b[i] * cn.b[j] - cn.b[i] * ci.b[j];
            double e2 = (sj - si) - det;
            double scale1 = 1 + std::abs(ci.b[j]) + std::abs(cn.b[j]);
            double scale2 = 1 + std::abs(sj) + std::abs(si) + std::abs(det);
            rep.b_symmetry = std::max(rep.b_symmetry, std::abs(e1) / scale1);
            rep.a_sum = std::max(rep.a_sum, std::abs(e2) / scale2);
            if (n[i] >= 1) {
                auto cm = f(n.minus(i));
                double lhs = cn.a[i] * (cn.b[j] - cn.b[i]);
                double rhs = cj.a[i] * (cm.b[j] - cm.b[i]);
                double e3 = lhs - rhs;
                rep.a_ratio = std::max(rep.a_ratio, std::abs(e3) / (1 + std::abs(lhs) + std::abs(rhs)));
            }
            ++rep.checked;
        }
    rep.max_residual = std::max({rep.b_symmetry, rep.a_sum, rep.a_ratio});
    return rep;
}

// Same, on every n in the box (n_j < box[j]).
inline CompatibilityReport compatibility_residual(const NNRRField& f, const std::vector<int>& box) {
    const int r = static_cast<int>(box.size());
    CompatibilityReport rep;
    std::vector<int> idx(r, 0);
    for (;;) {
        auto at = compatibility_at(f, MultiIndex(idx));
        rep.b_symmetry = std::max(rep.b_symmetry, at.b_symmetry);
        rep.a_sum = std::max(rep.a_sum, at.a_sum);
        rep.a_ratio = std::max(rep.a_ratio, at.a_ratio);
        rep.checked += at.checked;
        int p = 0;
        while (p < r && ++idx[p] >= box[p]) idx[p++] = 0;
        if (p == r) break;
    }
    rep.max_residual = std::max({rep.b_symmetry, rep.a_sum, rep.a_ratio});
    return rep;
}

// Daems-Kuijlaars kernel along a path (list of step directions).
template <class Real>
double mop_cd_kernel(const MOPSystem<Real>& s, const MultiIndex& n, const std::vector<int>& path, double x, double y) {
    require(static_cast<int>(path.size()) == n.total(), "mop_cd_kernel: path length must equal |n|");
    MultiIndex cur = MultiIndex::zero(s.r());
    double sum = 0;
    for (int step : path) {
        require(step >= 0 && step < s.r(), "mop_cd_kernel: invalid step direction");
        MultiIndex next = cur.plus(step);
        require(next.leq(n), "mop_cd_kernel: path leaves the box below n");
        double p = to_double(solve_type_ii(s, cur).p(Real(x)));
        sum += p * type_i_value(s, solve_type_i(s, next), y);
        cur = next;
    }
    require(cur == n, "mop_cd_kernel: path does not end at n");
    return sum;
}

// Right-hand side of the Christoffel-Darboux identity divided by (x - y).
template <class Real>
double mop_cd_kernel_closed(const MOPSystem<Real>& s, const MultiIndex& n, double x, double y) {
    require(n.total() >= 1, "mop_cd_kernel_closed: need |n| >= 1");
    auto c = nnrr_coefficients(s, n);
    double v = to_double(solve_type_ii(s, n).p(Real(x))) * type_i_value(s, solve_type_i(s, n), y);
    for (int j = 0; j < s.r(); ++j) {
        if (n[j] == 0) continue;
        v -= to_double(c.a[j]) * to_double(solve_type_ii(s, n.minus(j)).p(Real(x))) *
             type_i_value(s, solve_type_i(s, n.plus(j)), y);
    }
    return v / (x - y);
}

enum class PadeType { I, II };

struct HermitePadeReport {
    std::vector<double> z_abs;              // |z| sampled (z = i |z|)
    std::vector<std::vector<double>> error; // per j (type II) or single row (type I)
    std::vector<double> slopes;             // fitted d log|err| / d log|z|
};

namespace detail {

// f_j(z) = int dmu_j(x) / (z - x) for z = i*y, as (re, im).
template <class Real>
std::pair<Real, Real> markov_function(const Weight& w, const Real& y) {
    auto d = w.domain();
    Real lo = d.lo, hi = d.hi;
    const Real tol = pow(Real(2), -(mantissa_bits<Real>() * 3) / 4);
    // 1/(iy - x) = (-x - iy)/(x^2 + y^2)
    auto re = integrate<Real>([&](const Real& x) {
        Real wx = density<Real>(w, x);
        return wx == 0 ? Real(0) : -x * wx / (x * x + y * y);
    }, lo, hi, tol, tol * 1e-20);
    auto im = integrate<Real>([&](const Real& x) {
        Real wx = density<Real>(w, x);
        return wx == 0 ? Real(0) : -y * wx / (x * x + y * y);
    }, lo, hi, tol, tol * 1e-20);
    return {re.value, im.value};
}

// Divided-difference polynomial int (p(z) - p(x))/(z - x) dmu_j(x), coefficients in z.
template <class Real>
Polynomial<Real> divided_difference(const MOPSystem<Real>& s, int j, const Polynomial<Real>& p) {
    const int d = static_cast<int>(p.c.size()) - 1;
    std::vector<Real> q(std::max(1, d), Real(0));
    for (int k = 1; k <= d; ++k)
        for (int i = 0; i < k; ++i) q[i] += p.c[k] * s.m(j, k - 1 - i);
    return Polynomial<Real>(q);
}

template <class Real>
std::pair<Real, Real> eval_at_iy(const Polynomial<Real>& p, const Real& y) {
    Real re = 0, im = 0;
    for (std::size_t k = p.c.size(); k-- > 0;) {
        Real nr = -im * y + p.c[k], ni = re * y;
        re = nr;
        im = ni;
    }
    return {re, im};
}

inline double fit_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

} // namespace detail

// Hermite-Pade errors on the imaginary axis and their decay slopes.
// Type II: P_n f_j - Q_{n,j} = O(z^{-n_j-1}); type I: sum A_j f_j - B_n = O(z^{-|n|}).
template <class Real>
HermitePadeReport hermite_pade_residual(const MOPSystem<Real>& s, const MultiIndex& n, PadeType type,
                                        const std::vector<double>& z_abs) {
    require(z_abs.size() >= 2, "hermite_pade_residual: need at least two |z| values");
    if (type == PadeType::I) require(n.total() >= 1, "type I Hermite-Pade needs |n| >= 1");
    HermitePadeReport rep;
    rep.z_abs = z_abs;
    const int r = s.r();
    std::vector<std::vector<std::pair<Real, Real>>> f(r);
    for (int j = 0; j < r; ++j)
        for (double y : z_abs) f[j].push_back(detail::markov_function<Real>(s.weights[j], Real(y)));
    auto mag = [](const Real& re, const Real& im) { return to_double(sqrt(re * re + im * im)); };
    std::vector<double> lx;
    for (double y : z_abs) lx.push_back(std::log(y));
    if (type == PadeType::II) {
        auto P = solve_type_ii(s, n).p;
        for (int j = 0; j < r; ++j) {
            auto Q = detail::divided_difference(s, j, P);
            std::vector<double> errs, ly;
            for (std::size_t t = 0; t < z_abs.size(); ++t) {
                Real y = z_abs[t];
                auto [pr, pi] = detail::eval_at_iy(P, y);
                auto [qr, qi] = detail::eval_at_iy(Q, y);
                auto [fr, fi] = f[j][t];
                double e = mag(pr * fr - pi * fi - qr, pr * fi + pi * fr - qi);
                errs.push_back(e);
                ly.push_back(std::log(e));
            }
            rep.error.push_back(errs);
            rep.slopes.push_back(detail::fit_slope(lx, ly));
        }
    } else {
        auto Q = solve_type_i(s, n);
        Polynomial<Real> B;
        for (int j = 0; j < r; ++j) B += detail::divided_difference(s, j, Q.A[j]);
        std::vector<double> errs, ly;
        for (std::size_t t = 0; t < z_abs.size(); ++t) {
            Real y = z_abs[t];
            Real er = 0, ei = 0;
            for (int j = 0; j < r; ++j) {
                auto [ar, ai] = detail::eval_at_iy(Q.A[j], y);
                auto [fr, fi] = f[j][t];
                er += ar * fr - ai * fi;
                ei += ar * fi + ai * fr;
            }
            auto [br, bi] = detail::eval_at_iy(B, y);
            double e = mag(er - br, ei - bi);
            errs.push_back(e);
            ly.push_back(std::log(e));
        }
        rep.error.push_back(errs);
        rep.slopes.push_back(detail::fit_slope(lx, ly));
    }
    return rep;
}

} // namespace opx
