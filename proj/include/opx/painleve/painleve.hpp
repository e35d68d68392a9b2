#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "opx/core/error.hpp"
#include "opx/core/matrix.hpp"
#include "opx/core/polynomial.hpp"
#include "opx/core/real.hpp"
#include "opx/core/special.hpp"
#include "opx/opcore/moments.hpp"
#include "opx/opcore/recurrence.hpp"
#include "opx/opcore/weight.hpp"

namespace opx {

// ---------------------------------------------------------------------------
// d-PI for e^{-x^4 + t x^2}:  4 x_n (x_{n+1} + x_n + x_{n-1} - t/2) = n, x_0 = 0

struct DP1Solution {
    double t = 0;
    int N = 0;
    std::vector<double> x; // x[0] = 0 boundary, x[n] = a_n^2 for n = 1..N
    int iterations = 0;
    double residual = 0;         // max_n |4 x_n (...) / n - 1|
    std::vector<double> history; // sup-change per sweep
    int newton_steps = 0;        // polish steps after the relaxed sweeps
};

inline constexpr int dp1_buffer = 64;
inline constexpr int dp1_sweep_limit = 500;
inline constexpr double dp1_continuation_step = 0.25;

// Positive root of 12 x^2 - 2 t x - n = 0, the constant-x balance of d-PI.
inline double dp1_asymptote(double t, int n) { return t / 12 + std::sqrt(t * t / 144 + n / 12.0); }

inline DP1Solution dp1_positive_solution(double t, int N, double tol, int max_iter = 20000) {
    require(N >= 4, "dp1: N must be >= 4");
    require(tol >= 1e-14, "dp1: tol must be >= 1e-14");
    const int M = N + dp1_buffer;
    std::vector<double> x(M + 2), next(M + 2);
    x[0] = 0;
    for (int n = 1; n <= M + 1; ++n) x[n] = dp1_asymptote(t, n);
    next = x;

    DP1Solution s;
    s.t = t;
    s.N = N;
    auto residual = [&] {
        double r = 0;
        for (int n = 1; n <= N; ++n)
            r = std::max(r, std::abs(4 * x[n] * (x[n + 1] + x[n] + x[n - 1] - t / 2) / n - 1));
        return r;
    };
    auto finish = [&](double r) {
        s.residual = r;
        for (int n = 1; n <= N; ++n)
            if (!(x[n] > 0))
                throw numerical_error("dp1: nonpositive x_" + std::to_string(n), "nonpositive_iterate", x[n], n);
        s.x.assign(x.begin(), x.begin() + N + 1);
        return s;
    };
    const int sweeps = std::min(max_iter, dp1_sweep_limit);
    std::vector<double> best = x;
    double best_change = INFINITY;
    for (int it = 1; it <= sweeps; ++it) {
        double change = 0;
        bool broke = false;
        for (int n = 1; n <= M && !broke; ++n) {
            double S = x[n - 1] + x[n] + x[n + 1] - t / 2;
            if (!(S > 0)) broke = true;
            next[n] = 0.5 * x[n] + 0.5 * n / (4 * S);
            change = std::max(change, std::abs(next[n] - x[n]));
        }
        if (broke || change > 1e3 * best_change) { // diverging: hand the best iterate to Newton
            x = best;
            break;
        }
        std::swap(x, next);
        s.history.push_back(change);
        s.iterations = it;
        if (change < best_change) {
            best_change = change;
            best = x;
        }
        if (change < tol) {
            double r = residual();
            if (r < tol) return finish(r);
        }
    }
    // The sweep contracts only while 4 x_n^2 / n < 1; past that (t >~ 2 at
    // small n) the alternating mode is neutral and for larger t the double
    // well makes the asymptotic seed useless. Fall back to damped Newton on the
    // tridiagonal system F_n = 4 x_n S_n - n (tail fixed), continued in t from
    // the t = 0 seed in steps of dp1_continuation_step.
    std::vector<double> lo(M + 1), di(M + 1), up(M + 1), rhs(M + 1);
    int budget = max_iter - s.iterations;
    auto newton = [&](double tt) {
        x[M + 1] = dp1_asymptote(tt, M + 1);
        while (budget-- > 0) {
            for (int n = 1; n <= M; ++n) {
                double S = x[n - 1] + x[n] + x[n + 1] - tt / 2;
                lo[n] = 4 * x[n];
                up[n] = 4 * x[n];
                di[n] = 4 * S + 4 * x[n];
                rhs[n] = -(4 * x[n] * S - n);
            }
            for (int n = 2; n <= M; ++n) { // Thomas elimination
                double f = lo[n] / di[n - 1];
                di[n] -= f * up[n - 1];
                rhs[n] -= f * rhs[n - 1];
            }
            for (int n = M; n >= 1; --n) rhs[n] = (rhs[n] - (n < M ? up[n] * rhs[n + 1] : 0.0)) / di[n];
            double lambda = 1; // halve until every x_n keeps 10% of its value
            for (int n = 1; n <= M; ++n)
                while (!(x[n] + lambda * rhs[n] > 0.1 * x[n]) && lambda > 1e-8) lambda /= 2;
            double change = 0;
            for (int n = 1; n <= M; ++n) {
                x[n] += lambda * rhs[n];
                change = std::max(change, std::abs(lambda * rhs[n]));
            }
            s.history.push_back(change);
            ++s.iterations;
            ++s.newton_steps;
            if (change < tol) return true;
        }
        return false;
    };
    if (budget > 0) {
        for (int n = 1; n <= M + 1; ++n) x[n] = dp1_asymptote(0.0, n);
        const int stages = static_cast<int>(std::ceil(std::abs(t) / dp1_continuation_step));
        bool ok = true;
        for (int k = 1; k <= stages && ok; ++k) ok = newton(t * k / stages);
        if (ok && newton(t)) {
            double r = residual();
            if (r < tol) return finish(r);
        }
    }
    throw no_convergence("dp1 fixed point", s.history.empty() ? 0.0 : s.history.back());
}

// Forward iteration of d-PI from (x_0 = 0, x_1) without relaxation. Stops after
// the first nonpositive value (included) or after `steps` new values.
inline std::vector<double> dp1_raw_orbit(double t, double x1, int steps) {
    std::vector<double> x{0.0, x1};
    for (int n = 1; n < steps + 1; ++n) {
        if (!(x[n] > 0)) break;
        x.push_back(n / (4 * x[n]) - x[n] - x[n - 1] + t / 2);
    }
    return x;
}

// First n >= 1 with x_n <= 0, or -1.
inline int first_nonpositive(const std::vector<double>& x) {
    for (std::size_t n = 1; n < x.size(); ++n)
        if (!(x[n] > 0)) return static_cast<int>(n);
    return -1;
}

// ---------------------------------------------------------------------------
// Structure relation P_n' = A_n P_{n-1} + C_n P_{n-3} for Freud weights.

struct StructureRelationRow {
    int n = 0;
    double A = 0, C = 0;
    double residual = 0;
};

struct StructureRelationReport {
    double t = 0;
    int N = 0;
    std::vector<StructureRelationRow> rows; // n = 1..N
    double max_residual = 0;
};

inline StructureRelationReport structure_relation_check(double t, int N) {
    require(N >= 1, "structure_relation_check: N must be >= 1");
    using R = real256;
    auto rec = recurrence_for<R>(Weight::freud(t), N);
    std::vector<Polynomial<R>> P{Polynomial<R>::constant(R(1))};
    for (int k = 0; k < N; ++k) {
        Polynomial<R> next = P[k].shift_up() - P[k] * rec.b[k];
        if (k > 0) next -= P[k - 1] * rec.a_sq[k];
        P.push_back(next);
    }
    StructureRelationReport rep;
    rep.t = t;
    rep.N = N;
    for (int n = 1; n <= N; ++n) {
        Polynomial<R> d = P[n].derivative();
        R A = d.coeff(n - 1);
        Polynomial<R> rem = d - P[n - 1] * A;
        R C = n >= 3 ? rem.coeff(n - 3) : R(0);
        if (n >= 3) rem -= P[n - 3] * C;
        R worst = 0;
        for (const auto& c : rem.c) worst = std::max<R>(worst, abs(c));
        StructureRelationRow row{n, to_double(A), to_double(C), to_double(worst)};
        rep.max_residual = std::max(rep.max_residual, row.residual);
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// OPUC for e^{t cos theta}: moments I_k(t), Verblunsky coefficients, d-PII.

enum class VerblunskySource { moment_determinant, szego_recurrence };

inline std::string to_string(VerblunskySource s) {
    return s == VerblunskySource::moment_determinant ? "moment_determinant" : "szego_recurrence";
}

template <class Real = real256>
struct VerblunskySequence {
    double t = 0;
    std::vector<Real> alphas; // alpha_0..alpha_N; alpha_{-1} = -1 is implicit
    VerblunskySource source = VerblunskySource::szego_recurrence;
    double route_discrepancy = 0; // max |determinant - Szego| over n

    static constexpr double alpha_minus_one = -1.0;
    Real at(int n) const { return n < 0 ? Real(alpha_minus_one) : alphas.at(n); }
};

namespace detail {

template <class Real>
std::vector<Real> szego_alphas(const std::vector<Real>& c, int N) {
    std::vector<Real> phi{Real(1)}, out;
    Real nrm = c[0];
    for (int n = 0; n <= N; ++n) {
        Real a = 0;
        for (std::size_t j = 0; j < phi.size(); ++j) a += phi[j] * c[j + 1];
        a /= nrm;
        out.push_back(a);
        // Phi_{n+1} = z Phi_n - alpha_n Phi_n^*
        std::vector<Real> nxt(phi.size() + 1, Real(0));
        for (std::size_t j = 0; j < phi.size(); ++j) nxt[j + 1] = phi[j];
        for (std::size_t j = 0; j < phi.size(); ++j) nxt[j] -= a * phi[phi.size() - 1 - j];
        phi = std::move(nxt);
        nrm *= 1 - a * a;
    }
    return out;
}

// alpha_n = -Phi_{n+1}(0), Phi_{n+1} orthogonal to 1, z, ..., z^n.
template <class Real>
std::vector<Real> determinant_alphas(const std::vector<Real>& c, int N) {
    std::vector<Real> out;
    for (int n = 0; n <= N; ++n) {
        const int m = n + 1;
        Matrix<Real> T(m, m);
        std::vector<Real> rhs(m);
        for (int k = 0; k < m; ++k) {
            for (int j = 0; j < m; ++j) T(k, j) = c[std::abs(k - j)];
            rhs[k] = -c[m - k];
        }
        out.push_back(-solve_full_pivot(T, rhs).x[0]);
    }
    return out;
}

} // namespace detail

template <class Real = real256>
VerblunskySequence<Real> verblunsky_sequence(double t, int N,
                                             VerblunskySource source = VerblunskySource::szego_recurrence) {
    require(t != 0, "verblunsky_sequence: t must be nonzero");
    require(N >= 0, "verblunsky_sequence: N must be >= 0");
    std::vector<Real> c;
    for (int k = 0; k <= N + 1; ++k) c.push_back(bessel_i<Real>(k, Real(t)));
    auto sz = detail::szego_alphas(c, N);
    auto det = detail::determinant_alphas(c, N);
    VerblunskySequence<Real> s;
    s.t = t;
    s.source = source;
    for (int n = 0; n <= N; ++n) {
        double d = to_double(Real(abs(sz[n] - det[n])));
        if (!(d <= 1e-10))
            throw numerical_error("verblunsky: routes disagree at n = " + std::to_string(n) +
                                      "; last trustworthy index " + std::to_string(n - 1),
                                  "precision_exhausted", d, n - 1);
        if (!(abs(sz[n]) < 1))
            throw numerical_error("verblunsky: |alpha_" + std::to_string(n) + "| >= 1", "verblunsky_out_of_disk",
                                  to_double(sz[n]), n);
        s.route_discrepancy = std::max(s.route_discrepancy, d);
    }
    s.alphas = source == VerblunskySource::szego_recurrence ? sz : det;
    return s;
}

struct DP2Report {
    double t = 0;
    std::vector<double> residuals; // n = 0..N-1
    double max_residual = 0;
    int worst_index = -1;
};

// |alpha_{n+1} + alpha_{n-1} + (2/t)(n+1) alpha_n / (1 - alpha_n^2)|, alpha_{-1} = -1.
template <class Real>
DP2Report dp2_residual(const VerblunskySequence<Real>& seq) {
    const int N = static_cast<int>(seq.alphas.size()) - 1;
    require(N >= 2, "dp2_residual: needs alpha_0..alpha_N with N >= 2");
    require(seq.t != 0, "dp2_residual: t must be nonzero");
    for (int n = 0; n <= N; ++n)
        if (!(abs(seq.alphas[n]) < 1))
            throw numerical_error("dp2: |alpha_" + std::to_string(n) + "| >= 1", "verblunsky_out_of_disk",
                                  to_double(seq.alphas[n]), n);
    DP2Report rep;
    rep.t = seq.t;
    const Real t(seq.t);
    for (int n = 0; n < N; ++n) {
        Real a = seq.alphas[n];
        Real r = seq.at(n + 1) + seq.at(n - 1) + 2 * (n + 1) * a / (t * (1 - a * a));
        double v = to_double(Real(abs(r)));
        rep.residuals.push_back(v);
        if (rep.worst_index < 0 || v > rep.max_residual) {
            rep.max_residual = v;
            rep.worst_index = n;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Lattice flows. The weight at flow time s is base * e^{s x} (toda),
// base * e^{s x^2} (langmuir) or base * e^{s cos theta} (ablowitz_ladik).

enum class Lattice { toda, langmuir, ablowitz_ladik };

inline std::string to_string(Lattice l) {
    switch (l) {
    case Lattice::toda: return "toda";
    case Lattice::langmuir: return "langmuir";
    case Lattice::ablowitz_ladik: return "ablowitz_ladik";
    }
    return "";
}

inline Lattice lattice_from_string(const std::string& s) {
    for (Lattice l : {Lattice::toda, Lattice::langmuir, Lattice::ablowitz_ladik})
        if (to_string(l) == s) return l;
    throw validation_error("unknown lattice '" + s + "'");
}

inline int lattice_buffer(Lattice l) {
    switch (l) {
    case Lattice::toda: return 40;
    case Lattice::langmuir: return 24;
    case Lattice::ablowitz_ladik: return 16;
    }
    return 0;
}

inline Weight deformed_weight(const Weight& base, Lattice l, double s) {
    switch (l) {
    case Lattice::toda:
        if (base.family == Family::hermite) return Weight::hermite(base.param("s"), base.param("c") + s);
        if (base.family == Family::laguerre) {
            double c = base.param("c") - s;
            if (!(c > 0)) throw divergent_moment("laguerre", "toda flow reached decay rate <= 0");
            return Weight::laguerre(base.param("alpha"), c);
        }
        break;
    case Lattice::langmuir:
        if (base.family == Family::freud) return Weight::freud(base.param("t") + s);
        if (base.family == Family::hermite && base.param("c") == 0) {
            double sc = base.param("s") - s;
            if (!(sc > 0)) throw divergent_moment("hermite", "langmuir flow reached scale <= 0");
            return Weight::hermite(sc, 0.0);
        }
        break;
    case Lattice::ablowitz_ladik:
        if (base.family == Family::opuc_bessel) return Weight::opuc_bessel(base.param("t") + s);
        break;
    }
    throw validation_error("lattice " + to_string(l) + " is not registered for family " + base.name());
}

struct LatticeState {
    double t = 0;
    std::vector<double> a_sq;  // a_sq[0] = 0 .. a_N^2 (toda, langmuir)
    std::vector<double> b;     // b_0..b_{N-1} (toda, langmuir)
    std::vector<double> alpha; // alpha_0..alpha_N (ablowitz_ladik)

    // Toda auxiliary C_n = -a_n^2
    double C(int n) const { return -a_sq.at(n); }
};

namespace detail {

template <class Real>
LatticeState lattice_state(const Weight& base, Lattice l, double s, int count) {
    LatticeState st;
    st.t = s;
    Weight w = deformed_weight(base, l, s);
    if (l == Lattice::ablowitz_ladik) {
        for (const auto& a : verblunsky_sequence<Real>(w.param("t"), count).alphas) st.alpha.push_back(to_double(a));
        return st;
    }
    auto rec = recurrence_for<Real>(w, count);
    for (const auto& v : rec.a_sq) st.a_sq.push_back(to_double(v));
    for (const auto& v : rec.b) st.b.push_back(to_double(v));
    return st;
}

// Lattice right-hand side on a truncated chain, zero closure past the end.
inline LatticeState lattice_rhs(Lattice l, const LatticeState& y) {
    LatticeState d = y;
    auto A = [&](int n) { return n <= 0 || n >= static_cast<int>(y.a_sq.size()) ? 0.0 : y.a_sq[n]; };
    switch (l) {
    case Lattice::toda: {
        const int M = static_cast<int>(y.b.size());
        for (int n = 0; n < static_cast<int>(y.a_sq.size()); ++n)
            d.a_sq[n] = n == 0 || n >= M ? 0.0 : y.a_sq[n] * (y.b[n] - y.b[n - 1]);
        for (int n = 0; n < M; ++n) d.b[n] = (n + 1 < M ? A(n + 1) : 0.0) - A(n);
        break;
    }
    case Lattice::langmuir:
        for (int n = 0; n < static_cast<int>(y.a_sq.size()); ++n) d.a_sq[n] = n == 0 ? 0.0 : y.a_sq[n] * (A(n + 1) - A(n - 1));
        for (auto& v : d.b) v = 0;
        break;
    case Lattice::ablowitz_ladik: {
        const int M = static_cast<int>(y.alpha.size());
        auto al = [&](int n) { return n < 0 ? -1.0 : (n >= M ? 0.0 : y.alpha[n]); };
        for (int n = 0; n < M; ++n) d.alpha[n] = 0.5 * (1 - al(n) * al(n)) * (al(n + 1) - al(n - 1));
        break;
    }
    }
    return d;
}

inline LatticeState axpy(const LatticeState& y, double h, const LatticeState& k) {
    LatticeState r = y;
    for (std::size_t i = 0; i < r.a_sq.size(); ++i) r.a_sq[i] += h * k.a_sq[i];
    for (std::size_t i = 0; i < r.b.size(); ++i) r.b[i] += h * k.b[i];
    for (std::size_t i = 0; i < r.alpha.size(); ++i) r.alpha[i] += h * k.alpha[i];
    return r;
}

inline double max_abs(const LatticeState& y) {
    double m = 1;
    for (double v : y.a_sq) m = std::max(m, std::abs(v));
    for (double v : y.b) m = std::max(m, std::abs(v));
    for (double v : y.alpha) m = std::max(m, std::abs(v));
    return m;
}

inline LatticeState rk4_step(Lattice l, const LatticeState& y, double h) {
    LatticeState k1 = lattice_rhs(l, y);
    LatticeState k2 = lattice_rhs(l, axpy(y, h / 2, k1));
    LatticeState k3 = lattice_rhs(l, axpy(y, h / 2, k2));
    LatticeState k4 = lattice_rhs(l, axpy(y, h, k3));
    LatticeState r = y;
    auto comb = [h](std::vector<double>& out, const std::vector<double>& a, const std::vector<double>& b,
                    const std::vector<double>& c, const std::vector<double>& e) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += h / 6 * (a[i] + 2 * b[i] + 2 * c[i] + e[i]);
    };
    comb(r.a_sq, k1.a_sq, k2.a_sq, k3.a_sq, k4.a_sq);
    comb(r.b, k1.b, k2.b, k3.b, k4.b);
    comb(r.alpha, k1.alpha, k2.alpha, k3.alpha, k4.alpha);
    r.t = y.t + h;
    return r;
}

// Largest lattice-equation residual on route (i) data. Derivatives use the
// 5-point central stencil on the states at s - 2h, s - h, s + h, s + 2h
// (st[0..3]); the 3-point one leaves h^2 f'''/6 ~ 1e-5 on Laguerre Toda.
inline double lattice_fd_residual(Lattice l, const std::vector<LatticeState>& st, const LatticeState& mid, double h,
                                  int N) {
    double r = 0;
    auto D = [&](std::vector<double> LatticeState::*f, int n) {
        return ((st[0].*f)[n] - 8 * (st[1].*f)[n] + 8 * (st[2].*f)[n] - (st[3].*f)[n]) / (12 * h);
    };
    switch (l) {
    case Lattice::toda:
        for (int n = 1; n < N; ++n)
            r = std::max(r, std::abs(D(&LatticeState::a_sq, n) - mid.a_sq[n] * (mid.b[n] - mid.b[n - 1])));
        for (int n = 0; n < N; ++n)
            r = std::max(r, std::abs(D(&LatticeState::b, n) - (mid.a_sq[n + 1] - mid.a_sq[n])));
        break;
    case Lattice::langmuir:
        for (int n = 1; n < N; ++n)
            r = std::max(r, std::abs(D(&LatticeState::a_sq, n) - mid.a_sq[n] * (mid.a_sq[n + 1] - mid.a_sq[n - 1])));
        break;
    case Lattice::ablowitz_ladik:
        for (int n = 0; n < N; ++n) {
            double am = n == 0 ? -1.0 : mid.alpha[n - 1];
            double a = mid.alpha[n];
            r = std::max(r, std::abs(2 * D(&LatticeState::alpha, n) - (1 - a * a) * (mid.alpha[n + 1] - am)));
        }
        break;
    }
    return r;
}

inline LatticeState truncate_state(const LatticeState& s, int N) {
    LatticeState r;
    r.t = s.t;
    if (!s.a_sq.empty()) r.a_sq.assign(s.a_sq.begin(), s.a_sq.begin() + std::min<std::size_t>(N + 1, s.a_sq.size()));
    if (!s.b.empty()) r.b.assign(s.b.begin(), s.b.begin() + std::min<std::size_t>(N, s.b.size()));
    if (!s.alpha.empty()) r.alpha.assign(s.alpha.begin(), s.alpha.begin() + std::min<std::size_t>(N + 1, s.alpha.size()));
    return r;
}

} // namespace detail

struct LatticeReport {
    Weight base;
    Lattice lattice = Lattice::toda;
    double t0 = 0, t1 = 0, h = 1e-4;
    int N = 0, steps = 0, buffer = 0;
    long substeps = 0; // total RK4 steps taken by route (ii)
    std::vector<LatticeState> moment_route; // route (i), one state per grid time
    std::vector<LatticeState> ode_route;    // route (ii), same grid
    std::vector<double> fd_residuals;       // per grid time, route (i)
    double max_fd_residual = 0;
    double max_discrepancy = 0;
};

inline LatticeReport lattice_flow(const Weight& base, Lattice l, double t0, double t1, int N, int steps,
                                  double h = 1e-4) {
    require(N >= 2, "lattice_flow: N must be >= 2");
    require(steps >= 1, "lattice_flow: steps must be >= 1");
    require(t1 > t0, "lattice_flow: needs t1 > t0");
    require(h > 0, "lattice_flow: h must be > 0");
    deformed_weight(base, l, t0); // family/lattice compatibility

    LatticeReport rep;
    rep.base = base;
    rep.lattice = l;
    rep.t0 = t0;
    rep.t1 = t1;
    rep.h = h;
    rep.N = N;
    rep.steps = steps;
    rep.buffer = lattice_buffer(l);

    const double dt = (t1 - t0) / steps;
    for (int k = 0; k <= steps; ++k) {
        double s = t0 + k * dt;
        auto mid = detail::lattice_state<real256>(base, l, s, N);
        std::vector<LatticeState> st;
        for (int j : {-2, -1, 1, 2}) st.push_back(detail::lattice_state<real256>(base, l, s + j * h, N));
        double r = detail::lattice_fd_residual(l, st, mid, h, N);
        rep.fd_residuals.push_back(r);
        rep.max_fd_residual = std::max(rep.max_fd_residual, r);
        rep.moment_route.push_back(mid);
    }

    // route (ii): RK4 from t0 on the buffered chain
    LatticeState y = detail::lattice_state<real1024>(base, l, t0, N + rep.buffer);
    if (l == Lattice::ablowitz_ladik) y.alpha.pop_back(); // alpha_M closes to 0
    rep.ode_route.push_back(detail::truncate_state(y, N));
    for (int k = 0; k < steps; ++k) {
        double target = t0 + (k + 1) * dt;
        while (y.t < target - 1e-15 * (1 + std::abs(target))) {
            double hstep = std::min(0.05 / detail::max_abs(y), target - y.t);
            y = detail::rk4_step(l, y, hstep);
            ++rep.substeps;
            for (double v : y.a_sq)
                if (!std::isfinite(v)) throw numerical_error("lattice_flow: RK4 step failed", "step_failure", y.t);
            for (double v : y.alpha)
                if (!std::isfinite(v)) throw numerical_error("lattice_flow: RK4 step failed", "step_failure", y.t);
        }
        y.t = target;
        rep.ode_route.push_back(detail::truncate_state(y, N));
    }

    for (int k = 0; k <= steps; ++k) {
        const auto& a = rep.moment_route[k];
        const auto& o = rep.ode_route[k];
        if (l == Lattice::ablowitz_ladik) {
            for (int n = 0; n <= N; ++n) rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(a.alpha[n] - o.alpha[n]));
            continue;
        }
        for (int n = 1; n <= N; ++n) rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(a.a_sq[n] - o.a_sq[n]));
        if (l == Lattice::toda)
            for (int n = 0; n < N; ++n) rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(a.b[n] - o.b[n]));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Painleve ODE residuals with finite-difference derivatives in the flow variable.

enum class PainleveQuantity { p4_freud, p5_charlier, p5_opuc, p3_chen_its, p5_bce };

inline std::string to_string(PainleveQuantity q) {
    switch (q) {
    case PainleveQuantity::p4_freud: return "p4_freud";
    case PainleveQuantity::p5_charlier: return "p5_charlier";
    case PainleveQuantity::p5_opuc: return "p5_opuc";
    case PainleveQuantity::p3_chen_its: return "p3_chen_its";
    case PainleveQuantity::p5_bce: return "p5_bce";
    }
    return "";
}

inline PainleveQuantity painleve_quantity_from_string(const std::string& s) {
    for (auto q : {PainleveQuantity::p4_freud, PainleveQuantity::p5_charlier, PainleveQuantity::p5_opuc,
                   PainleveQuantity::p3_chen_its, PainleveQuantity::p5_bce})
        if (to_string(q) == s) return q;
    throw validation_error("unknown Painleve quantity '" + s + "'");
}

enum class Stencil { three_point, five_point };

struct OdeResidual {
    PainleveQuantity quantity = PainleveQuantity::p4_freud;
    int n = 0;
    double t = 0, h = 0;
    std::map<std::string, double> params;
    double y = 0, dy = 0, d2y = 0; // transformed variable and its derivatives
    double rhs = 0;
    double residual = 0; // |y'' - rhs|
};

namespace detail {

inline double param_or(const std::map<std::string, double>& p, const char* k, double dflt) {
    auto it = p.find(k);
    return it == p.end() ? dflt : it->second;
}

// r_n from the a_n^2 relation, the root that vanishes at n = 0.
template <class Real>
Real bce_r(int n, const Real& t, const Real& al, const Real& be, const Real& a_sq, const Real& R) {
    if (n == 0) return Real(0);
    Real qa = -t / R, qb = -(2 * n + al + be + t * al / R), qc = n * (n + be) - t * (t + R) * a_sq;
    Real disc = sqrt(qb * qb - 4 * qa * qc);
    return -2 * qc / (qb + (qb >= 0 ? disc : Real(-disc)));
}

} // namespace detail

inline OdeResidual painleve_ode_residual(PainleveQuantity q, int n, double t, double h,
                                         const std::map<std::string, double>& params = {},
                                         Stencil stencil = Stencil::three_point) {
    using R = real256;
    require(h > 0, "painleve_ode_residual: h must be > 0");
    require(n >= (q == PainleveQuantity::p5_opuc || q == PainleveQuantity::p3_chen_its || q == PainleveQuantity::p5_bce ? 0 : 1),
            "painleve_ode_residual: n out of range");
    const double al = detail::param_or(params, "alpha", 0.0);
    const double be = detail::param_or(params, "beta", q == PainleveQuantity::p5_charlier ? 1.0 : 0.0);
    const int reach = stencil == Stencil::three_point ? 1 : 2;
    if (q != PainleveQuantity::p4_freud) {
        require(t != 0, "painleve_ode_residual: t must be nonzero for " + to_string(q));
        require(std::abs(t) > reach * h, "painleve_ode_residual: stencil crosses t = 0");
    }

    auto variable = [&](double s) -> R {
        switch (q) {
        case PainleveQuantity::p4_freud: return recurrence_for<R>(Weight::freud(s), n).a_sq[n];
        case PainleveQuantity::p5_charlier: {
            R x = recurrence_for<R>(Weight::gen_charlier(be, s), n).a_sq[n];
            return 1 - R(s) / x;
        }
        case PainleveQuantity::p5_opuc: return verblunsky_sequence<R>(s, n).alphas[n];
        case PainleveQuantity::p3_chen_its:
            return recurrence_for<R>(Weight::chen_its(al, s), n + 1).b[n] - (2 * n + al + 1);
        case PainleveQuantity::p5_bce: {
            R b = recurrence_for<R>(Weight::bce_jacobi(al, be, s), n + 1).b[n];
            R Rn = (2 * n + 1 + al + be - s - s * b) / 2;
            return 1 + R(s) / Rn;
        }
        }
        return R(0);
    };
    // values that make the right-hand side singular
    auto poles = [&]() -> std::vector<double> {
        switch (q) {
        case PainleveQuantity::p4_freud: return {0.0};
        case PainleveQuantity::p5_charlier:
        case PainleveQuantity::p5_bce: return {0.0, 1.0};
        case PainleveQuantity::p5_opuc: return {-1.0, 1.0};
        case PainleveQuantity::p3_chen_its: return {0.0};
        }
        return {};
    }();

    std::vector<R> v;
    for (int j = -reach; j <= reach; ++j) v.push_back(variable(t + j * h));
    for (double p : poles) {
        bool below = false, above = false;
        for (const auto& y : v) {
            if (y == p) below = above = true;
            (y < p ? below : above) = true;
        }
        if (below && above)
            throw numerical_error("painleve_ode_residual: stencil crosses a pole of the transformed variable",
                                  "stencil_pole", p);
    }

    const R H(h);
    R y, y1, y2;
    if (stencil == Stencil::three_point) {
        y = v[1];
        y1 = (v[2] - v[0]) / (2 * H);
        y2 = (v[2] - 2 * v[1] + v[0]) / (H * H);
    } else {
        y = v[2];
        y1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * H);
        y2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * H * H);
    }

    const R T(t);
    R rhs;
    switch (q) {
    case PainleveQuantity::p4_freud:
        rhs = y1 * y1 / (2 * y) + 3 * y * y * y / 2 - T * y * y + y * (R(n) / 4 + T * T / 8) - R(n) * n / (32 * y);
        break;
    case PainleveQuantity::p5_charlier: {
        R bm = R(be) - 1;
        rhs = (1 / (2 * y) + 1 / (y - 1)) * y1 * y1 - y1 / T +
              (1 - y) * (1 - y) / (T * T) * (R(n) * n * y / 2 - bm * bm / (2 * y)) - 2 * y / T;
        break;
    }
    case PainleveQuantity::p5_opuc:
        rhs = -y / (1 - y * y) * y1 * y1 - y1 / T - y * (1 - y * y) + R(n + 1) * (n + 1) / (T * T) * y / (1 - y * y);
        break;
    case PainleveQuantity::p3_chen_its:
        rhs = y1 * y1 / y - y1 / T + (2 * n + al + 1) * y * y / (T * T) + y * y * y / (T * T) + R(al) / T - 1 / y;
        break;
    case PainleveQuantity::p5_bce: {
        R A(al), B(be);
        rhs = (3 * y - 1) / (2 * y * (y - 1)) * y1 * y1 - y1 / T + 2 * (2 * n + 1 + A + B) * y / T -
              2 * y * (y + 1) / (y - 1) + (y - 1) * (y - 1) / (T * T) * (A * A * y / 2 - B * B / (2 * y));
        break;
    }
    }

    OdeResidual r;
    r.quantity = q;
    r.n = n;
    r.t = t;
    r.h = h;
    r.params = params;
    if (q == PainleveQuantity::p5_charlier || q == PainleveQuantity::p5_bce) r.params["beta"] = be;
    if (q == PainleveQuantity::p3_chen_its || q == PainleveQuantity::p5_bce) r.params["alpha"] = al;
    r.y = to_double(y);
    r.dy = to_double(y1);
    r.d2y = to_double(y2);
    r.rhs = to_double(rhs);
    r.residual = to_double(R(abs(y2 - rhs)));
    return r;
}

// ---------------------------------------------------------------------------
// Discrete systems for semiclassical families, checked on moment-built
// recurrence coefficients.

struct SystemEquation {
    std::string name;
    int first_n = 0;
    std::vector<double> residuals; // residuals[k] belongs to n = first_n + k
};

struct SystemResidual {
    Weight family;
    int N = 0;
    std::vector<SystemEquation> equations;
    double max_residual = 0;
};

inline SystemResidual semiclassical_system_residual(const Weight& w, int N) {
    require(N >= 2, "semiclassical_system_residual: N must be >= 2");
    using R = real512;
    SystemResidual rep;
    rep.family = w;
    rep.N = N;
    auto add = [&](std::string name, int first, int last, auto&& f) {
        SystemEquation e{std::move(name), first, {}};
        for (int n = first; n <= last; ++n) {
            double v = to_double(R(abs(f(n))));
            e.residuals.push_back(v);
            rep.max_residual = std::max(rep.max_residual, v);
        }
        rep.equations.push_back(std::move(e));
    };

    if (w.family == Family::opuc_bessel) {
        auto seq = verblunsky_sequence<R>(w.param("t"), N);
        auto d = dp2_residual(seq);
        rep.equations.push_back({"dp2", 0, d.residuals});
        rep.max_residual = d.max_residual;
        return rep;
    }

    auto rec = recurrence_for<R>(w, N);
    const auto& A = rec.a_sq; // 0..N
    const auto& b = rec.b;    // 0..N-1
    auto P = [&](const char* k) { return R(w.param(k)); };

    switch (w.family) {
    case Family::freud: {
        R t = P("t");
        add("dp1", 1, N - 1, [&](int n) { return 4 * A[n] * (A[n + 1] + A[n] + A[n - 1] - t / 2) - n; });
        break;
    }
    case Family::gen_charlier: {
        R be = P("beta"), c = P("c");
        add("b_n + b_{n-1} - n + beta = c n / a_n^2", 1, N - 1,
            [&](int n) { return b[n] + b[n - 1] - n + be - c * n / A[n]; });
        add("(a_{n+1}^2 - c)(a_n^2 - c) = c (b_n - n)(b_n - n + beta - 1)", 0, N - 1,
            [&](int n) { return (A[n + 1] - c) * (A[n] - c) - c * (b[n] - n) * (b[n] - n + be - 1); });
        break;
    }
    case Family::gen_meixner: {
        R g = P("gamma"), be = P("beta"), a = P("a");
        require(w.param("gamma") != 1, "gen_meixner system: the (u, v) substitution needs gamma != 1");
        auto u = [&](int n) { return (n * a - A[n]) / (g - 1); };
        auto v = [&](int n) { return (n + g - be + a - b[n]) * a / (g - 1); };
        const R k = a * (g - be) / (g - 1);
        add("(u_n + v_n)(u_{n+1} + v_n)", 0, N - 1, [&](int n) {
            return (u(n) + v(n)) * (u(n + 1) + v(n)) - (g - 1) / (a * a) * v(n) * (v(n) - a) * (v(n) - k);
        });
        add("(u_n + v_n)(u_n + v_{n-1})", 1, N - 1, [&](int n) {
            return (u(n) + v(n)) * (u(n) + v(n - 1)) - u(n) / (u(n) - a * n / (g - 1)) * (u(n) + a) * (u(n) + k);
        });
        break;
    }
    case Family::chen_its: {
        R al = P("alpha"), t = P("t");
        require(w.param("t") > 0, "chen_its system: needs t > 0");
        std::vector<R> c(N), x(N), y(N + 1);
        R csum = 0;
        for (int n = 0; n < N; ++n) {
            c[n] = b[n] - (2 * n + al + 1);
            x[n] = 1 / c[n];
        }
        for (int n = 0; n <= N; ++n) {
            y[n] = A[n] - n * (n + al) - csum;
            if (n < N) csum += c[n];
        }
        add("x_n + x_{n-1}", 1, N - 1,
            [&](int n) { return x[n] + x[n - 1] - (n * t - (2 * n + al) * y[n]) / (y[n] * (y[n] - t)); });
        add("y_n + y_{n+1}", 0, N - 1,
            [&](int n) { return y[n] + y[n + 1] - (t - (2 * n + al + 1) / x[n] - 1 / (x[n] * x[n])); });
        break;
    }
    case Family::bce_jacobi: {
        R al = P("alpha"), be = P("beta"), t = P("t");
        require(w.param("t") != 0, "bce_jacobi system: needs t != 0");
        std::vector<R> Rn(N), r(N);
        for (int n = 0; n < N; ++n) {
            Rn[n] = (2 * n + 1 + al + be - t - t * b[n]) / 2;
            r[n] = detail::bce_r(n, t, al, be, A[n], Rn[n]);
        }
        add("2t(r_{n+1} + r_n)", 0, N - 2, [&](int n) {
            return 2 * t * (r[n + 1] + r[n]) - (4 * Rn[n] * Rn[n] - 2 * Rn[n] * (2 * n + 1 + al + be - 2 * t) - 2 * al * t);
        });
        add("n(n + beta) - (2n + alpha + beta) r_n", 1, N - 1, [&](int n) {
            return n * (n + be) - (2 * n + al + be) * r[n] -
                   r[n] * (r[n] + al) * (t * t / (Rn[n] * Rn[n - 1]) + t / Rn[n] + t / Rn[n - 1]);
        });
        break;
    }
    default: throw validation_error("no discrete system registered for family " + w.name());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Singularity confinement of d-PI at t = 0.

struct SingularityProbe {
    int n = 0;
    double eps = 0, x_prev = 0;
    std::vector<double> x; // x_{n+1}, x_{n+2}, x_{n+3}, x_{n+4}
    double printed_r3 = 0, printed_r4 = 0; // x_{n+3} + eps, x_{n+4} - p - (2 - 8p^2) eps / n
    double exact_r3 = 0, exact_r4 = 0;     // against the full first-order series
    double leading_rel_error = 0;          // |x_{n+1} / (n / (4 eps)) - 1|
};

inline SingularityProbe singularity_probe(int n, double eps, double x_prev) {
    require(n >= 1, "singularity_probe: n must be >= 1");
    if (eps == 0) throw numerical_error("singularity_probe: x_n = 0 divides by zero in the next step", "division_by_zero");
    require(std::abs(eps) >= 1e-10 && std::abs(eps) <= 1e-2, "singularity_probe: eps must lie in [1e-10, 1e-2]");
    using R = real256;
    const R e(eps), p(x_prev);
    std::vector<R> x{p, e}; // x[0] = x_{n-1}, x[1] = x_n
    for (int k = 0; k < 4; ++k) {
        const int idx = n + k;
        const R& cur = x[k + 1];
        if (cur == 0) throw numerical_error("singularity_probe: exact zero iterate", "division_by_zero", 0, idx);
        R nxt = R(idx) / (4 * cur) - cur - x[k];
        if (!isfinite(nxt)) throw numerical_error("singularity_probe: overflow", "overflow", 0, idx + 1);
        x.push_back(nxt);
    }
    SingularityProbe s;
    s.n = n;
    s.eps = eps;
    s.x_prev = x_prev;
    for (int k = 2; k < 6; ++k) s.x.push_back(to_double(x[k]));
    const R N(n);
    R c1 = 2 * (N * N * N - 4 * N * N * p * p + 6 * N * N - 6 * N * p * p + 13 * N + 12) / (N * (N + 3) * (N + 3));
    s.printed_r3 = to_double(R(x[4] + e));
    s.printed_r4 = to_double(R(x[5] - p - (2 - 8 * p * p) * e / N));
    s.exact_r3 = to_double(R(x[4] + (N + 3) * e / N));
    s.exact_r4 = to_double(R(x[5] - N * p / (N + 3) - c1 * e));
    s.leading_rel_error = to_double(R(abs(x[2] / (N / (4 * e)) - 1)));
    return s;
}

struct SingularitySlopes {
    std::vector<SingularityProbe> probes;
    // log|r(eps_k)/r(eps_{k+1})| / log(eps_k/eps_{k+1}) for consecutive eps
    std::vector<double> exact_slope3, exact_slope4, printed_slope3, printed_slope4;
};

inline SingularitySlopes singularity_slopes(int n, double x_prev, const std::vector<double>& eps) {
    require(eps.size() >= 2, "singularity_slopes: needs at least two eps values");
    SingularitySlopes s;
    for (double e : eps) s.probes.push_back(singularity_probe(n, e, x_prev));
    auto slope = [](double r0, double r1, double e0, double e1) {
        return std::log(std::abs(r0 / r1)) / std::log(std::abs(e0 / e1));
    };
    for (std::size_t k = 0; k + 1 < eps.size(); ++k) {
        const auto &a = s.probes[k], &b = s.probes[k + 1];
        s.exact_slope3.push_back(slope(a.exact_r3, b.exact_r3, a.eps, b.eps));
        s.exact_slope4.push_back(slope(a.exact_r4, b.exact_r4, a.eps, b.eps));
        s.printed_slope3.push_back(slope(a.printed_r3, b.printed_r3, a.eps, b.eps));
        s.printed_slope4.push_back(slope(a.printed_r4, b.printed_r4, a.eps, b.eps));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Wronskian route: moments of a Toda deformation are t-derivatives of m0(t).

enum class WronskianBase {
    gaussian, // e^{-x^2 + t x}, m0 = sqrt(pi) e^{t^2/4}
    freud,    // y^{-1/2} e^{-y^2 + t y} on y > 0 (y = x^2 of the Freud weight), m0 = parabolic cylinder seed
};

inline std::string to_string(WronskianBase b) { return b == WronskianBase::gaussian ? "gaussian" : "freud"; }

inline WronskianBase wronskian_base_from_string(const std::string& s) {
    if (s == "gaussian" || s == "hermite") return WronskianBase::gaussian;
    if (s == "freud") return WronskianBase::freud;
    throw validation_error("unknown Wronskian base '" + s + "' (gaussian, freud)");
}

template <class Real>
Real wronskian_seed(WronskianBase b, const Real& t) {
    if (b == WronskianBase::gaussian) return sqrt(pi<Real>()) * exp(t * t / 4);
    return freud_m0_closed_form<Real>(t);
}

// d^k m0 / dt^k for k = 0..K from a degree-2J interpolant on t + j h, |j| <= J.
template <class Real>
std::vector<Real> seed_derivatives(WronskianBase b, double t, int K, double h) {
    const int J = K + 10, P = 2 * J + 1;
    Matrix<Real> V(P, P);
    std::vector<Real> f(P);
    for (int i = 0; i < P; ++i) {
        Real j(i - J), pw = 1;
        for (int k = 0; k < P; ++k) {
            V(i, k) = pw;
            pw *= j;
        }
        f[i] = wronskian_seed<Real>(b, Real(t) + j * Real(h));
    }
    auto c = solve_full_pivot(V, f).x;
    std::vector<Real> d(K + 1);
    Real hk = 1;
    for (int k = 0; k <= K; ++k) {
        d[k] = factorial<Real>(k) * c[k] / hk;
        hk *= Real(h);
    }
    return d;
}

struct WronskianResult {
    WronskianBase base = WronskianBase::gaussian;
    double t = 0, h = 0;
    int n = 0;
    std::vector<double> D; // D_0..D_{n+1}
    double a_sq = 0, b = 0;               // Wronskian route (a_0^2 = 0 by convention)
    double moment_a_sq = 0, moment_b = 0; // moment route
    double discrepancy = 0;
};

template <class Real = real128>
WronskianResult wronskian_identities(WronskianBase base, double t, int n, double h = 0.05) {
    require(n >= 0, "wronskian_identities: n must be >= 0");
    require(h > 0, "wronskian_identities: h must be > 0");
    auto m = seed_derivatives<Real>(base, t, 2 * n + 1, h);
    // D_k and D_k^* (last column shifted up one order)
    auto hankel = [&](int k, bool star) {
        if (k == 0) return star ? Real(0) : Real(1);
        Matrix<Real> H(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) H(i, j) = m[i + j + (star && j == k - 1 ? 1 : 0)];
        return lu_det(H);
    };
    std::vector<Real> D, Ds;
    for (int k = 0; k <= n + 1; ++k) {
        D.push_back(hankel(k, false));
        Ds.push_back(hankel(k, true));
    }
    WronskianResult r;
    r.base = base;
    r.t = t;
    r.h = h;
    r.n = n;
    for (const auto& v : D) r.D.push_back(to_double(v));
    const Real wa = n >= 1 ? Real(D[n + 1] * D[n - 1] / (D[n] * D[n])) : Real(0);
    const Real wb = Ds[n + 1] / D[n + 1] - Ds[n] / D[n];
    r.a_sq = to_double(wa);
    r.b = to_double(wb);

    RecurrenceCoefficients<Real> rec;
    if (base == WronskianBase::gaussian) {
        rec = recurrence_for<Real>(Weight::hermite(1.0, t), n + 1);
    } else {
        auto fm = compute_moments<Real>(Weight::freud(t), 4 * n + 5);
        MomentSequence<Real> ym;
        ym.weight = Weight::freud(t);
        for (int k = 0; k <= 2 * n + 2; ++k) ym.values.push_back(fm[2 * k]);
        rec = recurrence_from_moments(ym, n + 1);
    }
    const Real ma = n >= 1 ? rec.a_sq[n] : Real(0);
    r.moment_a_sq = to_double(ma);
    r.moment_b = to_double(rec.b[n]);
    // at working precision, before rounding to double
    r.discrepancy = std::max(to_double(Real(abs(wa - ma))), to_double(Real(abs(wb - rec.b[n]))));
    return r;
}

} // namespace opx
