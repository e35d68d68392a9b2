#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "opx/mop/families.hpp"
#include "opx/mop/mop.hpp"
#include "opx/opcore/kernel.hpp"
#include "oracles.hpp"

using namespace opx;
using R = real256;

namespace {

const double kPi = 3.14159265358979323846;

std::vector<MultiIndex> indices_up_to(int total, int r = 2) {
    std::vector<MultiIndex> out;
    if (r == 1) {
        for (int a = 0; a <= total; ++a) out.push_back(MultiIndex{a});
        return out;
    }
    for (int a = 0; a <= total; ++a)
        for (int b = 0; a + b <= total; ++b) out.push_back(MultiIndex{a, b});
    return out;
}

double rel_coeff_diff(const Polynomial<R>& p, const Polynomial<R>& q) {
    R worst = 0, scale = std::max(max_abs_coeff(p), max_abs_coeff(q));
    const std::size_t n = std::max(p.c.size(), q.c.size());
    for (std::size_t i = 0; i < n; ++i) worst = std::max<R>(worst, abs(p.coeff(i) - q.coeff(i)));
    return to_double(worst / scale);
}

// |int x^k P dmu_j| against the size of the terms that cancel in it
double orthogonality_residual(const MOPSystem<R>& s, const MultiIndex& n, const Polynomial<R>& P) {
    double worst = 0;
    for (int j = 0; j < s.r(); ++j)
        for (int k = 0; k < n[j]; ++k) {
            R scale = 0;
            for (std::size_t i = 0; i < P.c.size(); ++i) scale += abs(P.c[i] * s.m(j, k + static_cast<int>(i)));
            worst = std::max(worst, to_double(abs(moment_functional(s, j, P, k)) / scale));
        }
    return worst;
}

int sign_changes(const std::function<double(double)>& f, double a, double b, int grid = 20000) {
    int changes = 0;
    double prev = 0;
    for (int i = 0; i <= grid; ++i) {
        double v = f(a + (b - a) * i / grid);
        if (v == 0) continue;
        if (prev != 0 && (v > 0) != (prev > 0)) ++changes;
        prev = v;
    }
    return changes;
}

MopFamily mherm() { return MopFamily::hermite({-1.0, 1.0}); }
MopFamily mlag1() { return MopFamily::laguerre1({0.3, 0.8}); }
MopFamily mlag2() { return MopFamily::laguerre2(0.5, {1.0, 2.0}); }
MopFamily jpin() { return MopFamily::jacobi_pineiro({0.2, 0.7}, 0.5); }

} // namespace

TEST(MultiIndex, ArithmeticAndPaths) {
    MultiIndex n{2, 1};
    EXPECT_EQ(n.total(), 3);
    EXPECT_EQ(n.plus(1), (MultiIndex{2, 2}));
    EXPECT_EQ(n.minus(0), (MultiIndex{1, 1}));
    EXPECT_THROW(MultiIndex({0, 1}).minus(0), validation_error);
    EXPECT_THROW(MultiIndex(std::vector<int>{}), validation_error);
    EXPECT_EQ(all_paths(MultiIndex{2, 2}).size(), 6u);
    auto p = stepline_path(MultiIndex{2, 1});
    EXPECT_EQ(p.size(), 3u);
}

TEST(Normality, Examples) {
    auto g = make_system<R>({Weight::hermite()}, SystemClass::generic, 10);
    EXPECT_NEAR(to_double(normality_det(g, MultiIndex{2})), kPi / 2, 1e-14);
    auto mh = make_family_system<R>(mherm(), 10);
    EXPECT_GT(abs(normality_det(mh, MultiIndex{1, 1})), R(1e-3));
    auto twin = make_system<R>({Weight::hermite(), Weight::hermite()}, SystemClass::generic, 10);
    EXPECT_LT(abs(normality_det(twin, MultiIndex{1, 1})), R(1e-60));
    EXPECT_THROW(solve_type_ii(twin, MultiIndex{1, 1}), numerical_error);
    EXPECT_THROW(solve_type_i(twin, MultiIndex{1, 1}), numerical_error);
}

TEST(Normality, InsufficientMomentsRejected) {
    auto g = make_system<R>({Weight::hermite()}, SystemClass::generic, 2);
    EXPECT_THROW(solve_type_ii(g, MultiIndex{6}), validation_error);
}

TEST(Normality, AngelescoSupportsMustBeDisjoint) {
    EXPECT_THROW(make_system<R>({Weight::jacobi(0, 0), Weight::jacobi01(0, 0)}, SystemClass::angelesco, 4),
                 validation_error);
}

TEST(TypeII, Examples) {
    auto mh = make_system<R>({Weight::hermite(1, 0.4), Weight::hermite(1, -1.3)}, SystemClass::at_system, 10);
    auto p = solve_type_ii(mh, MultiIndex{1, 0}).p;
    EXPECT_NEAR(to_double(p.coeff(0)), -0.2, 1e-15);
    EXPECT_EQ(p.coeff(1), R(1));
    auto one = solve_type_ii(mh, MultiIndex{0, 0}).p;
    EXPECT_EQ(one.degree(), 0);
    EXPECT_EQ(one.coeff(0), R(1));
    auto lag = make_system<R>({Weight::laguerre(0.0)}, SystemClass::generic, 10);
    auto l2 = solve_type_ii(lag, MultiIndex{2}).p;
    EXPECT_NEAR(to_double(l2.coeff(0)), 2, 1e-15);
    EXPECT_NEAR(to_double(l2.coeff(1)), -4, 1e-15);
    EXPECT_EQ(l2.coeff(2), R(1));
}

TEST(TypeII, MonicAndOrthogonal) {
    for (const auto& f : {mherm(), mlag1(), mlag2(), jpin()}) {
        auto s = make_family_system<R>(f, 16);
        for (const auto& n : indices_up_to(6)) {
            auto P = solve_type_ii(s, n);
            EXPECT_EQ(P.p.degree(), n.total());
            EXPECT_EQ(P.p.leading(), R(1));
            EXPECT_LT(orthogonality_residual(s, n, P.p), 1e-12) << n.str();
        }
    }
}

TEST(TypeI, Examples) {
    auto g = make_system<R>({Weight::hermite()}, SystemClass::generic, 6);
    auto q = solve_type_i(g, MultiIndex{1});
    EXPECT_NEAR(to_double(q.A[0].coeff(0)), 1 / std::sqrt(kPi), 1e-16);
    EXPECT_THROW(solve_type_i(g, MultiIndex{0}), validation_error);
}

TEST(TypeI, ConditionsAndNormalization) {
    for (const auto& f : {mherm(), mlag2(), jpin()}) {
        auto s = make_family_system<R>(f, 16);
        for (const auto& n : indices_up_to(6)) {
            if (n.total() == 0) continue;
            auto Q = solve_type_i(s, n);
            for (int j = 0; j < 2; ++j) EXPECT_LE(Q.A[j].degree(), std::max(0, n[j] - 1));
            const int N = n.total();
            for (int k = 0; k < N; ++k) {
                R v = 0;
                for (int j = 0; j < 2; ++j)
                    if (n[j] > 0) v += moment_functional(s, j, Q.A[j], k);
                EXPECT_NEAR(to_double(v), k == N - 1 ? 1.0 : 0.0, 1e-12) << n.str() << " k=" << k;
            }
        }
    }
}

TEST(Biorthogonality, QuadratureTable) {
    auto s = make_family_system<R>(mherm(), 16);
    auto idx = indices_up_to(4);
    std::map<MultiIndex, Polynomial<R>> P;
    std::map<MultiIndex, TypeIVector<R>> Q;
    for (const auto& n : idx) {
        P[n] = solve_type_ii(s, n).p;
        if (n.total() >= 1) Q[n] = solve_type_i(s, n);
    }
    int checked = 0;
    for (const auto& n : idx)
        for (const auto& m : idx) {
            if (m.total() == 0) continue;
            double expect;
            if (m.leq(n) || n.total() <= m.total() - 2) expect = 0;
            else if (n.total() == m.total() - 1) expect = 1;
            else continue;
            const auto& p = P[n];
            const auto& q = Q[m];
            // the weights are below 1e-50 outside [-12, 12]; unit panels keep tanh-sinh from stopping early
            double v = 0;
            for (int a = -12; a < 12; ++a)
                v += oracle::quad([&](double x) { return to_double(p(R(x))) * type_i_value(s, q, x); }, a, a + 1);
            EXPECT_NEAR(v, expect, 1e-9) << "P" << n.str() << " Q" << m.str();
            EXPECT_NEAR(to_double(pairing(s, p, q)), expect, 1e-15) << "P" << n.str() << " Q" << m.str();
            ++checked;
        }
    EXPECT_GT(checked, 100);
}

TEST(Nnrr, MultipleHermiteConstants) {
    auto f = mherm();
    auto s = make_family_system<R>(f, 16);
    for (const auto& n : indices_up_to(5)) {
        auto c = nnrr_coefficients(s, n);
        for (int j = 0; j < 2; ++j) {
            EXPECT_NEAR(to_double(c.b[j]), f.c[j] / 2, 1e-15) << n.str();
            EXPECT_NEAR(to_double(c.a[j]), n[j] / 2.0, 1e-15) << n.str();
        }
        EXPECT_LT(to_double(nnrr_identity_residual(s, c)), 1e-10);
    }
}

TEST(Nnrr, ClosedFormsMatchMomentSolves) {
    for (const auto& f : {mlag1(), mlag2()}) {
        auto s = make_family_system<R>(f, 18);
        for (const auto& n : indices_up_to(5)) {
            auto c = nnrr_coefficients(s, n);
            auto e = family_nnrr<R>(f, n);
            for (int j = 0; j < 2; ++j) {
                EXPECT_NEAR(to_double(c.b[j]), to_double(e.b[j]), 1e-10 * to_double(1 + abs(e.b[j]))) << n.str();
                EXPECT_NEAR(to_double(c.a[j]), to_double(e.a[j]), 1e-10 * to_double(1 + abs(e.a[j]))) << n.str();
                if (n[j] >= 1 && f.kind == MopFamilyKind::multiple_laguerre2) EXPECT_GT(c.a[j], 0) << n.str();
            }
            EXPECT_LT(to_double(nnrr_identity_residual(s, c)), 1e-10);
        }
    }
}

TEST(Nnrr, LaguerreFirstKindDiagonal) {
    auto f = mlag1();
    auto s = make_family_system<R>(f, 10);
    auto c = nnrr_coefficients(s, MultiIndex{1, 0});
    // |n| + n_1 + alpha_1 + 1 and |n| + n_2 + alpha_2 + 1
    EXPECT_NEAR(to_double(c.b[0]), 1 + 1 + 0.3 + 1, 1e-15);
    EXPECT_NEAR(to_double(c.b[1]), 1 + 0 + 0.8 + 1, 1e-15);
}

TEST(Nnrr, JacobiPineiroIdentity) {
    auto s = make_family_system<R>(jpin(), 16);
    for (const auto& n : indices_up_to(5))
        EXPECT_LT(to_double(nnrr_identity_residual(s, nnrr_coefficients(s, n))), 1e-10) << n.str();
}

TEST(Nnrr, AngelescoPositivity) {
    auto s = angelesco_fixture<R>(16);
    for (const auto& n : indices_up_to(5)) {
        auto c = nnrr_coefficients(s, n);
        for (int j = 0; j < 2; ++j)
            if (n[j] >= 1) EXPECT_GT(c.a[j], 0) << n.str();
        EXPECT_LT(to_double(nnrr_identity_residual(s, c)), 1e-10) << n.str();
    }
}

// a_{n,j} is not sign-definite for AT families: the Laguerre I closed form at
// n = (1,1) has a_{n,1} = n_1 (n_1 + a_1)(n_1 + a_1 - a_2)/(a_1 - a_2) < 0 for a_2 - a_1 in (0, 1)
TEST(Nnrr, LaguerreFirstKindCanBeNegative) {
    auto f = mlag1();
    auto s = make_family_system<R>(f, 10);
    auto c = nnrr_coefficients(s, MultiIndex{1, 1});
    EXPECT_NEAR(to_double(c.a[0]), 1.3 * 0.5 / -0.5, 1e-15);
    EXPECT_LT(c.a[0], 0);
}

TEST(Compatibility, ClosedFormFields) {
    auto h = compatibility_residual(closed_form_nnrr_field(mherm()), {3, 3});
    EXPECT_LE(h.max_residual, 1e-14);
    EXPECT_GT(h.checked, 0);
    auto l2 = compatibility_residual(closed_form_nnrr_field(mlag2()), {3, 3});
    EXPECT_LE(l2.max_residual, 1e-12);
    auto l1 = compatibility_residual(closed_form_nnrr_field(mlag1()), {3, 3});
    EXPECT_LE(l1.max_residual, 1e-12);
    auto h3 = compatibility_residual(closed_form_nnrr_field(MopFamily::hermite({-1.0, 0.5, 2.0})), {2, 2, 2});
    EXPECT_LE(h3.max_residual, 1e-14);
}

TEST(Compatibility, NumericAtSystems) {
    auto jp = compatibility_residual(numeric_nnrr_field(make_family_system<R>(jpin(), 16)), {2, 2});
    EXPECT_LE(jp.max_residual, 1e-8);
    auto jp3 = compatibility_residual(numeric_nnrr_field(make_family_system<R>(jpin(), 18)), {3, 3});
    EXPECT_LE(jp3.max_residual, 1e-8);
    auto l1 = compatibility_residual(numeric_nnrr_field(make_family_system<R>(mlag1(), 16)), {2, 2});
    EXPECT_LE(l1.max_residual, 1e-8);
}

TEST(Compatibility, DetectsAPerturbedField) {
    auto good = closed_form_nnrr_field(mherm());
    NNRRField bad = [good](const MultiIndex& n) {
        auto c = good(n);
        if (n == MultiIndex{1, 1}) c.b[0] += 1e-3;
        return c;
    };
    EXPECT_GT(compatibility_residual(bad, {3, 3}).max_residual, 1e-5);
}

TEST(MopKernel, ReducesToScalarKernel) {
    for (const auto& w : {Weight::hermite(), Weight::laguerre(0.5)}) {
        auto s = make_system<R>({w}, SystemClass::generic, 14);
        for (int n = 1; n <= 5; ++n) {
            auto k = make_kernel(w, n, KernelMode::plain);
            std::vector<int> path(n, 0);
            for (auto [x, y] : {std::pair{0.3, 1.1}, std::pair{1.7, 0.2}}) {
                double v = mop_cd_kernel(s, MultiIndex{n}, path, x, y);
                double e = cd_kernel(k, x, y) * density<double>(w, y);
                EXPECT_NEAR(v, e, 1e-12 * (1 + std::abs(e))) << w.name() << " n=" << n;
            }
        }
    }
}

TEST(MopKernel, PathIndependence) {
    auto s = make_family_system<R>(mherm(), 16);
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& n : indices_up_to(4)) {
        if (n.total() == 0) continue;
        double x = u(g), y = u(g);
        auto paths = all_paths(n);
        double ref = mop_cd_kernel(s, n, paths[0], x, y);
        for (const auto& p : paths) EXPECT_NEAR(mop_cd_kernel(s, n, p, x, y), ref, 1e-12) << n.str();
    }
}

TEST(MopKernel, ChristoffelDarbouxClosedForm) {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const auto& f : {mherm(), mlag2()}) {
        auto s = make_family_system<R>(f, 16);
        for (const auto& n : indices_up_to(4)) {
            if (n.total() == 0) continue;
            double x = u(g), y = u(g);
            if (f.kind == MopFamilyKind::multiple_laguerre2) {
                x = std::abs(x) + 0.1;
                y = std::abs(y) + 0.2;
            }
            double lhs = mop_cd_kernel(s, n, stepline_path(n), x, y);
            double rhs = mop_cd_kernel_closed(s, n, x, y);
            EXPECT_NEAR((x - y) * lhs, (x - y) * rhs, 1e-10 * (1 + std::abs((x - y) * lhs))) << n.str();
        }
    }
}

TEST(MopKernel, InvalidPaths) {
    auto s = make_family_system<R>(mherm(), 10);
    EXPECT_THROW(mop_cd_kernel(s, MultiIndex{1, 1}, {0, 0}, 0.1, 0.2), validation_error);
    EXPECT_THROW(mop_cd_kernel(s, MultiIndex{1, 1}, {0}, 0.1, 0.2), validation_error);
    EXPECT_THROW(mop_cd_kernel(s, MultiIndex{1, 1}, {0, 2}, 0.1, 0.2), validation_error);
}

TEST(ClosedForm, MatchesMomentSolves) {
    for (const auto& f : {mherm(), mlag1(), mlag2(), jpin()}) {
        auto s = make_family_system<R>(f, 16);
        for (const auto& n : indices_up_to(6)) {
            auto a = family_closed_form<R>(f, n).p;
            auto b = solve_type_ii(s, n).p;
            EXPECT_LT(rel_coeff_diff(a, b), 1e-10) << static_cast<int>(f.kind) << " " << n.str();
        }
    }
}

TEST(ClosedForm, Examples) {
    auto p = family_closed_form<R>(MopFamily::hermite({0.6, -2.0}), MultiIndex{1, 0}).p;
    EXPECT_NEAR(to_double(p.coeff(0)), -0.3, 1e-15);
    EXPECT_EQ(p.coeff(1), R(1));
    EXPECT_THROW(family_closed_form<R>(MopFamily::laguerre2(0.0, {1.0, 1.0}), MultiIndex{1, 1}), validation_error);
    EXPECT_THROW(family_closed_form<R>(MopFamily::laguerre1({0.5, 1.5}), MultiIndex{1, 1}), validation_error);
    EXPECT_THROW(family_closed_form<R>(MopFamily::jacobi_pineiro({0.5, 2.5}, 0.0), MultiIndex{1, 1}), validation_error);
    const double a = 0.7, b = 1.9;
    auto j = family_closed_form<R>(MopFamily::jacobi_pineiro({a}, b), MultiIndex{1}).p;
    EXPECT_NEAR(to_double(j.coeff(0)), -(a + 1) / (a + b + 2), 1e-15);
    EXPECT_EQ(j.coeff(1), R(1));
}

TEST(ClosedForm, HermiteLoweringOperator) {
    for (const auto& f : {mherm(), MopFamily::hermite({0.3, 1.7})})
        for (const auto& n : indices_up_to(5)) {
            if (n.total() == 0) continue;
            auto d = family_closed_form<R>(f, n).p.derivative();
            Polynomial<R> rhs;
            for (int j = 0; j < 2; ++j)
                if (n[j] > 0) rhs += family_closed_form<R>(f, n.minus(j)).p * R(n[j]);
            EXPECT_LT(rel_coeff_diff(d, rhs), 1e-12) << n.str();
        }
}

TEST(ZeroLocalization, Angelesco) {
    auto s = angelesco_fixture<R>(16);
    for (const auto& n : indices_up_to(6)) {
        auto P = solve_type_ii(s, n).p;
        auto f = [&](double x) { return to_double(P(R(x))); };
        EXPECT_EQ(sign_changes(f, -1, -0.2), n[0]) << n.str();
        EXPECT_EQ(sign_changes(f, 0.2, 1), n[1]) << n.str();
    }
}

TEST(ZeroLocalization, MultipleHermite) {
    auto s = make_family_system<R>(mherm(), 16);
    for (const auto& n : indices_up_to(6)) {
        if (n.total() == 0) continue;
        auto P = solve_type_ii(s, n).p;
        auto Q = solve_type_i(s, n);
        EXPECT_EQ(sign_changes([&](double x) { return to_double(P(R(x))); }, -8, 8), n.total()) << n.str();
        EXPECT_EQ(sign_changes([&](double x) { return type_i_value(s, Q, x); }, -8, 8), n.total() - 1) << n.str();
    }
}

TEST(HermitePade, ScalarGaussianTypeII) {
    auto s = make_system<R>({Weight::hermite()}, SystemClass::generic, 10);
    auto rep = hermite_pade_residual(s, MultiIndex{1}, PadeType::II, {10, 20, 40, 80});
    ASSERT_EQ(rep.slopes.size(), 1u);
    EXPECT_NEAR(rep.slopes[0], -2, 0.2);
    EXPECT_THROW(hermite_pade_residual(s, MultiIndex{0}, PadeType::I, {10, 20}), validation_error);
}

TEST(HermitePade, MultipleHermiteSlopes) {
    auto s = make_family_system<R>(mherm(), 12);
    auto two = hermite_pade_residual(s, MultiIndex{1, 1}, PadeType::II, {10, 20, 40, 80});
    ASSERT_EQ(two.slopes.size(), 2u);
    for (double sl : two.slopes) EXPECT_NEAR(sl, -2, 0.2);
    auto t2 = hermite_pade_residual(s, MultiIndex{2, 1}, PadeType::II, {10, 20, 40, 80});
    EXPECT_LE(t2.slopes[0], -3 + 0.2);
    EXPECT_LE(t2.slopes[1], -2 + 0.2);
    auto one = hermite_pade_residual(s, MultiIndex{2, 1}, PadeType::I, {10, 20, 40, 80});
    ASSERT_EQ(one.slopes.size(), 1u);
    EXPECT_LE(one.slopes[0], -3 + 0.2);
}
