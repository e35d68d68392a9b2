#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <chrono>
#include <cmath>

#include "opx/painleve/painleve.hpp"
#include "oracles.hpp"

using namespace opx;

namespace {

double x1_oracle() { return boost::math::tgamma(0.75) / boost::math::tgamma(0.25); }

template <class F>
void expect_throws_kind(F&& f, const std::string& kind) {
    try {
        f();
        ADD_FAILURE() << "expected numerical_error " << kind;
    } catch (const numerical_error& e) {
        EXPECT_EQ(e.kind(), kind);
    }
}

double h_ratio(PainleveQuantity q, int n, double t, double h, const std::map<std::string, double>& p = {}) {
    double r1 = painleve_ode_residual(q, n, t, h, p).residual;
    double r2 = painleve_ode_residual(q, n, t, h / 2, p).residual;
    return r1 / r2;
}

} // namespace

// ---- d-PI ----

TEST(DP1, FirstValueIsGammaRatio) {
    auto s = dp1_positive_solution(0.0, 10, 1e-12);
    EXPECT_NEAR(s.x[1], x1_oracle(), 1e-8);
    EXPECT_EQ(s.x[0], 0.0);
    EXPECT_EQ(static_cast<int>(s.x.size()), 11);
}

TEST(DP1, DefiningEquationAtOne) {
    auto s = dp1_positive_solution(0.0, 10, 1e-12);
    EXPECT_LT(std::abs(4 * s.x[1] * (s.x[2] + s.x[1] + s.x[0]) - 1), 1e-12);
    EXPECT_LT(s.residual, 1e-12);
}

TEST(DP1, MatchesMomentRecurrence) {
    for (double t : {-1.0, 0.0, 0.5, 1.5, 2.0, 3.0, 5.0}) {
        auto s = dp1_positive_solution(t, 20, 1e-13);
        auto rec = recurrence_for<real512>(Weight::freud(t), 20);
        for (int n = 1; n <= 20; ++n) EXPECT_NEAR(s.x[n], to_double(rec.a_sq[n]), 1e-10) << "t=" << t << " n=" << n;
    }
}

TEST(DP1, PositiveAndConvergedHistory) {
    auto s = dp1_positive_solution(0.5, 200, 1e-12);
    EXPECT_EQ(s.newton_steps, 0);
    for (int n = 1; n <= 200; ++n) EXPECT_GT(s.x[n], 0);
    ASSERT_FALSE(s.history.empty());
    EXPECT_LT(s.history.back(), 1e-12);
    EXPECT_EQ(static_cast<int>(s.history.size()), s.iterations);
}

TEST(DP1, FreudLimit) {
    auto s = dp1_positive_solution(0.0, 2000, 1e-12);
    const double lim = std::pow(12.0, -0.25);
    std::vector<double> err;
    for (int n : {500, 1000, 2000}) err.push_back(std::abs(std::sqrt(s.x[n]) / std::pow(n, 0.25) - lim));
    EXPECT_LT(err[2], 1e-2);
    EXPECT_LT(err[1], err[0]);
    EXPECT_LT(err[2], err[1]);
    EXPECT_NEAR(s.x[2000] / std::sqrt(2000.0 / 12.0), 1.0, 1e-2);
}

// At t = 2 the relaxed sweep stalls and the Newton polish finishes the job.
TEST(DP1, LargeTNeedsNewtonPolish) {
    auto s = dp1_positive_solution(2.0, 200, 1e-12);
    EXPECT_GT(s.newton_steps, 0);
    EXPECT_LT(s.residual, 1e-12);
    for (int n = 1; n <= 200; ++n) EXPECT_GT(s.x[n], 0);
}

TEST(DP1, Preconditions) {
    EXPECT_THROW(dp1_positive_solution(0.0, 3, 1e-12), validation_error);
    EXPECT_THROW(dp1_positive_solution(0.0, 10, 1e-15), validation_error);
    expect_throws_kind([] { dp1_positive_solution(0.0, 10, 1e-12, 3); }, "no_convergence");
}

TEST(DP1, RawForwardMapIsUnstable) {
    auto s = dp1_positive_solution(0.0, 100, 1e-13);
    for (double d : {1e-6, -1e-6}) {
        auto orbit = dp1_raw_orbit(0.0, s.x[1] + d, 50);
        int k = first_nonpositive(orbit);
        EXPECT_GT(k, 0) << "perturbation " << d;
        EXPECT_LE(k, 51);
    }
    for (int n = 1; n <= 100; ++n) EXPECT_GT(s.x[n], 0);
}

// ---- structure relation ----

TEST(StructureRelation, Examples) {
    EXPECT_LT(structure_relation_check(0.0, 3).rows[2].residual, 1e-10);
    EXPECT_LT(structure_relation_check(1.0, 5).rows[4].residual, 1e-9);
    auto r = structure_relation_check(0.3, 2);
    EXPECT_EQ(r.rows[0].C, 0.0);
    EXPECT_LT(r.rows[0].residual, 1e-12);
}

// Integrating by parts against the weight: A_n = n, C_n = 4 a_n^2 a_{n-1}^2 a_{n-2}^2.
TEST(StructureRelation, CoefficientsByParts) {
    for (double t : {0.0, 1.0, -0.7}) {
        auto r = structure_relation_check(t, 8);
        auto rec = recurrence_for<real256>(Weight::freud(t), 9);
        EXPECT_LT(r.max_residual, 1e-9);
        for (const auto& row : r.rows) {
            EXPECT_NEAR(row.A, row.n, 1e-10);
            if (row.n >= 3) {
                double c = 4 * to_double(rec.a_sq[row.n] * rec.a_sq[row.n - 1] * rec.a_sq[row.n - 2]);
                EXPECT_NEAR(row.C, c, 1e-10 * std::max(1.0, c));
            }
        }
    }
}

// ---- OPUC ----

TEST(Verblunsky, FirstCoefficientIsBesselRatio) {
    auto s = verblunsky_sequence(1.0, 5);
    double oracle = boost::math::cyl_bessel_i(1, 1.0) / boost::math::cyl_bessel_i(0, 1.0);
    EXPECT_NEAR(to_double(s.alphas[0]), oracle, 1e-10);
    EXPECT_NEAR(to_double(s.alphas[0]), 0.4463899658965, 1e-12);
    EXPECT_EQ(to_double(s.at(-1)), -1.0);
}

TEST(Verblunsky, SmallT) {
    const double t = 1e-6;
    auto s = verblunsky_sequence(t, 3);
    EXPECT_NEAR(to_double(s.alphas[0]) / (t / 2), 1.0, 1e-9);
}

TEST(Verblunsky, RoutesAgree) {
    for (double t : {0.3, 1.0, -2.0, 5.0}) {
        auto a = verblunsky_sequence(t, 15, VerblunskySource::szego_recurrence);
        auto b = verblunsky_sequence(t, 15, VerblunskySource::moment_determinant);
        EXPECT_LT(a.route_discrepancy, 1e-10);
        for (int n = 0; n <= 15; ++n) {
            EXPECT_LT(to_double(real256(abs(a.alphas[n] - b.alphas[n]))), 1e-10);
            EXPECT_LT(to_double(real256(abs(a.alphas[n]))), 1.0);
        }
    }
    EXPECT_THROW(verblunsky_sequence(0.0, 5), validation_error);
}

// Rotating theta by pi sends t to -t and alpha_n to (-1)^{n+1} alpha_n.
TEST(Verblunsky, ReflectionInT) {
    auto p = verblunsky_sequence(1.3, 12), m = verblunsky_sequence(-1.3, 12);
    for (int n = 0; n <= 12; ++n) {
        double s = n % 2 == 0 ? -1.0 : 1.0;
        EXPECT_NEAR(to_double(m.alphas[n]), s * to_double(p.alphas[n]), 1e-30);
    }
}

TEST(Verblunsky, NegativeForPositiveDp2Parameter) {
    for (double alpha : {0.5, 1.0, 2.0, 4.0}) {
        auto s = verblunsky_sequence(-2.0 / alpha, 15);
        for (int n = 0; n <= 15; ++n) EXPECT_LT(s.alphas[n], 0) << "alpha=" << alpha << " n=" << n;
    }
}

TEST(DP2, Residuals) {
    EXPECT_LT(dp2_residual(verblunsky_sequence(1.0, 15)).max_residual, 1e-8);
    EXPECT_LT(dp2_residual(verblunsky_sequence(2.0, 10)).max_residual, 1e-8);
    EXPECT_LT(dp2_residual(verblunsky_sequence(-3.0, 12, VerblunskySource::moment_determinant)).max_residual, 1e-8);
}

TEST(DP2, ZeroSequenceFlagsTheBoundary) {
    VerblunskySequence<real256> z;
    z.t = 1.0;
    z.alphas.assign(6, real256(0));
    auto r = dp2_residual(z);
    EXPECT_EQ(r.worst_index, 0);
    EXPECT_EQ(r.max_residual, 1.0);
    for (std::size_t n = 1; n < r.residuals.size(); ++n) EXPECT_EQ(r.residuals[n], 0.0);
}

TEST(DP2, Errors) {
    VerblunskySequence<real256> s;
    s.t = 1.0;
    s.alphas = {real256(0.2), real256(1.0), real256(0.1)};
    expect_throws_kind([&] { dp2_residual(s); }, "verblunsky_out_of_disk");
    s.alphas = {real256(0.2), real256(0.1)};
    EXPECT_THROW(dp2_residual(s), validation_error);
}

// ---- lattices ----

TEST(Lattice, FreudLangmuir) {
    auto r = lattice_flow(Weight::freud(0.0), Lattice::langmuir, 0.0, 0.5, 6, 5);
    EXPECT_LT(r.max_fd_residual, 1e-6);
    EXPECT_LT(r.max_discrepancy, 1e-5);
    for (const auto& s : r.moment_route)
        for (double b : s.b) EXPECT_LT(std::abs(b), 1e-30);
    EXPECT_EQ(r.moment_route.size(), 6u);
    EXPECT_EQ(r.ode_route.size(), 6u);
}

TEST(Lattice, HermiteLangmuirClosedForm) {
    // e^{-(1-s) x^2}: a_n^2 = n / (2 (1 - s))
    auto r = lattice_flow(Weight::hermite(1.0, 0.0), Lattice::langmuir, 0.0, 0.4, 5, 4);
    for (const auto& s : r.ode_route)
        for (int n = 1; n <= 5; ++n) EXPECT_NEAR(s.a_sq[n], n / (2 * (1 - s.t)), 1e-8);
    EXPECT_LT(r.max_discrepancy, 1e-8);
}

TEST(Lattice, TodaOnLaguerre) {
    const double al = 0.5;
    auto r = lattice_flow(Weight::laguerre(al, 1.0), Lattice::toda, 0.0, 0.5, 6, 5);
    EXPECT_LT(r.max_fd_residual, 1e-6);
    EXPECT_LT(r.max_discrepancy, 1e-5);
    for (const auto& s : r.moment_route) {
        // x^a e^{-(1-s)x}: b_0 = (a+1)/(1-s), a_1^2 = (a+1)/(1-s)^2 = b_0'
        double c = 1 - s.t;
        EXPECT_NEAR(s.b[0], (al + 1) / c, 1e-12);
        EXPECT_NEAR(s.a_sq[1], (al + 1) / (c * c), 1e-12);
        EXPECT_EQ(s.C(1), -s.a_sq[1]);
    }
}

TEST(Lattice, TodaFirstEquationByDifferences) {
    const double h = 1e-4, t = 0.1;
    auto lo = recurrence_for<real256>(Weight::laguerre(0.5, 1.0 - (t - h)), 2);
    auto hi = recurrence_for<real256>(Weight::laguerre(0.5, 1.0 - (t + h)), 2);
    auto mid = recurrence_for<real256>(Weight::laguerre(0.5, 1.0 - t), 2);
    double db0 = to_double(real256((hi.b[0] - lo.b[0]) / (2 * h)));
    EXPECT_NEAR(db0, to_double(mid.a_sq[1]), 1e-7);
}

TEST(Lattice, TodaOnShiftedGaussian) {
    auto r = lattice_flow(Weight::hermite(1.0, 0.0), Lattice::toda, 0.0, 0.5, 4, 5);
    for (const auto& s : r.ode_route) {
        for (int n = 0; n < 4; ++n) EXPECT_NEAR(s.b[n], s.t / 2, 1e-10);
        for (int n = 1; n <= 4; ++n) EXPECT_NEAR(s.a_sq[n], n / 2.0, 1e-10);
    }
}

TEST(Lattice, AblowitzLadik) {
    auto r = lattice_flow(Weight::opuc_bessel(0.0), Lattice::ablowitz_ladik, 0.5, 1.0, 8, 5);
    EXPECT_LT(r.max_fd_residual, 1e-6);
    EXPECT_LT(r.max_discrepancy, 1e-5);
    EXPECT_EQ(r.moment_route.front().alpha.size(), 9u);
}

TEST(Lattice, SpanAcceptanceRuntime) {
    auto start = std::chrono::steady_clock::now();
    auto r = lattice_flow(Weight::freud(0.0), Lattice::langmuir, 0.0, 0.5, 6, 10);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(r.max_discrepancy, 1e-5);
    EXPECT_LT(secs, 60.0);
}

TEST(Lattice, Validation) {
    EXPECT_THROW(lattice_flow(Weight::freud(0.0), Lattice::toda, 0.0, 0.5, 6, 5), validation_error);
    EXPECT_THROW(lattice_flow(Weight::jacobi(0.0, 0.0), Lattice::langmuir, 0.0, 0.5, 6, 5), validation_error);
    EXPECT_THROW(lattice_flow(Weight::freud(0.0), Lattice::langmuir, 0.5, 0.0, 6, 5), validation_error);
    EXPECT_THROW(lattice_from_string("kdv"), validation_error);
    EXPECT_EQ(lattice_from_string("ablowitz_ladik"), Lattice::ablowitz_ladik);
}

// ---- Painleve ODE residuals ----

TEST(PainleveOde, FreudP4) {
    auto r = painleve_ode_residual(PainleveQuantity::p4_freud, 3, 0.0, 1e-3);
    EXPECT_LT(r.residual, 1e-4);
    for (double t : {0.3, -0.3}) EXPECT_LT(painleve_ode_residual(PainleveQuantity::p4_freud, 1, t, 1e-3).residual, 1e-4);
}

// The coefficient x n/2 in place of x n/4 leaves an O(1) residual.
TEST(PainleveOde, FreudP4WithHalfCoefficientFails) {
    auto r = painleve_ode_residual(PainleveQuantity::p4_freud, 3, 0.0, 1e-3);
    double rhs_half = r.rhs + r.y * 3.0 / 4.0;
    EXPECT_GT(std::abs(r.d2y - rhs_half), 0.1);
}

TEST(PainleveOde, OpucP5) {
    EXPECT_LT(painleve_ode_residual(PainleveQuantity::p5_opuc, 2, 1.0, 1e-3).residual, 1e-4);
    EXPECT_LT(painleve_ode_residual(PainleveQuantity::p5_opuc, 0, -0.8, 1e-3).residual, 1e-4);
}

TEST(PainleveOde, OtherFamilies) {
    EXPECT_LT(painleve_ode_residual(PainleveQuantity::p3_chen_its, 2, 1.0, 1e-3, {{"alpha", 0.5}}).residual, 1e-4);
    EXPECT_LT(painleve_ode_residual(PainleveQuantity::p5_charlier, 2, 0.7, 1e-3, {{"beta", 1.5}}).residual, 1e-4);
    EXPECT_LT(painleve_ode_residual(PainleveQuantity::p5_bce, 2, 1.0, 1e-3, {{"alpha", 0.5}, {"beta", 1.5}}).residual,
              1e-4);
    EXPECT_LT(painleve_ode_residual(PainleveQuantity::p5_bce, 1, 0.3, 1e-3).residual, 1e-4);
}

TEST(PainleveOde, SecondOrderScaling) {
    struct Case {
        PainleveQuantity q;
        int n;
        double t;
        std::map<std::string, double> p;
    };
    std::vector<Case> cases = {
        {PainleveQuantity::p4_freud, 3, 0.0, {}},
        {PainleveQuantity::p4_freud, 2, -0.3, {}},
        {PainleveQuantity::p5_opuc, 2, 1.0, {}},
        {PainleveQuantity::p3_chen_its, 2, 1.0, {{"alpha", 0.5}}},
        {PainleveQuantity::p5_charlier, 2, 0.7, {{"beta", 1.5}}},
        {PainleveQuantity::p5_bce, 2, 1.0, {{"alpha", 0.5}, {"beta", 1.5}}},
    };
    for (const auto& c : cases) {
        double ratio = h_ratio(c.q, c.n, c.t, 1e-3, c.p);
        EXPECT_NEAR(ratio, 4.0, 1.0) << to_string(c.q);
    }
}

TEST(PainleveOde, FivePointStencilIsFourthOrder) {
    auto r3 = painleve_ode_residual(PainleveQuantity::p5_opuc, 2, 1.0, 1e-2);
    auto a = painleve_ode_residual(PainleveQuantity::p5_opuc, 2, 1.0, 1e-2, {}, Stencil::five_point);
    auto b = painleve_ode_residual(PainleveQuantity::p5_opuc, 2, 1.0, 5e-3, {}, Stencil::five_point);
    EXPECT_LT(a.residual, r3.residual / 50);
    EXPECT_GT(a.residual / b.residual, 12.0);
}

TEST(PainleveOde, Validation) {
    EXPECT_THROW(painleve_ode_residual(PainleveQuantity::p5_opuc, 2, 0.0, 1e-3), validation_error);
    EXPECT_THROW(painleve_ode_residual(PainleveQuantity::p4_freud, 0, 0.0, 1e-3), validation_error);
    EXPECT_THROW(painleve_ode_residual(PainleveQuantity::p3_chen_its, 1, 1e-4, 1e-3), validation_error);
    EXPECT_THROW(painleve_quantity_from_string("p6"), validation_error);
}

// ---- discrete systems ----

TEST(SemiclassicalSystem, GeneralizedCharlier) {
    auto r = semiclassical_system_residual(Weight::gen_charlier(1.0, 0.5), 8);
    EXPECT_LT(r.max_residual, 1e-8);
    ASSERT_EQ(r.equations.size(), 2u);
    EXPECT_EQ(r.equations[1].first_n, 0); // uses a_0^2 = 0
    EXPECT_EQ(r.equations[1].residuals.size(), 8u);
}

TEST(SemiclassicalSystem, Bce) {
    EXPECT_LT(semiclassical_system_residual(Weight::bce_jacobi(0.0, 0.0, 0.3), 5).max_residual, 1e-7);
    EXPECT_LT(semiclassical_system_residual(Weight::bce_jacobi(0.5, 1.5, 1.0), 6).max_residual, 1e-7);
}

TEST(SemiclassicalSystem, OtherFamilies) {
    EXPECT_LT(semiclassical_system_residual(Weight::gen_meixner(2.5, 1.5, 0.4), 6).max_residual, 1e-8);
    EXPECT_LT(semiclassical_system_residual(Weight::chen_its(0.5, 1.0), 6).max_residual, 1e-8);
    EXPECT_LT(semiclassical_system_residual(Weight::freud(0.7), 8).max_residual, 1e-8);
    EXPECT_LT(semiclassical_system_residual(Weight::opuc_bessel(1.0), 8).max_residual, 1e-8);
}

TEST(SemiclassicalSystem, PerturbedCoefficientsAreDetected) {
    // the Charlier first equation with a_n^2 shifted by 1e-6 no longer holds
    auto rec = recurrence_for<real256>(Weight::gen_charlier(1.0, 0.5), 6);
    double n = 2, c = 0.5, be = 1.0;
    double a2 = to_double(rec.a_sq[2]) + 1e-6;
    double res = to_double(rec.b[2] + rec.b[1]) - n + be - c * n / a2;
    EXPECT_GT(std::abs(res), 1e-8);
}

TEST(SemiclassicalSystem, Validation) {
    EXPECT_THROW(semiclassical_system_residual(Weight::laguerre(0.0), 5), validation_error);
    EXPECT_THROW(semiclassical_system_residual(Weight::gen_meixner(1.0, 1.5, 0.4), 5), validation_error);
}

// ---- singularity confinement ----

TEST(Singularity, ExactExpansionSlopes) {
    auto s = singularity_slopes(5, 0.7, {1e-3, 5e-4, 2.5e-4});
    for (double v : s.exact_slope3) EXPECT_NEAR(v, 2.0, 0.2);
    for (double v : s.exact_slope4) EXPECT_NEAR(v, 2.0, 0.2);
}

TEST(Singularity, PrintedExpansionIsOnlyLeadingOrderInN) {
    auto s = singularity_slopes(5, 0.7, {1e-3, 5e-4, 2.5e-4});
    for (double v : s.printed_slope3) EXPECT_NEAR(v, 1.0, 0.1);
    for (double v : s.printed_slope4) EXPECT_NEAR(v, 0.0, 0.1);
}

TEST(Singularity, Confinement) {
    auto p = singularity_probe(5, 1e-4, 0.7);
    EXPECT_NEAR(p.x[3], 5 * 0.7 / 8, 1e-3);
    EXPECT_LT(std::abs(p.x[2]), 1e-3);
    auto q = singularity_probe(5, 1e-3, 0.7);
    EXPECT_LT(q.leading_rel_error, 1e-3);
}

TEST(Singularity, MatchesDirectIteration) {
    const int n = 7;
    const double e = 1e-2, p = 0.4;
    std::vector<double> x{p, e};
    for (int k = 0; k < 4; ++k) x.push_back((n + k) / (4 * x[k + 1]) - x[k + 1] - x[k]);
    auto r = singularity_probe(n, e, p);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.x[k], x[k + 2], 1e-9 * std::max(1.0, std::abs(x[k + 2])));
}

TEST(Singularity, Errors) {
    expect_throws_kind([] { singularity_probe(5, 0.0, 0.7); }, "division_by_zero");
    EXPECT_THROW(singularity_probe(5, 1e-12, 0.7), validation_error);
    EXPECT_THROW(singularity_probe(5, 0.1, 0.7), validation_error);
}

// ---- Wronskians ----

TEST(Wronskian, GaussianMeanShift) {
    auto r = wronskian_identities(WronskianBase::gaussian, 0.7, 0);
    EXPECT_NEAR(r.b, 0.35, 1e-10);
    EXPECT_EQ(r.D[0], 1.0);
}

TEST(Wronskian, GaussianMatchesMomentRoute) {
    for (int n = 1; n <= 4; ++n) {
        auto r = wronskian_identities(WronskianBase::gaussian, 0.3, n);
        EXPECT_LT(r.discrepancy, 1e-8) << n;
        EXPECT_NEAR(r.a_sq, n / 2.0, 1e-8);
        EXPECT_NEAR(r.b, 0.15, 1e-8);
    }
}

TEST(Wronskian, FreudMatchesMomentRoute) {
    for (double t : {0.0, 0.2, 1.0})
        for (int n = 0; n <= 4; ++n) EXPECT_LT(wronskian_identities(WronskianBase::freud, t, n).discrepancy, 1e-8) << t << " " << n;
}

// The seed's derivatives are even Freud moments, so the coefficients are those
// of the squared variable: b_n = a_{2n}^2 + a_{2n+1}^2, a_n^2 = a_{2n-1}^2 a_{2n}^2.
TEST(Wronskian, FreudEvenPart) {
    const double t = 0.2;
    auto f = recurrence_for<real256>(Weight::freud(t), 10);
    for (int n = 1; n <= 3; ++n) {
        auto r = wronskian_identities(WronskianBase::freud, t, n);
        EXPECT_NEAR(r.b, to_double(f.a_sq[2 * n] + f.a_sq[2 * n + 1]), 1e-8);
        EXPECT_NEAR(r.a_sq, to_double(f.a_sq[2 * n - 1] * f.a_sq[2 * n]), 1e-8);
    }
}

TEST(Wronskian, ParabolicCylinderSeedMatchesQuadrature) {
    for (double t : {-0.5, 0.0, 0.5, 1.0, 2.0}) {
        double q = oracle::quad([t](double x) { return std::exp(-x * x * x * x + t * x * x); }, -8.0, 8.0);
        double m0 = to_double(freud_m0_closed_form<real256>(real256(t)));
        EXPECT_NEAR(m0 / q, 1.0, 1e-10) << t;
    }
}

TEST(Wronskian, BaseNames) {
    EXPECT_EQ(wronskian_base_from_string("freud"), WronskianBase::freud);
    EXPECT_THROW(wronskian_base_from_string("airy"), validation_error);
}
