#include <gtest/gtest.h>

#include <cmath>

#include "opx/rmt/rmt.hpp"

using namespace opx;

namespace {

// z-scores of every non-leading coefficient against a prediction
std::vector<double> z_scores(const CharPolyEstimate& e, const std::vector<double>& exact) {
    std::vector<double> z;
    for (int j = 0; j < e.degree; ++j) {
        double d = e.coeff_means[j] - exact[j];
        if (e.coeff_stderrs[j] == 0) z.push_back(d == 0 ? 0 : INFINITY);
        else z.push_back(d / e.coeff_stderrs[j]);
    }
    return z;
}

// p(x) = prod (x - r) expanded by hand for two or three roots
std::vector<double> cubic_from_roots(double a, double b, double c) {
    return {-a * b * c, a * b + a * c + b * c, -(a + b + c), 1.0};
}

} // namespace

TEST(Sample, GueOneIsNormalWithVarianceHalf) {
    double s = 0, s2 = 0;
    const int N = 20000;
    for (int i = 0; i < N; ++i) {
        auto m = sample_ensemble(EnsembleSpec::gue(1), 1000 + i).matrix;
        ASSERT_EQ(m.rows(), 1u);
        EXPECT_EQ(m(0, 0).imag(), 0.0);
        s += m(0, 0).real();
        s2 += m(0, 0).real() * m(0, 0).real();
    }
    double mean = s / N, var = s2 / N - mean * mean;
    EXPECT_NEAR(mean, 0, 4 * std::sqrt(0.5 / N));
    // var of the sample variance of a normal: 2 sigma^4 / N
    EXPECT_NEAR(var, 0.5, 4 * std::sqrt(2 * 0.25 / N));
}

TEST(Sample, WishartIsHermitianPsd) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = sample_ensemble(EnsembleSpec::wishart(2, 3), seed);
        ASSERT_EQ(s.matrix.rows(), 2u);
        ASSERT_EQ(s.factor.rows(), 2u);
        ASSERT_EQ(s.factor.cols(), 3u);
        EXPECT_NEAR(std::abs(s.matrix(0, 1) - std::conj(s.matrix(1, 0))), 0, 1e-14);
        for (double l : hermitian_eigenvalues(s.matrix)) EXPECT_GE(l, -1e-12);
    }
}

TEST(Sample, TruncatedUnitarySingularValuesInUnitInterval) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = sample_ensemble(EnsembleSpec::truncated_unitary(3, 2, 1), seed);
        ASSERT_EQ(s.factor.rows(), 3u);
        ASSERT_EQ(s.factor.cols(), 2u);
        for (double l : hermitian_eigenvalues(s.matrix)) {
            EXPECT_GE(l, -1e-12);
            EXPECT_LE(l, 1 + 1e-12);
        }
    }
}

TEST(Sample, HaarColumnsAreOrthonormal) {
    CounterRng g(4, 0);
    auto q = detail::haar_columns(6, 4, g);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            std::complex<double> d = 0;
            for (int i = 0; i < 6; ++i) d += std::conj(q(i, a)) * q(i, b);
            EXPECT_NEAR(std::abs(d - (a == b ? 1.0 : 0.0)), 0, 1e-13);
        }
}

TEST(Sample, InvalidSpecs) {
    EXPECT_THROW(sample_ensemble(EnsembleSpec::wishart(3, 2), 1), validation_error);
    EXPECT_THROW(sample_ensemble(EnsembleSpec::truncated_unitary(2, 3, 1), 1), validation_error);
    EXPECT_THROW(sample_ensemble(EnsembleSpec::truncated_unitary(3, 2, 0), 1), validation_error);
    EXPECT_THROW(sample_ensemble(EnsembleSpec::gue(0), 1), validation_error);
    EXPECT_THROW(sample_ensemble(EnsembleSpec::wigner(2, -1.0), 1), validation_error);
    auto bad = EnsembleSpec::external_source({1.0, 2.0});
    bad.n = 3;
    EXPECT_THROW(sample_ensemble(bad, 1), validation_error);
    EXPECT_THROW(avg_char_poly_mc(EnsembleSpec::gue(2), 999, 1), validation_error);
    EXPECT_THROW(ensemble_kind_from_string("goe"), validation_error);
}

TEST(Exact, Examples) {
    auto w = exact_avg_char_poly(EnsembleSpec::wigner(3, 0.7));
    ASSERT_EQ(w.size(), 4u);
    EXPECT_NEAR(w[0], 0, 1e-15);
    EXPECT_NEAR(w[1], -6 * 0.49, 1e-14);
    EXPECT_NEAR(w[2], 0, 1e-15);
    EXPECT_EQ(w[3], 1.0);
    auto g1 = exact_avg_char_poly(EnsembleSpec::gue(1));
    EXPECT_EQ(g1, (std::vector<double>{0.0, 1.0}));
    // H_3(sqrt(3) x) / (2 sqrt(3))^3 = x^3 - x/2
    auto g3 = exact_avg_char_poly(EnsembleSpec::gue(3));
    EXPECT_NEAR(g3[1], -0.5, 1e-15);
    EXPECT_NEAR(g3[0], 0, 1e-15);
    EXPECT_NEAR(g3[2], 0, 1e-15);
}

TEST(Exact, ExternalSourceSingleEigenvalueIsShiftedHermite) {
    const double c = 0.8;
    auto p = exact_avg_char_poly(EnsembleSpec::external_source({c, c, c}));
    // monic Hermite for e^{-x^2} of degree 3 is y^3 - 3y/2, at y = x - c/2
    const double s = c / 2;
    std::vector<double> e{-s * s * s + 1.5 * s, 3 * s * s - 1.5, -3 * s, 1.0};
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(p[j], e[j], 1e-14);
}

TEST(Exact, TruncatedUnitaryNeedsKAtLeastN) {
    EXPECT_THROW(exact_avg_char_poly(EnsembleSpec::truncated_unitary(3, 2, 1)), validation_error);
    // n = 1: V*V = |u_11|^2 + |u_21|^2 + ... over m of m + k entries: Beta(m, k), mean m/(m+k)
    auto p = exact_avg_char_poly(EnsembleSpec::truncated_unitary(3, 1, 2));
    EXPECT_NEAR(p[0], -3.0 / 5.0, 1e-15);
}

TEST(Exact, WishartConventions) {
    // n = 1: M M* is a sum of m exponentials of mean 2, so E det(x - W) = x - 2m
    auto cg = exact_avg_char_poly(EnsembleSpec::wishart(1, 3), WishartConvention::complex_gaussian);
    EXPECT_NEAR(cg[0], -6.0, 1e-14);
    auto pub = exact_avg_char_poly(EnsembleSpec::wishart(1, 3), WishartConvention::published);
    // alpha = (m - n - 1)/2 = 1/2 with e^{-x/2}: mean 2 (alpha + 1) = 3
    EXPECT_NEAR(pub[0], -3.0, 1e-14);
}

TEST(MonteCarlo, GueTwo) {
    auto e = avg_char_poly_mc(EnsembleSpec::gue(2), 100000, 11);
    EXPECT_EQ(e.coeff_means[2], 1.0);
    EXPECT_NEAR(e.coeff_means[0], -0.25, 4 * e.coeff_stderrs[0]);
    EXPECT_NEAR(e.coeff_means[1], 0.0, 4 * e.coeff_stderrs[1]);
    EXPECT_GT(e.coeff_stderrs[0], 0);
}

TEST(MonteCarlo, WignerTwo) {
    auto e = avg_char_poly_mc(EnsembleSpec::wigner(2, 1.0), 100000, 12);
    EXPECT_NEAR(e.coeff_means[0], -2.0, 4 * e.coeff_stderrs[0]);
    EXPECT_NEAR(e.coeff_means[1], 0.0, 4 * e.coeff_stderrs[1]);
}

TEST(MonteCarlo, GueOne) {
    auto e = avg_char_poly_mc(EnsembleSpec::gue(1), 5000, 13);
    EXPECT_EQ(e.coeff_means[1], 1.0);
    EXPECT_NEAR(e.coeff_means[0], 0.0, 4 * e.coeff_stderrs[0]);
}

TEST(MonteCarlo, WorkerCountDoesNotChangeTheResult) {
    auto a = avg_char_poly_mc(EnsembleSpec::gue(3), 5000, 21, 1);
    auto b = avg_char_poly_mc(EnsembleSpec::gue(3), 5000, 21, 3);
    EXPECT_EQ(a.coeff_means, b.coeff_means);
    EXPECT_EQ(a.coeff_stderrs, b.coeff_stderrs);
}

TEST(MonteCarlo, GueOddCoefficientsVanish) {
    for (int n = 2; n <= 4; ++n) {
        auto e = avg_char_poly_mc(EnsembleSpec::gue(n), 20000, 30 + n);
        for (int j = n - 1; j >= 0; j -= 2) EXPECT_LE(std::abs(e.coeff_means[j]), 4 * e.coeff_stderrs[j]) << n;
    }
}

TEST(MonteCarlo, AgreementAcrossRegisteredSpecs) {
    std::vector<std::pair<EnsembleSpec, WishartConvention>> specs{
        {EnsembleSpec::gue(1), WishartConvention::published},
        {EnsembleSpec::gue(2), WishartConvention::published},
        {EnsembleSpec::gue(3), WishartConvention::published},
        {EnsembleSpec::gue(4), WishartConvention::published},
        {EnsembleSpec::wigner(3, 1.0), WishartConvention::published},
        {EnsembleSpec::wigner(4, 0.6), WishartConvention::published},
        {EnsembleSpec::wishart(2, 3), WishartConvention::complex_gaussian},
        {EnsembleSpec::wishart(3, 5), WishartConvention::complex_gaussian},
        {EnsembleSpec::truncated_unitary(3, 2, 2), WishartConvention::published},
        {EnsembleSpec::truncated_unitary(4, 3, 4), WishartConvention::published},
        {EnsembleSpec::external_source({-1.0, 1.0, 1.0}), WishartConvention::published},
        {EnsembleSpec::external_source({0.5, 0.5}), WishartConvention::published},
    };
    int total = 0, within = 0;
    for (const auto& [s, conv] : specs) {
        auto exact = exact_avg_char_poly(s, conv);
        for (std::uint64_t seed : {101u, 202u}) {
            auto e = avg_char_poly_mc(s, 100000, seed);
            EXPECT_EQ(e.coeff_means[s.n], 1.0);
            for (double z : z_scores(e, exact)) {
                ++total;
                if (std::abs(z) <= 4) ++within;
            }
        }
    }
    EXPECT_GE(within, 0.95 * total) << within << " of " << total;
}

TEST(MonteCarlo, PublishedWishartParameterDisagreesWithSampler) {
    auto s = EnsembleSpec::wishart(2, 4);
    auto e = avg_char_poly_mc(s, 100000, 5);
    auto pub = z_scores(e, exact_avg_char_poly(s, WishartConvention::published));
    auto cg = z_scores(e, exact_avg_char_poly(s, WishartConvention::complex_gaussian));
    double worst_pub = 0;
    for (double z : pub) worst_pub = std::max(worst_pub, std::abs(z));
    EXPECT_GT(worst_pub, 20);
    for (double z : cg) EXPECT_LE(std::abs(z), 4);
}

TEST(MonteCarlo, ExternalSourceDistinctEigenvalues) {
    // distinct source eigenvalues: multiple Hermite with n = (1, 1)
    auto s = EnsembleSpec::external_source({-0.7, 1.2});
    auto exact = exact_avg_char_poly(s);
    // H_{(1,1)} = (x - a/2)(x - b/2) - 1/2 for weights e^{-x^2 + c x}
    EXPECT_NEAR(exact[0], (-0.35) * 0.6 - 0.5, 1e-14);
    EXPECT_NEAR(exact[1], -(-0.35 + 0.6), 1e-14);
    auto e = avg_char_poly_mc(s, 100000, 6);
    for (double z : z_scores(e, exact)) EXPECT_LE(std::abs(z), 4);
}

TEST(Positivity, WishartAndTruncatedEigenvalues) {
    CounterRng g(9, 0);
    for (int i = 0; i < 2000; ++i) {
        for (double l : sample_eigenvalues(EnsembleSpec::wishart(3, 4), g)) EXPECT_GE(l, -1e-12);
        for (double l : sample_eigenvalues(EnsembleSpec::truncated_unitary(4, 3, 2), g)) {
            EXPECT_GE(l, -1e-12);
            EXPECT_LE(l, 1 + 1e-12);
        }
    }
}

TEST(Stats, GueOneMatchesGaussianBins) {
    const long N = 100000;
    HistogramSpec h{-2.5, 2.5, 20};
    auto st = eigenvalue_stats(EnsembleSpec::gue(1), N, h, 17);
    ASSERT_EQ(st.counts.size(), 20u);
    ASSERT_EQ(st.expected.size(), 20u);
    for (int i = 0; i < 20; ++i) {
        // N(0, 1/2): P(a < x < b) = (erf(b) - erf(a)) / 2
        double p = 0.5 * (std::erf(st.edges[i + 1]) - std::erf(st.edges[i]));
        double sd = std::sqrt(N * p * (1 - p));
        EXPECT_NEAR(st.counts[i], N * p, 4 * sd) << i;
        EXPECT_NEAR(st.expected[i], N * p, 1e-6 * N * p + 1e-9) << i;
    }
}

TEST(Stats, GueFourCountsAndBins) {
    const long N = 100000;
    HistogramSpec h{-1.6, 1.6, 32};
    auto st = eigenvalue_stats(EnsembleSpec::gue(4), N, h, 18);
    EXPECT_EQ(st.total_count, 4 * N);
    EXPECT_GE(st.within_5sigma, 0.9);
    double inside = 0;
    for (double e : st.expected) inside += e;
    long counted = 0;
    for (long c : st.counts) counted += c;
    EXPECT_NEAR(counted, inside, 5 * std::sqrt(inside));
}

TEST(Stats, WishartAndTruncatedPredictions) {
    auto w = eigenvalue_stats(EnsembleSpec::wishart(2, 3), 20000, {0, 20, 20}, 19);
    EXPECT_GE(w.within_5sigma, 0.9);
    auto t = eigenvalue_stats(EnsembleSpec::truncated_unitary(3, 2, 2), 20000, {0, 1, 10}, 20);
    EXPECT_GE(t.within_5sigma, 0.9);
    auto x = eigenvalue_stats(EnsembleSpec::external_source({0.0, 1.0}), 20000, {-3, 3, 10}, 21);
    EXPECT_TRUE(x.expected.empty());
    EXPECT_THROW(eigenvalue_stats(EnsembleSpec::gue(2), 100, {-1, 1, 4}, 1), validation_error);
}

TEST(Helpers, MonicFromRoots) {
    auto c = detail::monic_from_roots({1.0, -2.0, 0.5});
    auto e = cubic_from_roots(1.0, -2.0, 0.5);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(c[j], e[j], 1e-15);
}
