#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "opx/core/eigen.hpp"
#include "opx/core/random.hpp"
#include "opx/detproc/detproc.hpp"
#include "opx/mop/families.hpp"
#include "opx/opcore/recurrence.hpp"

namespace opx {

enum class EnsembleKind { gue, wigner, wishart, truncated_unitary, external_source };

inline std::string to_string(EnsembleKind k) {
    switch (k) {
    case EnsembleKind::gue: return "gue";
    case EnsembleKind::wigner: return "wigner";
    case EnsembleKind::wishart: return "wishart";
    case EnsembleKind::truncated_unitary: return "truncated_unitary";
    case EnsembleKind::external_source: return "external_source";
    }
    return "?";
}

inline EnsembleKind ensemble_kind_from_string(const std::string& s) {
    for (auto k : {EnsembleKind::gue, EnsembleKind::wigner, EnsembleKind::wishart, EnsembleKind::truncated_unitary,
                   EnsembleKind::external_source})
        if (to_string(k) == s) return k;
    throw validation_error("unknown ensemble kind '" + s + "'");
}

// gue(n): density exp(-n Tr M^2). wigner(n, sigma): Gaussian entries, all
// real parts and imaginary parts of variance sigma^2. wishart(n, m): M M*
// with M n x m, entries X + iY, X, Y ~ N(0,1). truncated_unitary(m, n, k):
// V*V with V the upper-left m x n block of a Haar unitary of order m + k.
// external_source(A): density exp(-Tr(M^2 - A M)), A = diag(source).
struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::gue;
    int n = 1;
    int m = 0;
    int k = 0;
    double sigma = 1.0;
    std::vector<double> source;

    static EnsembleSpec gue(int n) { return {EnsembleKind::gue, n}; }
    static EnsembleSpec wigner(int n, double sigma) { return {EnsembleKind::wigner, n, 0, 0, sigma}; }
    static EnsembleSpec wishart(int n, int m) { return {EnsembleKind::wishart, n, m}; }
    static EnsembleSpec truncated_unitary(int m, int n, int k) { return {EnsembleKind::truncated_unitary, n, m, k}; }
    static EnsembleSpec external_source(std::vector<double> a) {
        EnsembleSpec s{EnsembleKind::external_source, static_cast<int>(a.size())};
        s.source = std::move(a);
        return s;
    }

    void validate() const {
        require(n >= 1, "ensemble dimension n must be >= 1");
        switch (kind) {
        case EnsembleKind::gue: break;
        case EnsembleKind::wigner: require(sigma > 0 && std::isfinite(sigma), "wigner: sigma must be > 0"); break;
        case EnsembleKind::wishart: require(m >= n, "wishart: need m >= n"); break;
        case EnsembleKind::truncated_unitary:
            require(m >= n, "truncated_unitary: need m >= n");
            require(k >= 1, "truncated_unitary: need k >= 1");
            break;
        case EnsembleKind::external_source:
            require(static_cast<int>(source.size()) == n, "external_source: need n source eigenvalues");
            for (double a : source) require(std::isfinite(a), "external_source: source eigenvalues must be finite");
            break;
        }
    }

    std::string str() const {
        switch (kind) {
        case EnsembleKind::gue: return "gue(" + std::to_string(n) + ")";
        case EnsembleKind::wigner: return "wigner(" + std::to_string(n) + ")";
        case EnsembleKind::wishart: return "wishart(" + std::to_string(n) + "," + std::to_string(m) + ")";
        case EnsembleKind::truncated_unitary:
            return "truncated_unitary(" + std::to_string(m) + "," + std::to_string(n) + "," + std::to_string(k) + ")";
        case EnsembleKind::external_source: return "external_source(" + std::to_string(n) + ")";
        }
        return "?";
    }
};

using CMatrix = Matrix<std::complex<double>>;

struct EnsembleSample {
    CMatrix matrix; // Hermitian: M, M M* or V*V
    CMatrix factor; // M (wishart) or V (truncated_unitary); empty otherwise
};

namespace detail {

inline CMatrix gaussian_hermitian(int n, double diag_var, double off_var, CounterRng& g) {
    CMatrix h(n, n);
    const double sd = std::sqrt(diag_var), so = std::sqrt(off_var);
    for (int i = 0; i < n; ++i) {
        h(i, i) = sd * g.normal();
        for (int j = i + 1; j < n; ++j) {
            double x = so * g.normal(), y = so * g.normal();
            h(i, j) = {x, y};
            h(j, i) = {x, -y};
        }
    }
    return h;
}

// first ncols columns of a Haar unitary of order N: Gram-Schmidt on Gaussian columns
inline CMatrix haar_columns(int N, int ncols, CounterRng& g) {
    CMatrix q(N, ncols);
    for (int j = 0; j < ncols; ++j) {
        for (int i = 0; i < N; ++i) q(i, j) = {g.normal(), g.normal()};
        for (int pass = 0; pass < 2; ++pass)
            for (int l = 0; l < j; ++l) {
                std::complex<double> d = 0;
                for (int i = 0; i < N; ++i) d += std::conj(q(i, l)) * q(i, j);
                for (int i = 0; i < N; ++i) q(i, j) -= d * q(i, l);
            }
        double nrm = 0;
        for (int i = 0; i < N; ++i) nrm += std::norm(q(i, j));
        nrm = std::sqrt(nrm);
        for (int i = 0; i < N; ++i) q(i, j) /= nrm;
    }
    return q;
}

// A B* for A p x q, B r x q
inline CMatrix times_adjoint(const CMatrix& a, const CMatrix& b) {
    CMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            std::complex<double> s = 0;
            for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * std::conj(b(j, l));
            c(i, j) = s;
        }
    return c;
}

inline EnsembleSample draw(const EnsembleSpec& s, CounterRng& g) {
    const int n = s.n;
    EnsembleSample out;
    switch (s.kind) {
    case EnsembleKind::gue: out.matrix = gaussian_hermitian(n, 1.0 / (2 * n), 1.0 / (4 * n), g); break;
    case EnsembleKind::wigner: out.matrix = gaussian_hermitian(n, s.sigma * s.sigma, s.sigma * s.sigma, g); break;
    case EnsembleKind::wishart: {
        CMatrix x(n, s.m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < s.m; ++j) x(i, j) = {g.normal(), g.normal()};
        out.matrix = times_adjoint(x, x);
        out.factor = std::move(x);
        break;
    }
    case EnsembleKind::truncated_unitary: {
        CMatrix u = haar_columns(s.m + s.k, n, g);
        CMatrix v(s.m, n), vt(n, s.m);
        for (int i = 0; i < s.m; ++i)
            for (int j = 0; j < n; ++j) {
                v(i, j) = u(i, j);
                vt(j, i) = std::conj(u(i, j));
            }
        out.matrix = times_adjoint(vt, vt); // V* V
        out.factor = std::move(v);
        break;
    }
    case EnsembleKind::external_source: {
        // exp(-Tr(M^2 - AM)) = exp(-Tr (M - A/2)^2) * const: M = A/2 + G, G ~ exp(-Tr G^2)
        out.matrix = gaussian_hermitian(n, 0.5, 0.25, g);
        for (int i = 0; i < n; ++i) out.matrix(i, i) += 0.5 * s.source[i];
        break;
    }
    }
    return out;
}

inline std::vector<double> monic_from_roots(const std::vector<double>& roots) {
    std::vector<double> c{1.0};
    for (double r : roots) {
        std::vector<double> nc(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            nc[i + 1] += c[i];
            nc[i] -= r * c[i];
        }
        c = std::move(nc);
    }
    return c;
}

} // namespace detail

inline EnsembleSample sample_ensemble(const EnsembleSpec& spec, std::uint64_t seed) {
    spec.validate();
    CounterRng g(seed, 0);
    return detail::draw(spec, g);
}

inline std::vector<double> sample_eigenvalues(const EnsembleSpec& spec, CounterRng& g) {
    return hermitian_eigenvalues(detail::draw(spec, g).matrix);
}

struct CharPolyEstimate {
    int degree = 0;
    std::vector<double> coeff_means;   // ascending powers, leading entry exactly 1
    std::vector<double> coeff_stderrs; // 0 for the leading entry
    long samples = 0;
};

inline constexpr long rmt_block_size = 1024;

namespace detail {

// Runs f(block_index, rng, count) over fixed-size blocks, block b seeded by stream b.
template <class Acc, class F>
std::vector<Acc> run_blocks(long samples, std::uint64_t seed, int workers, F&& f) {
    const long nblocks = (samples + rmt_block_size - 1) / rmt_block_size;
    std::vector<Acc> acc(nblocks);
    auto one = [&](long b) {
        CounterRng g(seed, static_cast<std::uint64_t>(b));
        acc[b] = f(g, std::min(rmt_block_size, samples - b * rmt_block_size));
    };
    workers = std::max(1, workers);
    if (workers == 1) {
        for (long b = 0; b < nblocks; ++b) one(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&, t] {
                for (long b = t; b < nblocks; b += workers) one(b);
            });
        for (auto& th : pool) th.join();
    }
    return acc;
}

} // namespace detail

// Monte-Carlo average of det(x - M) over the ensemble; block partial sums
// are merged in block order, so the result does not depend on workers.
inline CharPolyEstimate avg_char_poly_mc(const EnsembleSpec& spec, long samples, std::uint64_t seed, int workers = 1) {
    spec.validate();
    require(samples >= 1000, "avg_char_poly_mc: need at least 1000 samples");
    const int n = spec.n;
    struct Acc {
        std::vector<double> s, s2;
    };
    auto blocks = detail::run_blocks<Acc>(samples, seed, workers, [&](CounterRng& g, long cnt) {
        Acc a{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
        for (long i = 0; i < cnt; ++i) {
            auto c = detail::monic_from_roots(sample_eigenvalues(spec, g));
            for (int j = 0; j <= n; ++j) {
                a.s[j] += c[j];
                a.s2[j] += c[j] * c[j];
            }
        }
        return a;
    });
    std::vector<double> s(n + 1, 0.0), s2(n + 1, 0.0);
    for (const auto& b : blocks)
        for (int j = 0; j <= n; ++j) {
            s[j] += b.s[j];
            s2[j] += b.s2[j];
        }
    CharPolyEstimate e;
    e.degree = n;
    e.samples = samples;
    const double N = static_cast<double>(samples);
    for (int j = 0; j <= n; ++j) {
        double mean = s[j] / N;
        double var = std::max(0.0, (s2[j] - N * mean * mean) / (N - 1));
        e.coeff_means.push_back(mean);
        e.coeff_stderrs.push_back(std::sqrt(var / N));
    }
    e.coeff_means[n] = 1.0;
    e.coeff_stderrs[n] = 0.0;
    return e;
}

// published: the Laguerre parameter (m-n-1)/2 with the density's e^{-x/2};
// complex_gaussian: what the X + iY sampler actually averages to, parameter m-n.
enum class WishartConvention { published, complex_gaussian };

namespace detail {

inline std::vector<double> monic_from_recurrence(const std::vector<double>& b, const std::vector<double>& a_sq, int n) {
    std::vector<double> p0{1.0};
    if (n == 0) return p0;
    std::vector<double> p1{-b[0], 1.0};
    for (int k = 1; k < n; ++k) {
        std::vector<double> p2(k + 2, 0.0);
        for (int i = 0; i <= k; ++i) {
            p2[i + 1] += p1[i];
            p2[i] -= b[k] * p1[i];
        }
        for (int i = 0; i < k; ++i) p2[i] -= a_sq[k] * p0[i];
        p0 = std::move(p1);
        p1 = std::move(p2);
    }
    return p1;
}

// monic OPs of x^alpha e^{-c x}: b_k = (2k+alpha+1)/c, a_k^2 = k(k+alpha)/c^2
inline std::vector<double> monic_laguerre(int n, double alpha, double c) {
    std::vector<double> b(n), a(n, 0.0);
    for (int k = 0; k < n; ++k) {
        b[k] = (2 * k + alpha + 1) / c;
        a[k] = k * (k + alpha) / (c * c);
    }
    return monic_from_recurrence(b, a, n);
}

} // namespace detail

inline bool has_prediction(const EnsembleSpec& s) {
    return s.kind != EnsembleKind::truncated_unitary || s.k >= s.n;
}

// Predicted E det(x - M), ascending coefficients.
inline std::vector<double> exact_avg_char_poly(const EnsembleSpec& spec,
                                               WishartConvention conv = WishartConvention::published) {
    spec.validate();
    const int n = spec.n;
    switch (spec.kind) {
    case EnsembleKind::gue: {
        // monic Hermite for e^{-n x^2}: P_k = x P_{k-1} - (k-1)/(2n) P_{k-2}
        std::vector<double> b(n, 0.0), a(n);
        for (int k = 0; k < n; ++k) a[k] = k / (2.0 * n);
        return detail::monic_from_recurrence(b, a, n);
    }
    case EnsembleKind::wigner: {
        std::vector<double> b(n, 0.0), a(n);
        for (int k = 0; k < n; ++k) a[k] = 2.0 * k * spec.sigma * spec.sigma;
        return detail::monic_from_recurrence(b, a, n);
    }
    case EnsembleKind::wishart:
        if (conv == WishartConvention::published) return detail::monic_laguerre(n, (spec.m - n - 1) / 2.0, 0.5);
        return detail::monic_laguerre(n, spec.m - n, 0.5);
    case EnsembleKind::truncated_unitary: {
        if (!has_prediction(spec))
            throw validation_error("no prediction registered for " + spec.str() + " (needs k >= n)");
        auto rec = recurrence_for<real256>(Weight::jacobi01(spec.m - n, spec.k - n), n);
        auto p = monic_polynomial(rec, n);
        std::vector<double> out;
        for (const auto& c : p.c) out.push_back(to_double(c));
        return out;
    }
    case EnsembleKind::external_source: {
        // multiple Hermite with weights e^{-x^2 + a_j x}, multiplicities as the multi-index
        std::map<double, int> mult;
        for (double a : spec.source) ++mult[a];
        std::vector<double> c;
        std::vector<int> idx;
        for (auto [a, k] : mult) {
            c.push_back(a);
            idx.push_back(k);
        }
        auto p = family_closed_form<real256>(MopFamily::hermite(c), MultiIndex(idx)).p;
        std::vector<double> out;
        for (const auto& v : p.c) out.push_back(to_double(v));
        return out;
    }
    }
    return {};
}

// Eigenvalue density of the ensemble as a weight, where it is a CD-kernel process.
inline std::optional<Weight> ensemble_weight(const EnsembleSpec& s) {
    switch (s.kind) {
    case EnsembleKind::gue: return Weight::hermite(static_cast<double>(s.n), 0.0);
    case EnsembleKind::wishart: return Weight::laguerre(s.m - s.n, 0.5);
    case EnsembleKind::truncated_unitary:
        if (s.k >= s.n) return Weight::jacobi01(s.m - s.n, s.k - s.n);
        return std::nullopt;
    default: return std::nullopt;
    }
}

struct HistogramSpec {
    double lo = -2, hi = 2;
    int bins = 20;
};

struct EigenvalueStats {
    std::vector<double> edges;
    std::vector<long> counts;
    std::vector<double> expected; // samples * int_bin K_n(x,x) w(x) dx; empty without a prediction
    long samples = 0;
    long total_count = 0; // all eigenvalues, in range or not
    double chi_square = 0; // sum (count - expected)^2 / expected over bins with expected > 0
    double within_5sigma = 0; // fraction of bins with |count - expected| <= 5 sqrt(expected)
};

inline EigenvalueStats eigenvalue_stats(const EnsembleSpec& spec, long samples, const HistogramSpec& h,
                                        std::uint64_t seed, int workers = 1) {
    spec.validate();
    require(h.bins >= 1 && h.lo < h.hi, "eigenvalue_stats: need bins >= 1 and lo < hi");
    require(static_cast<double>(samples) * spec.n >= 1e4, "eigenvalue_stats: need samples * n >= 1e4");
    EigenvalueStats st;
    st.samples = samples;
    for (int i = 0; i <= h.bins; ++i) st.edges.push_back(h.lo + (h.hi - h.lo) * i / h.bins);
    auto blocks = detail::run_blocks<std::vector<long>>(samples, seed, workers, [&](CounterRng& g, long cnt) {
        std::vector<long> c(h.bins + 1, 0); // last slot counts everything
        for (long i = 0; i < cnt; ++i)
            for (double x : sample_eigenvalues(spec, g)) {
                ++c[h.bins];
                if (x < h.lo || x >= h.hi) continue;
                int b = std::min(h.bins - 1, static_cast<int>((x - h.lo) / (h.hi - h.lo) * h.bins));
                ++c[b];
            }
        return c;
    });
    st.counts.assign(h.bins, 0);
    for (const auto& b : blocks) {
        for (int i = 0; i < h.bins; ++i) st.counts[i] += b[i];
        st.total_count += b[h.bins];
    }
    auto w = ensemble_weight(spec);
    if (!w) return st;
    auto k = make_kernel(*w, spec.n);
    int ok = 0;
    for (int i = 0; i < h.bins; ++i) {
        double e = samples * expected_count(k, st.edges[i], st.edges[i + 1]);
        st.expected.push_back(e);
        double d = st.counts[i] - e;
        if (e > 0) st.chi_square += d * d / e;
        if (std::abs(d) <= 5 * std::sqrt(e)) ++ok;
    }
    st.within_5sigma = static_cast<double>(ok) / h.bins;
    return st;
}

} // namespace opx
