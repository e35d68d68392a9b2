#pragma once

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "opx/core/random.hpp"
#include "opx/opcore/moments.hpp"

namespace opx {

struct MonteCarloEstimate {
    double value = 0;
    double std_error = 0;
    long samples = 0;
    double vandermonde_sq_mean = 0; // E[Delta_n^2] under the normalized weight
};

enum class HeineMode { det, poly };

// Draws from w / m0.
class WeightSampler {
public:
    explicit WeightSampler(const Weight& w) : w_(w) {
        require(w.family != Family::opuc_bessel, "heine: opuc_bessel is not a real-line weight");
        m0_ = to_double(total_mass<real256>(w));
        if (!(m0_ > 0) || !std::isfinite(m0_))
            throw numerical_error("weight is not normalizable", "divergent_moment");
        if (w.domain().discrete) build_discrete_table();
        if (w.family == Family::custom) build_custom_table();
    }

    double m0() const { return m0_; }

    double operator()(CounterRng& rng) const {
        auto P = [&](const char* k) { return w_.param(k); };
        switch (w_.family) {
        case Family::hermite: return P("c") / (2 * P("s")) + rng.normal() / std::sqrt(2 * P("s"));
        case Family::laguerre: return rng.gamma(P("alpha") + 1) / P("c");
        case Family::jacobi: return 2 * rng.beta(P("beta") + 1, P("alpha") + 1) - 1;
        case Family::jacobi01: return rng.beta(P("alpha") + 1, P("beta") + 1);
        case Family::freud: {
            // proposal e^{-x^2}; log ratio -x^4 + (t+1) x^2 peaks at (t+1)^2/4
            double t = P("t"), M = t > -1 ? (t + 1) * (t + 1) / 4 : 0.0;
            for (;;) {
                double x = rng.normal() / std::sqrt(2.0), x2 = x * x;
                if (std::log(rng.uniform()) < -x2 * x2 + (t + 1) * x2 - M) return x;
            }
        }
        case Family::chen_its:
            for (;;) {
                double x = rng.gamma(P("alpha") + 1);
                if (rng.uniform() < std::exp(-P("t") / x)) return x;
            }
        case Family::bce_jacobi:
            for (;;) {
                double x = 2 * rng.beta(P("beta") + 1, P("alpha") + 1) - 1;
                if (rng.uniform() < std::exp(-P("t") * x - std::abs(P("t")))) return x;
            }
        case Family::gen_charlier:
        case Family::gen_meixner: {
            double u = rng.uniform();
            auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
            return static_cast<double>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
        }
        case Family::custom: {
            double u = rng.uniform();
            auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
            std::size_t i = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
            // linear density on [x0, x1]: invert the quadratic CDF
            double x0 = w_.table_x[i], x1 = w_.table_x[i + 1], f0 = w_.table_w[i], f1 = w_.table_w[i + 1];
            double h = x1 - x0, v = rng.uniform() * 0.5 * (f0 + f1) * h, slope = (f1 - f0) / h;
            if (std::abs(slope) < 1e-14 * (f0 + f1 + 1e-300)) return x0 + v / f0;
            return x0 + (-f0 + std::sqrt(std::max(0.0, f0 * f0 + 2 * slope * v))) / slope;
        }
        case Family::opuc_bessel: break;
        }
        return 0.0;
    }

private:
    void build_discrete_table() {
        double total = 0;
        for (int k = 0; k < 100000; ++k) {
            double p = density<double>(w_, double(k));
            total += p;
            cdf_.push_back(total);
            if (k > 5 && p < 1e-18 * total) break;
        }
        for (auto& c : cdf_) c /= total;
    }
    void build_custom_table() {
        double total = 0;
        for (std::size_t i = 1; i < w_.table_x.size(); ++i) {
            total += 0.5 * (w_.table_w[i - 1] + w_.table_w[i]) * (w_.table_x[i] - w_.table_x[i - 1]);
            cdf_.push_back(total);
        }
        for (auto& c : cdf_) c /= total;
    }

    Weight w_;
    double m0_ = 0;
    std::vector<double> cdf_;
};

namespace detail {

struct HeineBlock {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    long count = 0;
};

} // namespace detail

inline constexpr long heine_block_size = 1024;

// Monte-Carlo Heine formulas. Samples are cut into fixed blocks; block b draws
// from CounterRng(seed, b), so the merged estimate does not depend on workers.
inline MonteCarloEstimate heine_monte_carlo(const Weight& w, int n, long samples, HeineMode mode, double x,
                                            std::uint64_t seed, int workers = 1) {
    require(n >= 1, "heine: n must be >= 1");
    require(samples >= 1000, "heine: need at least 1000 samples");
    require(workers >= 1, "heine: workers must be >= 1");
    WeightSampler sampler(w);
    const long nblocks = (samples + heine_block_size - 1) / heine_block_size;
    std::vector<detail::HeineBlock> blocks(nblocks);

    auto run_block = [&](long b) {
        CounterRng rng(seed, static_cast<std::uint64_t>(b));
        long cnt = std::min(heine_block_size, samples - b * heine_block_size);
        detail::HeineBlock acc;
        std::vector<double> pts(n);
        for (long s = 0; s < cnt; ++s) {
            for (auto& p : pts) p = sampler(rng);
            double d2 = 1;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) d2 *= (pts[j] - pts[i]) * (pts[j] - pts[i]);
            double a = d2;
            if (mode == HeineMode::poly)
                for (int i = 0; i < n; ++i) a *= (x - pts[i]);
            acc.sa += a;
            acc.sb += d2;
            acc.saa += a * a;
            acc.sbb += d2 * d2;
            acc.sab += a * d2;
        }
        acc.count = cnt;
        blocks[b] = acc;
    };

    if (workers == 1) {
        for (long b = 0; b < nblocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&, t] {
                for (long b = t; b < nblocks; b += workers) run_block(b);
            });
        for (auto& th : pool) th.join();
    }

    detail::HeineBlock tot;
    for (const auto& b : blocks) {
        tot.sa += b.sa;
        tot.sb += b.sb;
        tot.saa += b.saa;
        tot.sbb += b.sbb;
        tot.sab += b.sab;
        tot.count += b.count;
    }
    const double S = static_cast<double>(tot.count);
    const double ma = tot.sa / S, mb = tot.sb / S;
    const double va = std::max(0.0, tot.saa / S - ma * ma), vb = std::max(0.0, tot.sbb / S - mb * mb);
    const double cab = tot.sab / S - ma * mb;

    MonteCarloEstimate e;
    e.samples = tot.count;
    e.vandermonde_sq_mean = mb;
    if (mode == HeineMode::det) {
        double f = std::pow(sampler.m0(), n) / std::tgamma(n + 1.0);
        e.value = f * mb;
        e.std_error = f * std::sqrt(vb / (S - 1));
    } else {
        double R = ma / mb;
        double var = (va - 2 * R * cab + R * R * vb) / (mb * mb);
        e.value = R;
        e.std_error = std::sqrt(std::max(0.0, var) / (S - 1));
    }
    return e;
}

} // namespace opx
