#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opx/core/error.hpp"
#include "opx/core/polynomial.hpp"
#include "opx/core/real.hpp"

namespace opx {

enum class Family {
    hermite,      // e^{-s x^2 + c x} on R
    laguerre,     // x^alpha e^{-c x} on [0, inf)
    jacobi,       // (1-x)^alpha (1+x)^beta on [-1, 1]
    jacobi01,     // x^alpha (1-x)^beta on [0, 1]
    freud,        // e^{-x^4 + t x^2} on R
    chen_its,     // x^alpha e^{-x - t/x} on [0, inf)
    bce_jacobi,   // (1-x)^alpha (1+x)^beta e^{-t x} on [-1, 1]
    gen_charlier, // c^k / (k! (beta)_k) on N
    gen_meixner,  // (gamma)_k a^k / ((beta)_k k!) on N
    opuc_bessel,  // e^{t cos theta} on the unit circle
    custom,       // piecewise-linear density through a sampled table
};

inline const std::map<Family, std::string>& family_names() {
    static const std::map<Family, std::string> names = {
        {Family::hermite, "hermite"},         {Family::laguerre, "laguerre"},
        {Family::jacobi, "jacobi"},           {Family::jacobi01, "jacobi01"},
        {Family::freud, "freud"},             {Family::chen_its, "chen_its"},
        {Family::bce_jacobi, "bce_jacobi"},   {Family::gen_charlier, "gen_charlier"},
        {Family::gen_meixner, "gen_meixner"}, {Family::opuc_bessel, "opuc_bessel"},
        {Family::custom, "custom"},
    };
    return names;
}

inline std::string to_string(Family f) { return family_names().at(f); }

inline Family family_from_string(const std::string& s) {
    for (const auto& [f, name] : family_names())
        if (name == s) return f;
    throw validation_error("unknown weight family '" + s + "'");
}

struct Domain {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool discrete = false; // support on the nonnegative integers
    bool circle = false;   // theta in [-pi, pi]

    bool contains(double x) const {
        if (circle) return x >= -M_PI && x <= M_PI;
        if (discrete) return x >= 0 && x == std::floor(x);
        return x >= lo && x <= hi;
    }
};

struct Weight {
    Family family = Family::hermite;
    std::map<std::string, double> params;
    // custom family only: sampled density (x_i ascending, w_i >= 0)
    std::vector<double> table_x, table_w;

    double param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end())
            throw validation_error(to_string(family) + ": missing parameter '" + key + "'");
        return it->second;
    }

    std::string name() const { return to_string(family); }

    Domain domain() const {
        const double inf = std::numeric_limits<double>::infinity();
        switch (family) {
        case Family::hermite:
        case Family::freud: return {-inf, inf};
        case Family::laguerre:
        case Family::chen_its: return {0.0, inf};
        case Family::jacobi:
        case Family::bce_jacobi: return {-1.0, 1.0};
        case Family::jacobi01: return {0.0, 1.0};
        case Family::gen_charlier:
        case Family::gen_meixner: return {0.0, inf, true};
        case Family::opuc_bessel: return {-M_PI, M_PI, false, true};
        case Family::custom: return {table_x.front(), table_x.back()};
        }
        return {};
    }

    // Odd moments vanish identically.
    bool symmetric() const {
        switch (family) {
        case Family::hermite: return param("c") == 0.0;
        case Family::freud: return true;
        case Family::jacobi: return param("alpha") == param("beta");
        default: return false;
        }
    }

    bool operator==(const Weight& o) const {
        return family == o.family && params == o.params && table_x == o.table_x && table_w == o.table_w;
    }

    // ---- factories ----
    static Weight hermite(double s = 1.0, double c = 0.0) {
        require(s > 0, "hermite: scale s must be > 0");
        return {Family::hermite, {{"s", s}, {"c", c}}, {}, {}};
    }
    static Weight laguerre(double alpha, double c = 1.0) {
        return {Family::laguerre, {{"alpha", alpha}, {"c", c}}, {}, {}};
    }
    static Weight jacobi(double alpha, double beta) {
        return {Family::jacobi, {{"alpha", alpha}, {"beta", beta}}, {}, {}};
    }
    static Weight jacobi01(double alpha, double beta) {
        return {Family::jacobi01, {{"alpha", alpha}, {"beta", beta}}, {}, {}};
    }
    static Weight freud(double t) { return {Family::freud, {{"t", t}}, {}, {}}; }
    static Weight chen_its(double alpha, double t) {
        require(t >= 0, "chen_its: t must be >= 0");
        return {Family::chen_its, {{"alpha", alpha}, {"t", t}}, {}, {}};
    }
    static Weight bce_jacobi(double alpha, double beta, double t) {
        return {Family::bce_jacobi, {{"alpha", alpha}, {"beta", beta}, {"t", t}}, {}, {}};
    }
    static Weight gen_charlier(double beta, double c) {
        require(beta > 0 && c > 0, "gen_charlier: needs beta > 0 and c > 0");
        return {Family::gen_charlier, {{"beta", beta}, {"c", c}}, {}, {}};
    }
    static Weight gen_meixner(double gamma, double beta, double a) {
        require(gamma > 0 && beta > 0, "gen_meixner: needs gamma > 0 and beta > 0");
        require(a > 0 && a < 1, "gen_meixner: needs 0 < a < 1");
        return {Family::gen_meixner, {{"gamma", gamma}, {"beta", beta}, {"a", a}}, {}, {}};
    }
    static Weight opuc_bessel(double t) { return {Family::opuc_bessel, {{"t", t}}, {}, {}}; }
    static Weight custom(std::vector<double> xs, std::vector<double> ws) {
        require(xs.size() >= 2 && xs.size() == ws.size(), "custom: need >= 2 table points of matching size");
        for (std::size_t i = 1; i < xs.size(); ++i) require(xs[i] > xs[i - 1], "custom: table x must increase");
        for (double w : ws) require(w >= 0 && std::isfinite(w), "custom: density must be finite and nonnegative");
        return {Family::custom, {}, std::move(xs), std::move(ws)};
    }
};

// Build a weight from a family name and a parameter map (CLI / JSON path).
inline Weight make_weight(const std::string& family, const std::map<std::string, double>& p) {
    auto get = [&](const char* k, std::optional<double> dflt = std::nullopt) {
        auto it = p.find(k);
        if (it != p.end()) return it->second;
        if (dflt) return *dflt;
        throw validation_error(family + ": missing parameter '" + k + "'");
    };
    switch (family_from_string(family)) {
    case Family::hermite: return Weight::hermite(get("s", 1.0), get("c", 0.0));
    case Family::laguerre: return Weight::laguerre(get("alpha", 0.0), get("c", 1.0));
    case Family::jacobi: return Weight::jacobi(get("alpha", 0.0), get("beta", 0.0));
    case Family::jacobi01: return Weight::jacobi01(get("alpha", 0.0), get("beta", 0.0));
    case Family::freud: return Weight::freud(get("t", 0.0));
    case Family::chen_its: return Weight::chen_its(get("alpha", 0.0), get("t"));
    case Family::bce_jacobi: return Weight::bce_jacobi(get("alpha", 0.0), get("beta", 0.0), get("t"));
    case Family::gen_charlier: return Weight::gen_charlier(get("beta"), get("c"));
    case Family::gen_meixner: return Weight::gen_meixner(get("gamma"), get("beta"), get("a"));
    case Family::opuc_bessel: return Weight::opuc_bessel(get("t"));
    case Family::custom: throw validation_error("custom weights need a density table, not parameters");
    }
    throw validation_error("unknown family");
}

// Density (or point mass for discrete families) at x.
template <class Real>
Real density(const Weight& w, const Real& x) {
    const Domain d = w.domain();
    const double xd = to_double(x);
    if (!d.contains(xd)) throw validation_error(w.name() + ": point " + std::to_string(xd) + " outside the weight domain");
    auto P = [&](const char* k) { return Real(w.param(k)); };
    switch (w.family) {
    case Family::hermite: return exp(-P("s") * x * x + P("c") * x);
    case Family::laguerre:
        if (x == 0) return w.param("alpha") == 0 ? Real(1) : (w.param("alpha") > 0 ? Real(0) : std::numeric_limits<Real>::infinity());
        return pow(x, P("alpha")) * exp(-P("c") * x);
    case Family::jacobi: return pow(1 - x, P("alpha")) * pow(1 + x, P("beta"));
    case Family::jacobi01: return pow(x, P("alpha")) * pow(1 - x, P("beta"));
    case Family::freud: return exp(-x * x * x * x + P("t") * x * x);
    case Family::chen_its:
        if (x == 0) return Real(0);
        return pow(x, P("alpha")) * exp(-x - P("t") / x);
    case Family::bce_jacobi: return pow(1 - x, P("alpha")) * pow(1 + x, P("beta")) * exp(-P("t") * x);
    case Family::gen_charlier: {
        int k = static_cast<int>(xd);
        return pow(P("c"), k) / (factorial<Real>(k) * pochhammer(P("beta"), k));
    }
    case Family::gen_meixner: {
        int k = static_cast<int>(xd);
        return pochhammer(P("gamma"), k) * pow(P("a"), k) / (pochhammer(P("beta"), k) * factorial<Real>(k));
    }
    case Family::opuc_bessel: return exp(P("t") * cos(x));
    case Family::custom: {
        const auto& tx = w.table_x;
        const auto& tw = w.table_w;
        std::size_t i = 1;
        while (i + 1 < tx.size() && tx[i] < xd) ++i;
        Real x0 = tx[i - 1], x1 = tx[i];
        return Real(tw[i - 1]) + (x - x0) * (Real(tw[i]) - Real(tw[i - 1])) / (x1 - x0);
    }
    }
    return Real(0);
}

// Density on a finite support given the distances to both ends, so that
// endpoint singularities see an unrounded 1 - x or 1 + x.
inline double density_from_edges(const Weight& w, double x, double dlo, double dhi) {
    auto P = [&](const char* k) { return w.param(k); };
    switch (w.family) {
    case Family::jacobi: return std::pow(dhi, P("alpha")) * std::pow(dlo, P("beta"));
    case Family::jacobi01: return std::pow(dlo, P("alpha")) * std::pow(dhi, P("beta"));
    case Family::bce_jacobi: return std::pow(dhi, P("alpha")) * std::pow(dlo, P("beta")) * std::exp(-P("t") * x);
    default: return density<double>(w, x);
    }
}

// Pearson pair (sigma, tau) with (sigma w)' = tau w, where one is registered.
inline std::optional<std::pair<Polynomial<double>, Polynomial<double>>> pearson_pair(const Weight& w) {
    using P = Polynomial<double>;
    switch (w.family) {
    case Family::hermite:
        return std::pair{P({1.0}), P({w.param("c"), -2 * w.param("s")})};
    case Family::laguerre:
        return std::pair{P({0.0, 1.0}), P({w.param("alpha") + 1, -w.param("c")})};
    case Family::jacobi: {
        double a = w.param("alpha"), b = w.param("beta");
        return std::pair{P({1.0, 0.0, -1.0}), P({b - a, -(a + b + 2)})};
    }
    case Family::jacobi01: {
        double a = w.param("alpha"), b = w.param("beta");
        return std::pair{P({0.0, 1.0, -1.0}), P({a + 1, -(a + b + 2)})};
    }
    case Family::freud: return std::pair{P({1.0}), P({0.0, 2 * w.param("t"), 0.0, -4.0})};
    case Family::chen_its: {
        double a = w.param("alpha"), t = w.param("t");
        return std::pair{P({0.0, 0.0, 1.0}), P({t, a + 2, -1.0})};
    }
    case Family::bce_jacobi: {
        double a = w.param("alpha"), b = w.param("beta"), t = w.param("t");
        return std::pair{P({1.0, 0.0, -1.0}), P({b - a - t, -(a + b + 2), t})};
    }
    default: return std::nullopt;
    }
}

} // namespace opx
