#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "opx/core/real.hpp"
#include "opx/detproc/detproc.hpp"
#include "opx/mop/families.hpp"
#include "opx/mop/mop.hpp"
#include "opx/opcore/moments.hpp"
#include "opx/opcore/recurrence.hpp"
#include "opx/painleve/painleve.hpp"
#include "opx/rmt/rmt.hpp"

namespace opx {

using json = nlohmann::json;

// Shortest decimal that round-trips a double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Full-precision text for any Real (CSV cells).
template <class Real>
std::string format_real(const Real& v) {
    if constexpr (std::is_same_v<Real, double>) return format_double(v);
    else return to_decimal(v);
}

// doubles stay JSON numbers (non-finite ones become strings); wider types
// become decimal strings so no digits are lost.
template <class Real>
json jnum(const Real& v) {
    if constexpr (std::is_same_v<Real, double>) {
        if (!std::isfinite(v)) return format_double(v);
        return v;
    } else if constexpr (std::is_integral_v<Real>) {
        return v;
    } else {
        return to_decimal(v);
    }
}

template <class Real>
Real jreal(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if constexpr (std::is_same_v<Real, double>) {
            if (s == "nan") return std::nan("");
            if (s == "inf") return INFINITY;
            if (s == "-inf") return -INFINITY;
            return std::stod(s);
        } else {
            return from_string<Real>(s);
        }
    }
    return Real(j.get<double>());
}

template <class Real>
json jarray(const std::vector<Real>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(jnum(x));
    return a;
}

template <class Real>
std::vector<Real> jvector(const json& j) {
    std::vector<Real> v;
    for (const auto& x : j) v.push_back(jreal<Real>(x));
    return v;
}

// ---- opcore ----

inline void to_json(json& j, const Weight& w) {
    j = json{{"family", w.name()}, {"params", json::object()}};
    for (const auto& [k, v] : w.params) j["params"][k] = jnum(v);
    if (w.family == Family::custom) {
        j["table_x"] = jarray(w.table_x);
        j["table_w"] = jarray(w.table_w);
    }
}

inline void from_json(const json& j, Weight& w) {
    const auto fam = j.at("family").get<std::string>();
    if (fam == "custom") {
        w = Weight::custom(jvector<double>(j.at("table_x")), jvector<double>(j.at("table_w")));
        return;
    }
    std::map<std::string, double> p;
    for (const auto& [k, v] : j.at("params").items()) p[k] = jreal<double>(v);
    w = make_weight(fam, p);
}

template <class Real>
json moments_json(const MomentSequence<Real>& m) {
    return {{"weight", m.weight},           {"values", jarray(m.values)},
            {"precision_bits", m.precision_bits}, {"provenance", m.provenance},
            {"error_estimate", jnum(m.error_estimate)}};
}

template <class Real>
MomentSequence<Real> moments_from_json(const json& j) {
    MomentSequence<Real> m;
    m.weight = j.at("weight").get<Weight>();
    m.values = jvector<Real>(j.at("values"));
    m.precision_bits = j.at("precision_bits").get<int>();
    m.provenance = j.at("provenance").get<std::string>();
    m.error_estimate = jreal<double>(j.at("error_estimate"));
    return m;
}

template <class Real>
json recurrence_json(const RecurrenceCoefficients<Real>& r) {
    return {{"weight", r.weight},
            {"a_sq", jarray(r.a_sq)},
            {"b", jarray(r.b)},
            {"m0", jnum(r.m0)},
            {"precision_bits", r.precision_bits}};
}

template <class Real>
RecurrenceCoefficients<Real> recurrence_from_json(const json& j) {
    RecurrenceCoefficients<Real> r;
    r.weight = j.at("weight").get<Weight>();
    r.a_sq = jvector<Real>(j.at("a_sq"));
    r.b = jvector<Real>(j.at("b"));
    r.m0 = jreal<Real>(j.at("m0"));
    r.precision_bits = j.at("precision_bits").get<int>();
    require(r.a_sq.size() == r.b.size() + 1, "recurrence JSON: a_sq must have one more entry than b");
    return r;
}

// ---- detproc ----

inline void to_json(json& j, const GapQuery& q) {
    j = json{{"interval", {jnum(q.a), jnum(q.b)}}, {"order_sequence", q.order_sequence},
             {"values", jarray(q.values)},         {"converged", q.converged},
             {"quad_order", q.quad_order},         {"result", jnum(q.result)}};
}

inline void from_json(const json& j, GapQuery& q) {
    q.a = jreal<double>(j.at("interval").at(0));
    q.b = jreal<double>(j.at("interval").at(1));
    q.order_sequence = j.at("order_sequence").get<std::vector<int>>();
    q.values = jvector<double>(j.at("values"));
    q.converged = j.at("converged").get<bool>();
    q.quad_order = j.at("quad_order").get<int>();
    q.result = jreal<double>(j.at("result"));
}

// ---- rmt ----

inline void to_json(json& j, const EnsembleSpec& s) {
    j = json{{"kind", to_string(s.kind)}, {"n", s.n}, {"m", s.m}, {"k", s.k}, {"sigma", jnum(s.sigma)},
             {"source", jarray(s.source)}};
}

inline void from_json(const json& j, EnsembleSpec& s) {
    s.kind = ensemble_kind_from_string(j.at("kind").get<std::string>());
    s.n = j.at("n").get<int>();
    s.m = j.at("m").get<int>();
    s.k = j.at("k").get<int>();
    s.sigma = jreal<double>(j.at("sigma"));
    s.source = jvector<double>(j.at("source"));
    s.validate();
}

inline void to_json(json& j, const CharPolyEstimate& e) {
    j = json{{"degree", e.degree},
             {"coeff_means", jarray(e.coeff_means)},
             {"coeff_stderrs", jarray(e.coeff_stderrs)},
             {"samples", e.samples}};
}

inline void from_json(const json& j, CharPolyEstimate& e) {
    e.degree = j.at("degree").get<int>();
    e.coeff_means = jvector<double>(j.at("coeff_means"));
    e.coeff_stderrs = jvector<double>(j.at("coeff_stderrs"));
    e.samples = j.at("samples").get<long>();
}

// ---- mop ----

inline void to_json(json& j, const MultiIndex& n) { j = n.n; }
inline void from_json(const json& j, MultiIndex& n) { n = MultiIndex(j.get<std::vector<int>>()); }

inline std::string to_string(MopFamilyKind k) {
    switch (k) {
    case MopFamilyKind::multiple_hermite: return "multiple_hermite";
    case MopFamilyKind::multiple_laguerre1: return "multiple_laguerre1";
    case MopFamilyKind::multiple_laguerre2: return "multiple_laguerre2";
    case MopFamilyKind::jacobi_pineiro: return "jacobi_pineiro";
    }
    return "";
}

inline MopFamilyKind mop_family_kind_from_string(const std::string& s) {
    if (s == "multiple_hermite" || s == "mhermite") return MopFamilyKind::multiple_hermite;
    if (s == "multiple_laguerre1" || s == "mlaguerre1") return MopFamilyKind::multiple_laguerre1;
    if (s == "multiple_laguerre2" || s == "mlaguerre2") return MopFamilyKind::multiple_laguerre2;
    if (s == "jacobi_pineiro" || s == "jpineiro") return MopFamilyKind::jacobi_pineiro;
    throw validation_error("unknown MOP family '" + s + "'");
}

inline void to_json(json& j, const MopFamily& f) {
    j = json{{"kind", to_string(f.kind)}, {"c", jarray(f.c)}, {"alpha", jarray(f.alpha)},
             {"alpha0", jnum(f.alpha0)},  {"beta", jnum(f.beta)}};
}

inline void from_json(const json& j, MopFamily& f) {
    f.kind = mop_family_kind_from_string(j.at("kind").get<std::string>());
    f.c = jvector<double>(j.at("c"));
    f.alpha = jvector<double>(j.at("alpha"));
    f.alpha0 = jreal<double>(j.at("alpha0"));
    f.beta = jreal<double>(j.at("beta"));
    f.validate();
}

inline SystemClass system_class_from_string(const std::string& s) {
    for (auto c : {SystemClass::angelesco, SystemClass::at_system, SystemClass::nikishin, SystemClass::generic})
        if (to_string(c) == s) return c;
    throw validation_error("unknown MOP system class '" + s + "'");
}

// A system mirrors its weights; moments are rebuilt on load.
template <class Real>
json system_json(const MOPSystem<Real>& s) {
    return {{"class", to_string(s.system_class)}, {"weights", s.weights}, {"max_order", s.moment_count() - 2}};
}

template <class Real>
MOPSystem<Real> system_from_json(const json& j) {
    return make_system<Real>(j.at("weights").get<std::vector<Weight>>(),
                             system_class_from_string(j.at("class").get<std::string>()),
                             j.at("max_order").get<int>());
}

template <class Real>
json nnrr_json(const NNRRCoefficients<Real>& c) {
    return {{"index", c.index}, {"a", jarray(c.a)}, {"b", jarray(c.b)}};
}

template <class Real>
NNRRCoefficients<Real> nnrr_from_json(const json& j) {
    return {j.at("index").get<MultiIndex>(), jvector<Real>(j.at("a")), jvector<Real>(j.at("b"))};
}

// ---- painleve ----

inline void to_json(json& j, const DP1Solution& s) {
    j = json{{"t", jnum(s.t)},           {"N", s.N},
             {"x", jarray(s.x)},         {"iterations", s.iterations},
             {"residual", jnum(s.residual)}, {"newton_steps", s.newton_steps},
             {"history", jarray(s.history)}};
}

inline void from_json(const json& j, DP1Solution& s) {
    s.t = jreal<double>(j.at("t"));
    s.N = j.at("N").get<int>();
    s.x = jvector<double>(j.at("x"));
    s.iterations = j.at("iterations").get<int>();
    s.residual = jreal<double>(j.at("residual"));
    s.newton_steps = j.at("newton_steps").get<int>();
    s.history = jvector<double>(j.at("history"));
}

template <class Real>
json verblunsky_json(const VerblunskySequence<Real>& s) {
    return {{"t", jnum(s.t)},
            {"alphas", jarray(s.alphas)},
            {"alpha_minus_one", jnum(VerblunskySequence<Real>::alpha_minus_one)},
            {"source", to_string(s.source)},
            {"route_discrepancy", jnum(s.route_discrepancy)}};
}

template <class Real>
VerblunskySequence<Real> verblunsky_from_json(const json& j) {
    VerblunskySequence<Real> s;
    s.t = jreal<double>(j.at("t"));
    s.alphas = jvector<Real>(j.at("alphas"));
    const auto src = j.at("source").get<std::string>();
    require(src == "szego_recurrence" || src == "moment_determinant", "unknown Verblunsky source '" + src + "'");
    s.source = src == "szego_recurrence" ? VerblunskySource::szego_recurrence : VerblunskySource::moment_determinant;
    s.route_discrepancy = jreal<double>(j.at("route_discrepancy"));
    return s;
}

inline void to_json(json& j, const LatticeState& s) {
    j = json{{"t", jnum(s.t)}, {"a_sq", jarray(s.a_sq)}, {"b", jarray(s.b)}, {"alpha", jarray(s.alpha)}};
}

inline void from_json(const json& j, LatticeState& s) {
    s.t = jreal<double>(j.at("t"));
    s.a_sq = jvector<double>(j.at("a_sq"));
    s.b = jvector<double>(j.at("b"));
    s.alpha = jvector<double>(j.at("alpha"));
}

inline void to_json(json& j, const LatticeReport& r) {
    j = json{{"base", r.base},
             {"lattice", to_string(r.lattice)},
             {"span", {jnum(r.t0), jnum(r.t1)}},
             {"h", jnum(r.h)},
             {"N", r.N},
             {"steps", r.steps},
             {"buffer", r.buffer},
             {"substeps", r.substeps},
             {"moment_route", r.moment_route},
             {"ode_route", r.ode_route},
             {"fd_residuals", jarray(r.fd_residuals)},
             {"max_fd_residual", jnum(r.max_fd_residual)},
             {"max_discrepancy", jnum(r.max_discrepancy)}};
}

inline void from_json(const json& j, LatticeReport& r) {
    r.base = j.at("base").get<Weight>();
    r.lattice = lattice_from_string(j.at("lattice").get<std::string>());
    r.t0 = jreal<double>(j.at("span").at(0));
    r.t1 = jreal<double>(j.at("span").at(1));
    r.h = jreal<double>(j.at("h"));
    r.N = j.at("N").get<int>();
    r.steps = j.at("steps").get<int>();
    r.buffer = j.at("buffer").get<int>();
    r.substeps = j.at("substeps").get<long>();
    r.moment_route = j.at("moment_route").get<std::vector<LatticeState>>();
    r.ode_route = j.at("ode_route").get<std::vector<LatticeState>>();
    r.fd_residuals = jvector<double>(j.at("fd_residuals"));
    r.max_fd_residual = jreal<double>(j.at("max_fd_residual"));
    r.max_discrepancy = jreal<double>(j.at("max_discrepancy"));
}

inline void to_json(json& j, const OdeResidual& r) {
    j = json{{"quantity", to_string(r.quantity)}, {"n", r.n}, {"t", jnum(r.t)}, {"h", jnum(r.h)},
             {"params", json::object()},          {"y", jnum(r.y)}, {"dy", jnum(r.dy)}, {"d2y", jnum(r.d2y)},
             {"rhs", jnum(r.rhs)},                {"residual", jnum(r.residual)}};
    for (const auto& [k, v] : r.params) j["params"][k] = jnum(v);
}

inline void from_json(const json& j, OdeResidual& r) {
    r.quantity = painleve_quantity_from_string(j.at("quantity").get<std::string>());
    r.n = j.at("n").get<int>();
    r.t = jreal<double>(j.at("t"));
    r.h = jreal<double>(j.at("h"));
    r.params.clear();
    for (const auto& [k, v] : j.at("params").items()) r.params[k] = jreal<double>(v);
    r.y = jreal<double>(j.at("y"));
    r.dy = jreal<double>(j.at("dy"));
    r.d2y = jreal<double>(j.at("d2y"));
    r.rhs = jreal<double>(j.at("rhs"));
    r.residual = jreal<double>(j.at("residual"));
}

inline void to_json(json& j, const SingularityProbe& p) {
    j = json{{"n", p.n},
             {"eps", jnum(p.eps)},
             {"x_prev", jnum(p.x_prev)},
             {"x", jarray(p.x)},
             {"printed_r3", jnum(p.printed_r3)},
             {"printed_r4", jnum(p.printed_r4)},
             {"exact_r3", jnum(p.exact_r3)},
             {"exact_r4", jnum(p.exact_r4)},
             {"leading_rel_error", jnum(p.leading_rel_error)}};
}

inline void from_json(const json& j, SingularityProbe& p) {
    p.n = j.at("n").get<int>();
    p.eps = jreal<double>(j.at("eps"));
    p.x_prev = jreal<double>(j.at("x_prev"));
    p.x = jvector<double>(j.at("x"));
    p.printed_r3 = jreal<double>(j.at("printed_r3"));
    p.printed_r4 = jreal<double>(j.at("printed_r4"));
    p.exact_r3 = jreal<double>(j.at("exact_r3"));
    p.exact_r4 = jreal<double>(j.at("exact_r4"));
    p.leading_rel_error = jreal<double>(j.at("leading_rel_error"));
}

inline void to_json(json& j, const WronskianResult& r) {
    j = json{{"base", to_string(r.base)},
             {"t", jnum(r.t)},
             {"h", jnum(r.h)},
             {"n", r.n},
             {"D", jarray(r.D)},
             {"a_sq", jnum(r.a_sq)},
             {"b", jnum(r.b)},
             {"moment_a_sq", jnum(r.moment_a_sq)},
             {"moment_b", jnum(r.moment_b)},
             {"discrepancy", jnum(r.discrepancy)}};
}

inline void from_json(const json& j, WronskianResult& r) {
    r.base = wronskian_base_from_string(j.at("base").get<std::string>());
    r.t = jreal<double>(j.at("t"));
    r.h = jreal<double>(j.at("h"));
    r.n = j.at("n").get<int>();
    r.D = jvector<double>(j.at("D"));
    r.a_sq = jreal<double>(j.at("a_sq"));
    r.b = jreal<double>(j.at("b"));
    r.moment_a_sq = jreal<double>(j.at("moment_a_sq"));
    r.moment_b = jreal<double>(j.at("moment_b"));
    r.discrepancy = jreal<double>(j.at("discrepancy"));
}

inline void to_json(json& j, const SystemResidual& r) {
    j = json{{"family", r.family}, {"N", r.N}, {"equations", json::array()}, {"max_residual", jnum(r.max_residual)}};
    for (const auto& e : r.equations)
        j["equations"].push_back({{"name", e.name}, {"first_n", e.first_n}, {"residuals", jarray(e.residuals)}});
}

inline void from_json(const json& j, SystemResidual& r) {
    r.family = j.at("family").get<Weight>();
    r.N = j.at("N").get<int>();
    r.equations.clear();
    for (const auto& e : j.at("equations"))
        r.equations.push_back({e.at("name").get<std::string>(), e.at("first_n").get<int>(), jvector<double>(e.at("residuals"))});
    r.max_residual = jreal<double>(j.at("max_residual"));
}

} // namespace opx
