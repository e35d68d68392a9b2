#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opx/detproc/detproc.hpp"
#include "opx/io/json.hpp"
#include "opx/mop/families.hpp"
#include "opx/painleve/painleve.hpp"
#include "opx/rmt/rmt.hpp"

namespace opx::cli {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& key) {
    const char* v = std::getenv(key.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
}

namespace detail {

inline std::string render(const std::string& s) { return s; }
inline std::string render(int v) { return std::to_string(v); }
inline std::string render(long v) { return std::to_string(v); }
inline std::string render(double v) { return format_double(v); }
inline std::string render(bool v) { return v ? "true" : "false"; }
template <class T>
std::string render(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + render(v[i]);
    return s;
}
template <class T>
std::string render(const std::optional<T>& v) {
    return v ? render(*v) : std::string();
}

// Options per (sub)command, in registration order, for the config echo.
class Registry {
public:
    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
        auto* o = app->add_option("--" + name, var, desc);
        items_[app].push_back({name, [&var] { return render(var); }});
        return o;
    }

    // Unset optionals are left out.
    std::vector<std::pair<std::string, std::string>> resolved(const CLI::App* app) const {
        std::vector<std::pair<std::string, std::string>> out;
        auto it = items_.find(app);
        if (it == items_.end()) return out;
        for (const auto& [k, f] : it->second) {
            auto v = f();
            if (!v.empty()) out.emplace_back(k, v);
        }
        return out;
    }

private:
    std::map<const CLI::App*, std::vector<std::pair<std::string, std::function<std::string()>>>> items_;
};

struct WeightOpts {
    std::string family;
    std::optional<double> s, c, alpha, beta, t, gamma, a;

    void add(Registry& reg, CLI::App* app, bool required = true) {
        auto* f = reg.add(app, "family", family, "weight family");
        if (required) f->required();
        reg.add(app, "s", s, "hermite scale");
        reg.add(app, "c", c, "hermite shift, laguerre rate, charlier c");
        reg.add(app, "alpha", alpha, "alpha");
        reg.add(app, "beta", beta, "beta");
        reg.add(app, "t", t, "deformation parameter t");
        reg.add(app, "gamma", gamma, "meixner gamma");
        reg.add(app, "a", a, "meixner a");
    }

    Weight build() const {
        std::map<std::string, double> p;
        auto put = [&](const char* k, const std::optional<double>& v) {
            if (v) p[k] = *v;
        };
        put("s", s);
        put("c", c);
        put("alpha", alpha);
        put("beta", beta);
        put("t", t);
        put("gamma", gamma);
        put("a", a);
        Weight w = make_weight(family, p);
        for (const auto& [k, v] : p)
            require(w.params.count(k), "parameter '" + k + "' does not apply to family " + family);
        return w;
    }
};

// Tabular result plus an object for JSON output.
struct Report {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    json result;
    std::vector<std::pair<std::string, std::string>> summary;
    std::string precision_used;
};

inline std::string render_cell(const std::string& s) { return s; }
inline std::string render_cell(const char* s) { return s; }
inline std::string render_cell(int v) { return std::to_string(v); }
inline std::string render_cell(long v) { return std::to_string(v); }
inline std::string render_cell(double v) { return format_double(v); }
template <class Real>
std::string render_cell(const Real& v) {
    return format_real(v);
}

template <class... T>
std::vector<std::string> row(const T&... v) {
    return {render_cell(v)...};
}

inline std::vector<int> parse_box(const std::string& s) {
    std::vector<int> box;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(part, &used);
            require(used == part.size(), "");
            box.push_back(v);
        } catch (const std::exception&) {
            throw validation_error("--box expects sizes like 4x4, got '" + s + "'");
        }
    }
    require(!box.empty(), "--box must not be empty");
    for (int v : box) require(v >= 1, "--box sizes must be >= 1");
    return box;
}

inline bool has_flag(const std::vector<std::string>& args, const std::string& name) {
    const std::string f = "--" + name;
    for (const auto& a : args)
        if (a == f || a.rfind(f + "=", 0) == 0) return true;
    return false;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat key=value file; '#' and ';' start comments. Keys may use '_' for '-'.
inline std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        auto eq = line.find('=');
        require(eq != std::string::npos, path + ":" + std::to_string(lineno) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        auto val = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        std::replace(key.begin(), key.end(), '_', '-');
        require(!key.empty(), path + ":" + std::to_string(lineno) + ": empty key");
        require(key != "config", path + ": config files cannot include other config files");
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
        kv.emplace_back(key, val);
    }
    return kv;
}

inline std::optional<std::string> config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return std::nullopt;
}

inline void write_csv(std::ostream& out, const std::string& command,
                      const std::vector<std::pair<std::string, std::string>>& config, const Report& r) {
    out << "# opx " << command << "\n";
    for (const auto& [k, v] : config) out << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << r.columns[i];
    out << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
    for (const auto& [k, v] : r.summary) out << "# summary " << k << "=" << v << "\n";
}

inline void write_json(std::ostream& out, const std::string& command,
                       const std::vector<std::pair<std::string, std::string>>& config, const Report& r) {
    json cfg = json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    json summary = json::object();
    for (const auto& [k, v] : r.summary) summary[k] = v;
    json doc = {{"command", command}, {"config", cfg}, {"result", r.result}, {"summary", summary}};
    out << doc.dump(2) << "\n";
}

inline double state_distance(const LatticeState& a, const LatticeState& b) {
    double d = 0;
    auto cmp = [&](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) d = std::max(d, std::abs(x[i] - y[i]));
    };
    cmp(a.a_sq, b.a_sq);
    cmp(a.b, b.b);
    cmp(a.alpha, b.alpha);
    return d;
}

} // namespace detail

// Runs one opx command. args excludes the program name.
// Exit codes: 0 ok, 2 bad input, 3 numerical failure.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err,
               const EnvLookup& env = process_env) {
    using namespace detail;
    Registry reg;

    CLI::App app{"opx: orthogonal polynomials, determinantal processes and discrete Painleve checks"};
    app.name("opx");
    app.require_subcommand(1, 1);
    app.fallthrough();
    // long form only: --h is the step size of lattice, ode and wronskian
    app.set_help_flag("--help", "print this help and exit");

    long precision_bits = 256;
    long seed = 0;
    std::string format;
    std::string config_file;
    bool timing = false;
    app.add_option("--precision-bits", precision_bits, "working precision in bits (env OPX_PRECISION_BITS)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--format", format, "csv or json (default: csv, json for gap and ode)")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--config", config_file, "flat key=value file with the same keys as the flags");
    app.add_flag("--timing", timing, "append wall time to the output (breaks byte-identical output)");

    // moments
    auto* c_mom = app.add_subcommand("moments", "moments m_0..m_{count-1} of a weight");
    WeightOpts mom_w;
    int mom_count = 10;
    mom_w.add(reg, c_mom);
    reg.add(c_mom, "count", mom_count, "number of moments");

    // recurrence
    auto* c_rec = app.add_subcommand("recurrence", "three-term recurrence coefficients from moments");
    WeightOpts rec_w;
    int rec_n = 10;
    rec_w.add(reg, c_rec);
    reg.add(c_rec, "n", rec_n, "number of rows (n = 0..N-1)");

    // kernel
    auto* c_ker = app.add_subcommand("kernel", "Christoffel-Darboux kernel K_n(x, y)");
    WeightOpts ker_w;
    int ker_n = 4;
    std::vector<double> ker_x, ker_y;
    std::string ker_mode = "weighted";
    ker_w.add(reg, c_ker);
    reg.add(c_ker, "n", ker_n, "kernel degree cutoff");
    reg.add(c_ker, "x", ker_x, "x points")->delimiter(',')->required();
    reg.add(c_ker, "y", ker_y, "y points (default: x)")->delimiter(',');
    reg.add(c_ker, "mode", ker_mode, "weighted or plain")->check(CLI::IsMember({"weighted", "plain"}));

    // gap
    auto* c_gap = app.add_subcommand("gap", "gap probability det(I - K) on an interval");
    WeightOpts gap_w;
    int gap_n = 4, gap_order = 40;
    std::vector<double> gap_interval;
    double gap_tol = 1e-8;
    gap_w.add(reg, c_gap);
    reg.add(c_gap, "n", gap_n, "kernel degree cutoff");
    reg.add(c_gap, "interval", gap_interval, "a,b")->delimiter(',')->required()->expected(2);
    reg.add(c_gap, "order", gap_order, "initial quadrature order");
    reg.add(c_gap, "tol", gap_tol, "convergence tolerance between doublings");

    // rmt avg-char
    auto* c_rmt = app.add_subcommand("rmt", "random matrix ensembles");
    c_rmt->require_subcommand(1, 1);
    auto* c_avg = c_rmt->add_subcommand("avg-char", "Monte Carlo E det(x - M) against the exact polynomial");
    std::string rmt_kind = "gue";
    int rmt_n = 3, rmt_m = 0, rmt_k = 0, rmt_workers = 1;
    double rmt_sigma = 1.0;
    std::vector<double> rmt_source;
    long rmt_samples = 100000;
    std::string rmt_conv = "published";
    reg.add(c_avg, "kind", rmt_kind, "gue, wigner, wishart, truncated_unitary, external_source");
    reg.add(c_avg, "n", rmt_n, "matrix size");
    reg.add(c_avg, "m", rmt_m, "wishart columns / truncated_unitary rows");
    reg.add(c_avg, "k", rmt_k, "truncated_unitary: extra Haar dimension");
    reg.add(c_avg, "sigma", rmt_sigma, "wigner entry scale");
    reg.add(c_avg, "source", rmt_source, "external_source eigenvalues")->delimiter(',');
    reg.add(c_avg, "samples", rmt_samples, "Monte Carlo samples");
    reg.add(c_avg, "workers", rmt_workers, "worker threads (results do not depend on it)");
    reg.add(c_avg, "convention", rmt_conv, "published or complex_gaussian (wishart)")
        ->check(CLI::IsMember({"published", "complex_gaussian"}));

    // mop nnrr
    auto* c_mop = app.add_subcommand("mop", "multiple orthogonal polynomials");
    c_mop->require_subcommand(1, 1);
    auto* c_nnrr = c_mop->add_subcommand("nnrr", "nearest-neighbour recurrence coefficients on a box");
    std::string mop_family;
    std::vector<double> mop_c, mop_alpha;
    double mop_alpha0 = 0, mop_beta = 0;
    std::string mop_box = "3x3", mop_method = "auto";
    reg.add(c_nnrr, "family", mop_family, "mhermite, mlaguerre1, mlaguerre2, jpineiro")->required();
    reg.add(c_nnrr, "c", mop_c, "c_1..c_r")->delimiter(',');
    reg.add(c_nnrr, "alpha", mop_alpha, "alpha_1..alpha_r")->delimiter(',');
    reg.add(c_nnrr, "alpha0", mop_alpha0, "mlaguerre2 common alpha");
    reg.add(c_nnrr, "beta", mop_beta, "jpineiro beta");
    reg.add(c_nnrr, "box", mop_box, "index box, e.g. 4x4 (n_j < 4)");
    reg.add(c_nnrr, "method", mop_method, "auto, closed or numeric")
        ->check(CLI::IsMember({"auto", "closed", "numeric"}));

    // dp1
    auto* c_dp1 = app.add_subcommand("dp1", "positive solution of discrete Painleve I (Freud weight)");
    double dp1_t = 0, dp1_tol = 1e-12;
    int dp1_n = 100;
    reg.add(c_dp1, "t", dp1_t, "Freud parameter t");
    reg.add(c_dp1, "n", dp1_n, "number of rows");
    reg.add(c_dp1, "tol", dp1_tol, "sup-norm tolerance");

    // dp2
    auto* c_dp2 = app.add_subcommand("dp2", "Verblunsky coefficients of e^{t cos theta} and the dPII residual");
    double dp2_t = 1;
    int dp2_n = 10;
    std::string dp2_source = "szego";
    reg.add(c_dp2, "t", dp2_t, "t (nonzero)");
    reg.add(c_dp2, "n", dp2_n, "rows n = 0..N-1");
    reg.add(c_dp2, "source", dp2_source, "szego or determinant")->check(CLI::IsMember({"szego", "determinant"}));

    // lattice
    auto* c_lat = app.add_subcommand("lattice", "Toda / Langmuir / Ablowitz-Ladik flows, two routes");
    WeightOpts lat_w;
    std::string lat_lattice = "toda";
    std::vector<double> lat_span{0, 0.5};
    int lat_n = 6, lat_steps = 10;
    double lat_h = 1e-4;
    lat_w.add(reg, c_lat);
    reg.add(c_lat, "lattice", lat_lattice, "toda, langmuir, ablowitz_ladik");
    reg.add(c_lat, "span", lat_span, "t0,t1")->delimiter(',')->expected(2);
    reg.add(c_lat, "n", lat_n, "reported indices");
    reg.add(c_lat, "steps", lat_steps, "grid intervals");
    reg.add(c_lat, "h", lat_h, "finite-difference step");

    // ode
    auto* c_ode = app.add_subcommand("ode", "Painleve ODE residual by finite differences");
    std::string ode_q = "p4_freud", ode_stencil = "three_point";
    int ode_n = 3;
    double ode_t = 0, ode_h = 1e-3;
    std::optional<double> ode_alpha, ode_beta;
    reg.add(c_ode, "quantity", ode_q, "p4_freud, p5_charlier, p5_opuc, p3_chen_its, p5_bce");
    reg.add(c_ode, "n", ode_n, "index n");
    reg.add(c_ode, "t", ode_t, "t");
    reg.add(c_ode, "h", ode_h, "finite-difference step");
    reg.add(c_ode, "alpha", ode_alpha, "alpha (chen_its, bce)");
    reg.add(c_ode, "beta", ode_beta, "beta (charlier, bce)");
    reg.add(c_ode, "stencil", ode_stencil, "three_point or five_point")
        ->check(CLI::IsMember({"three_point", "five_point"}));

    // probe
    auto* c_pr = app.add_subcommand("probe", "singularity confinement of the dPI map");
    int pr_n = 10;
    std::vector<double> pr_eps{1e-3, 1e-4, 1e-5, 1e-6};
    double pr_prev = 0.5;
    reg.add(c_pr, "n", pr_n, "index n of the near-zero entry");
    reg.add(c_pr, "eps", pr_eps, "x_n values")->delimiter(',');
    reg.add(c_pr, "x-prev", pr_prev, "x_{n-1}");

    // wronskian
    auto* c_wr = app.add_subcommand("wronskian", "Hankel-Wronskian identities against the moment route");
    std::string wr_base = "gaussian";
    double wr_t = 0.5, wr_h = 0.05;
    int wr_n = 4;
    reg.add(c_wr, "base", wr_base, "gaussian or freud");
    reg.add(c_wr, "t", wr_t, "t");
    reg.add(c_wr, "n", wr_n, "rows n = 0..N");
    reg.add(c_wr, "h", wr_h, "sampling step of the seed derivatives");

    auto usage = [&](const CLI::App* a) { return (a ? a : &app)->help(); };

    // The leaf subcommand, for usage text when parsing succeeded only partially.
    auto leaf = [&]() -> const CLI::App* {
        const CLI::App* cur = &app;
        for (;;) {
            auto subs = cur->get_subcommands();
            if (subs.empty()) return cur;
            cur = subs.front();
        }
    };

    try {
        if (auto path = config_path(args)) {
            for (const auto& [k, v] : read_config(*path))
                if (!has_flag(args, k)) args.push_back("--" + k + "=" + v);
        }
        if (!has_flag(args, "precision-bits"))
            if (auto v = env("OPX_PRECISION_BITS")) args.push_back("--precision-bits=" + *v);
    } catch (const validation_error& e) {
        err << "error: " << e.what() << "\n" << usage(nullptr);
        return 2;
    }

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << usage(leaf());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (!args.empty() && args[0].rfind("-", 0) != 0 && !app.get_subcommand_no_throw(args[0]))
            err << "error: unknown command '" << args[0] << "'\n" << usage(nullptr);
        else
            err << "error: " << e.what() << "\n" << usage(leaf());
        return 2;
    }

    const CLI::App* cmd = leaf();
    std::string command = cmd->get_name();
    if (cmd->get_parent() != &app) command = cmd->get_parent()->get_name() + " " + command;

    const auto t_start = std::chrono::steady_clock::now();
    Report r;
    std::string default_format = "csv";
    try {
        const unsigned bits = effective_bits(precision_bits);
        const std::string bits_s = std::to_string(bits);

        if (cmd == c_mom) {
            require(mom_count >= 1, "--count must be >= 1");
            Weight w = mom_w.build();
            with_precision(precision_bits, [&]<class Real>() {
                auto m = compute_moments<Real>(w, mom_count);
                r.columns = {"k", "m_k"};
                for (int k = 0; k < mom_count; ++k) r.rows.push_back(row(k, m.values[k]));
                r.result = moments_json(m);
                r.summary = {{"provenance", m.provenance}, {"error_estimate", format_double(m.error_estimate)}};
            });
            r.precision_used = bits_s;
        } else if (cmd == c_rec) {
            require(rec_n >= 1, "--n must be >= 1");
            Weight w = rec_w.build();
            with_precision(precision_bits, [&]<class Real>() {
                auto rec = recurrence_for<Real>(w, rec_n);
                r.columns = {"n", "a_sq", "b"};
                for (int n = 0; n < rec_n; ++n) r.rows.push_back(row(n, rec.a_sq[n], rec.b[n]));
                r.result = recurrence_json(rec);
                r.summary = {{"m0", format_real(rec.m0)}};
            });
            r.precision_used = bits_s;
        } else if (cmd == c_ker) {
            Weight w = ker_w.build();
            auto k = make_kernel(w, ker_n, ker_mode == "plain" ? KernelMode::plain : KernelMode::weighted,
                                 precision_bits);
            const auto& ys = ker_y.empty() ? ker_x : ker_y;
            r.columns = {"x", "y", "K"};
            r.result = json::array();
            for (double x : ker_x)
                for (double y : ys) {
                    double v = cd_kernel(k, x, y);
                    r.rows.push_back(row(x, y, v));
                    r.result.push_back({{"x", jnum(x)}, {"y", jnum(y)}, {"K", jnum(v)}});
                }
            r.precision_used = bits_s;
        } else if (cmd == c_gap) {
            default_format = "json";
            Weight w = gap_w.build();
            auto k = make_kernel(w, gap_n, KernelMode::weighted, precision_bits);
            auto q = gap_probability(k, gap_interval[0], gap_interval[1], gap_order, gap_tol);
            r.columns = {"order", "value"};
            for (std::size_t i = 0; i < q.values.size(); ++i) r.rows.push_back(row(q.order_sequence[i], q.values[i]));
            r.result = q;
            r.summary = {{"converged", q.converged ? "true" : "false"},
                         {"result", format_double(q.result)},
                         {"expected_count", format_double(expected_count(k, gap_interval[0], gap_interval[1]))}};
            r.precision_used = bits_s;
        } else if (cmd == c_avg) {
            EnsembleSpec spec;
            switch (ensemble_kind_from_string(rmt_kind)) {
            case EnsembleKind::gue: spec = EnsembleSpec::gue(rmt_n); break;
            case EnsembleKind::wigner: spec = EnsembleSpec::wigner(rmt_n, rmt_sigma); break;
            case EnsembleKind::wishart: spec = EnsembleSpec::wishart(rmt_n, rmt_m); break;
            case EnsembleKind::truncated_unitary: spec = EnsembleSpec::truncated_unitary(rmt_m, rmt_n, rmt_k); break;
            case EnsembleKind::external_source:
                require(!rmt_source.empty(), "external_source needs --source");
                spec = EnsembleSpec::external_source(rmt_source);
                break;
            }
            spec.validate();
            require(rmt_workers >= 1, "--workers must be >= 1");
            auto est = avg_char_poly_mc(spec, rmt_samples, static_cast<std::uint64_t>(seed), rmt_workers);
            std::vector<double> exact;
            if (has_prediction(spec))
                exact = exact_avg_char_poly(spec, rmt_conv == "published" ? WishartConvention::published
                                                                          : WishartConvention::complex_gaussian);
            r.columns = {"coeff_index", "mc_mean", "mc_stderr", "exact", "z_score"};
            double max_z = 0;
            for (int i = 0; i <= est.degree; ++i) {
                double ex = exact.empty() ? std::nan("") : exact[i];
                double diff = est.coeff_means[i] - ex;
                double z = est.coeff_stderrs[i] > 0 ? diff / est.coeff_stderrs[i] : (diff == 0 ? 0.0 : std::nan(""));
                if (std::isfinite(z)) max_z = std::max(max_z, std::abs(z));
                r.rows.push_back(row(i, est.coeff_means[i], est.coeff_stderrs[i], ex, z));
            }
            r.result = {{"spec", spec}, {"estimate", est}, {"exact", jarray(exact)}};
            r.summary = {{"max_abs_z", format_double(max_z)}, {"has_prediction", exact.empty() ? "false" : "true"}};
            r.precision_used = "53";
        } else if (cmd == c_nnrr) {
            MopFamily f;
            f.kind = mop_family_kind_from_string(mop_family);
            f.c = mop_c;
            f.alpha = mop_alpha;
            f.alpha0 = mop_alpha0;
            f.beta = mop_beta;
            f.validate();
            auto box = parse_box(mop_box);
            const int r_ = f.r();
            require(static_cast<int>(box.size()) == r_,
                    "--box has " + std::to_string(box.size()) + " sizes but the family has r = " + std::to_string(r_));
            if (mop_method == "auto") mop_method = f.kind == MopFamilyKind::jacobi_pineiro ? "numeric" : "closed";
            const std::string method = mop_method;
            require(!(method == "closed" && f.kind == MopFamilyKind::jacobi_pineiro),
                    "jpineiro has no closed-form coefficients; use --method numeric");
            NNRRField field;
            if (method == "closed") {
                field = closed_form_nnrr_field(f);
                r.precision_used = "53";
            } else {
                int sum = 0, mx = 0;
                for (int b : box) {
                    sum += b;
                    mx = std::max(mx, b);
                }
                const int max_order = sum + mx + 2;
                field = with_precision(precision_bits, [&]<class Real>() {
                    return numeric_nnrr_field(make_family_system<Real>(f, max_order));
                });
                r.precision_used = bits_s;
            }
            r.columns.clear();
            for (int j = 1; j <= r_; ++j) r.columns.push_back("n" + std::to_string(j));
            for (const char* c : {"j", "a_nj", "b_nj", "pde_residual"}) r.columns.push_back(c);
            r.result = {{"family", f}, {"box", box}, {"method", method}, {"coefficients", json::array()}};
            double worst = 0;
            std::vector<int> idx(r_, 0);
            for (;;) {
                MultiIndex n(idx);
                auto cn = field(n);
                double pde = compatibility_at(field, n).max_residual;
                worst = std::max(worst, pde);
                for (int j = 0; j < r_; ++j) {
                    std::vector<std::string> cells;
                    for (int v : idx) cells.push_back(std::to_string(v));
                    for (auto& s : row(j + 1, cn.a[j], cn.b[j], pde)) cells.push_back(s);
                    r.rows.push_back(cells);
                }
                json c = nnrr_json(cn);
                c["pde_residual"] = jnum(pde);
                r.result["coefficients"].push_back(c);
                // last component fastest
                int p = r_ - 1;
                while (p >= 0 && ++idx[p] >= box[p]) idx[p--] = 0;
                if (p < 0) break;
            }
            r.summary = {{"max_pde_residual", format_double(worst)}};
        } else if (cmd == c_dp1) {
            auto s = dp1_positive_solution(dp1_t, dp1_n, dp1_tol);
            r.columns = {"n", "x_n", "a_n", "a_n/n^(1/4)"};
            for (int n = 1; n <= dp1_n; ++n) {
                double a = std::sqrt(s.x[n]);
                r.rows.push_back(row(n, s.x[n], a, a / std::pow(double(n), 0.25)));
            }
            r.result = s;
            r.summary = {{"iterations", std::to_string(s.iterations)},
                         {"newton_steps", std::to_string(s.newton_steps)},
                         {"residual", format_double(s.residual)}};
            r.precision_used = "53";
        } else if (cmd == c_dp2) {
            require(dp2_n >= 2, "--n must be >= 2");
            auto src = dp2_source == "szego" ? VerblunskySource::szego_recurrence : VerblunskySource::moment_determinant;
            with_precision(precision_bits, [&]<class Real>() {
                auto seq = verblunsky_sequence<Real>(dp2_t, dp2_n, src);
                auto rep = dp2_residual(seq);
                r.columns = {"n", "alpha_n", "dp2_residual"};
                for (int n = 0; n < dp2_n; ++n) r.rows.push_back(row(n, seq.alphas[n], rep.residuals[n]));
                r.result = {{"sequence", verblunsky_json(seq)}, {"residuals", jarray(rep.residuals)}};
                r.summary = {{"max_residual", format_double(rep.max_residual)},
                             {"worst_index", std::to_string(rep.worst_index)},
                             {"route_discrepancy", format_double(seq.route_discrepancy)}};
            });
            r.precision_used = bits_s;
        } else if (cmd == c_lat) {
            Weight w = lat_w.build();
            auto rep = lattice_flow(w, lattice_from_string(lat_lattice), lat_span[0], lat_span[1], lat_n, lat_steps,
                                    lat_h);
            r.columns = {"t", "fd_residual", "route_discrepancy"};
            for (std::size_t i = 0; i < rep.moment_route.size(); ++i)
                r.rows.push_back(row(rep.moment_route[i].t, rep.fd_residuals[i],
                                     state_distance(rep.moment_route[i], rep.ode_route[i])));
            r.result = rep;
            r.summary = {{"max_fd_residual", format_double(rep.max_fd_residual)},
                         {"max_discrepancy", format_double(rep.max_discrepancy)},
                         {"buffer", std::to_string(rep.buffer)},
                         {"substeps", std::to_string(rep.substeps)}};
            r.precision_used = "256,1024";
        } else if (cmd == c_ode) {
            default_format = "json";
            std::map<std::string, double> params;
            if (ode_alpha) params["alpha"] = *ode_alpha;
            if (ode_beta) params["beta"] = *ode_beta;
            auto res = painleve_ode_residual(painleve_quantity_from_string(ode_q), ode_n, ode_t, ode_h, params,
                                             ode_stencil == "five_point" ? Stencil::five_point : Stencil::three_point);
            r.columns = {"quantity", "n", "t", "h", "y", "dy", "d2y", "rhs", "residual"};
            r.rows.push_back(row(to_string(res.quantity), res.n, res.t, res.h, res.y, res.dy, res.d2y, res.rhs,
                                 res.residual));
            r.result = res;
            r.summary = {{"residual", format_double(res.residual)}};
            r.precision_used = "256";
        } else if (cmd == c_pr) {
            require(!pr_eps.empty(), "--eps needs at least one value");
            std::vector<SingularityProbe> probes;
            if (pr_eps.size() >= 2) {
                auto sl = singularity_slopes(pr_n, pr_prev, pr_eps);
                probes = sl.probes;
                r.summary = {{"exact_slope3", render(sl.exact_slope3)},
                             {"exact_slope4", render(sl.exact_slope4)},
                             {"printed_slope3", render(sl.printed_slope3)},
                             {"printed_slope4", render(sl.printed_slope4)}};
            } else {
                probes.push_back(singularity_probe(pr_n, pr_eps[0], pr_prev));
            }
            r.columns = {"eps", "x_n+1", "x_n+2", "x_n+3", "x_n+4", "printed_r3", "printed_r4", "exact_r3",
                         "exact_r4", "leading_rel_error"};
            r.result = json::array();
            for (const auto& p : probes) {
                r.rows.push_back(row(p.eps, p.x[0], p.x[1], p.x[2], p.x[3], p.printed_r3, p.printed_r4, p.exact_r3,
                                     p.exact_r4, p.leading_rel_error));
                r.result.push_back(p);
            }
            r.precision_used = "256";
        } else if (cmd == c_wr) {
            require(wr_n >= 0, "--n must be >= 0");
            auto base = wronskian_base_from_string(wr_base);
            r.columns = {"n", "a_sq", "b", "moment_a_sq", "moment_b", "discrepancy"};
            r.result = json::array();
            double worst = 0;
            for (int n = 0; n <= wr_n; ++n) {
                auto w = wronskian_identities(base, wr_t, n, wr_h);
                r.rows.push_back(row(n, w.a_sq, w.b, w.moment_a_sq, w.moment_b, w.discrepancy));
                r.result.push_back(w);
                worst = std::max(worst, w.discrepancy);
            }
            r.summary = {{"max_discrepancy", format_double(worst)}};
            r.precision_used = "128";
        }
    } catch (const validation_error& e) {
        err << "error: " << e.what() << "\n" << usage(cmd);
        return 2;
    } catch (const numerical_error& e) {
        json diag = {{"error", "numerical_error"}, {"command", command}, {"kind", e.kind()},
                     {"message", e.what()},        {"achieved", jnum(e.achieved())}, {"index", e.index()}};
        err << diag.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        json diag = {{"error", "numerical_error"}, {"command", command}, {"kind", "internal"}, {"message", e.what()}};
        err << diag.dump() << "\n";
        return 3;
    }

    if (format.empty()) format = default_format;
    std::vector<std::pair<std::string, std::string>> config{{"precision_bits", std::to_string(precision_bits)},
                                                            {"precision_used", r.precision_used},
                                                            {"seed", std::to_string(seed)},
                                                            {"format", format}};
    if (!config_file.empty()) config.emplace_back("config", config_file);
    for (auto& kv : reg.resolved(cmd)) config.push_back(kv);
    if (timing) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        r.summary.emplace_back("wall_time_s", format_double(secs));
    }

    if (format == "json") write_json(out, command, config, r);
    else write_csv(out, command, config, r);
    return 0;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace opx::cli
