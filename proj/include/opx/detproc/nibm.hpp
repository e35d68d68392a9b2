#pragma once

#include <cmath>
#include <vector>

#include "opx/core/quadrature.hpp"
#include "opx/mop/mop.hpp"

namespace opx {

enum class NibmEndpoints { single, double_ };

struct NibmKernelSpec {
    int n = 1;
    double t = 0.5;
    NibmEndpoints endpoints = NibmEndpoints::single;
    double b = 0; // double mode: half of the paths end at -b, half at +b

    void validate() const {
        require(n >= 1, "nibm: n must be >= 1");
        require(t > 0 && t < 1, "nibm: t must lie in (0, 1)");
        if (endpoints == NibmEndpoints::double_) {
            require(n % 2 == 0, "nibm: n must be even for double endpoints");
            require(b != 0, "nibm: double endpoints need b != 0");
        }
    }
};

// Kernel of n non-intersecting Brownian bridges at time t.
// single: e^{-x^2/4t - y^2/4(1-t)} sum_{k<n} h_k(x/sqrt(2t)) h_k(y/sqrt(2(1-t))),
//         h_k orthonormal for e^{-x^2}, exactly as displayed (no normalization).
// double: same prefactor with P_{n_k}(u) Q_{n_{k+1}}(v) along the stepline of the
//         multiple Hermite system for e^{-x^2 -+ 2bx}; Q is taken relative to the
//         base e^{-x^2} and evaluated at the scaled y. The overall constant is fixed
//         so that int K(x,x) dx = n.
class NibmKernel {
public:
    explicit NibmKernel(const NibmKernelSpec& spec) : spec_(spec) {
        spec.validate();
        if (spec.endpoints == NibmEndpoints::double_) build_double();
    }

    const NibmKernelSpec& spec() const { return spec_; }
    double normalization() const { return Z_; }

    double operator()(double x, double y) const {
        const double t = spec_.t;
        const double u = x / std::sqrt(2 * t), v = y / std::sqrt(2 * (1 - t));
        const double pref = std::exp(-x * x / (4 * t) - y * y / (4 * (1 - t)));
        if (pref == 0) return 0.0;
        if (spec_.endpoints == NibmEndpoints::single) {
            // orthonormal Hermite recurrence: h_{k+1} = sqrt(2/(k+1)) x h_k - sqrt(k/(k+1)) h_{k-1}
            double hu0 = std::pow(M_PI, -0.25), hv0 = hu0, hu1 = 0, hv1 = 0, s = 0;
            for (int k = 0; k < spec_.n; ++k) {
                s += hu0 * hv0;
                double nu = std::sqrt(2.0 / (k + 1)) * u * hu0 - std::sqrt(double(k) / (k + 1)) * hu1;
                double nv = std::sqrt(2.0 / (k + 1)) * v * hv0 - std::sqrt(double(k) / (k + 1)) * hv1;
                hu1 = hu0;
                hv1 = hv0;
                hu0 = nu;
                hv0 = nv;
            }
            return pref * s;
        }
        double s = 0;
        for (int k = 0; k < spec_.n; ++k) {
            double qv = 0;
            for (std::size_t j = 0; j < c_.size(); ++j) qv += A_[k][j](v) * std::exp(c_[j] * v);
            s += P_[k](u) * qv;
        }
        return Z_ * pref * s;
    }

private:
    void build_double() {
        const int h = spec_.n / 2;
        c_ = {-2 * spec_.b, 2 * spec_.b};
        auto sys = make_system<real256>({Weight::hermite(1.0, c_[0]), Weight::hermite(1.0, c_[1])},
                                        SystemClass::at_system, 2 * spec_.n + 2);
        MultiIndex target{h, h};
        auto path = stepline_path(target);
        MultiIndex cur = MultiIndex::zero(2);
        for (int step : path) {
            MultiIndex next = cur.plus(step);
            P_.push_back(solve_type_ii(sys, cur).p.template cast<double>());
            auto Q = solve_type_i(sys, next);
            std::vector<Polynomial<double>> A;
            for (const auto& a : Q.A) A.push_back(a.template cast<double>());
            A_.push_back(A);
            cur = next;
        }
        Z_ = 1.0;
        double err = 0;
        double trace = integrate_de([&](double x) { return (*this)(x, x); }, -std::numeric_limits<double>::infinity(),
                                    std::numeric_limits<double>::infinity(), 1e-13, &err);
        require(trace != 0, "nibm: degenerate kernel trace");
        Z_ = spec_.n / trace;
    }

    NibmKernelSpec spec_;
    double Z_ = 1.0;
    std::vector<double> c_;
    std::vector<Polynomial<double>> P_;
    std::vector<std::vector<Polynomial<double>>> A_;
};

inline double nibm_kernel(const NibmKernelSpec& spec, double x, double y) { return NibmKernel(spec)(x, y); }

} // namespace opx
