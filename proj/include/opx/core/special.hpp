#pragma once

#include "opx/core/quadrature.hpp"
#include "opx/core/real.hpp"

namespace opx {

// Modified Bessel I_n(t), integer n >= 0, by the ascending series.
template <class Real>
Real bessel_i(int n, const Real& t) {
    require(n >= 0, "bessel_i: order must be nonnegative");
    Real half = t / 2;
    Real term = 1;
    for (int k = 1; k <= n; ++k) term = term * half / k;
    Real sum = term, q = half * half;
    for (int m = 1; m < 100000; ++m) {
        term = term * q / (Real(m) * Real(m + n));
        sum += term;
        if (abs(term) <= epsilon<Real>() * abs(sum)) break;
    }
    return sum;
}

// Parabolic cylinder D_{-1/2}(z) from
//   D_{-1/2}(z) = e^{-z^2/4}/sqrt(pi) * int_0^inf s^{-1/2} e^{-zs - s^2/2} ds,
// with s = u^2 to remove the endpoint singularity.
template <class Real>
Real parabolic_cylinder_dm12(const Real& z) {
    auto f = [&](const Real& u) {
        Real u2 = u * u;
        return 2 * exp(-z * u2 - u2 * u2 / 2);
    };
    Real tol = pow(Real(2), -(mantissa_bits<Real>() * 3) / 4);
    auto q = integrate<Real>(f, Real(0), std::numeric_limits<Real>::infinity(), tol);
    return exp(-z * z / 4) / sqrt(pi<Real>()) * q.value;
}

// m0(t) = int e^{-x^4 + t x^2} dx through the parabolic-cylinder closed form.
// Substituting y = s/sqrt(2) into int_0^inf y^{-1/2} e^{-y^2 + t y} dy puts
// the argument at -t/sqrt(2); valid for all real t.
template <class Real>
Real freud_m0_closed_form(const Real& t) {
    return pow(Real(2), Real(-0.25)) * sqrt(pi<Real>()) * exp(t * t / 8) *
           parabolic_cylinder_dm12<Real>(-t / sqrt(Real(2)));
}

} // namespace opx
