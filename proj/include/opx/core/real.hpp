#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>

#include "opx/core/error.hpp"

namespace opx {

using std::abs;
using std::exp;
using std::log;
using std::pow;
using std::sqrt;

template <unsigned Bits>
using mp_real = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<Bits, boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;

using real128 = mp_real<128>;
using real256 = mp_real<256>;
using real512 = mp_real<512>;
using real1024 = mp_real<1024>;

template <class Real>
constexpr int mantissa_bits() {
    return std::numeric_limits<Real>::digits;
}

template <class Real>
Real epsilon() {
    return std::numeric_limits<Real>::epsilon();
}

template <class Real>
Real pi() {
    return boost::math::constants::pi<Real>();
}

template <class Real>
Real from_double(double v) {
    return Real(v);
}

template <class Real>
Real from_string(const std::string& s) {
    if constexpr (std::is_floating_point_v<Real>) {
        return static_cast<Real>(std::stold(s));
    } else {
        return Real(s);
    }
}

template <class Real>
double to_double(const Real& v) {
    if constexpr (std::is_floating_point_v<Real>) {
        return static_cast<double>(v);
    } else {
        return v.template convert_to<double>();
    }
}

// Shortest decimal that still pins down the binary value.
template <class Real>
std::string to_decimal(const Real& v) {
    std::ostringstream os;
    os.precision(std::numeric_limits<Real>::max_digits10);
    os << v;
    return os.str();
}

// Decimal rendering with a fixed number of significant digits (used for
// human-facing CSV; JSON keeps full precision).
template <class Real>
std::string to_decimal(const Real& v, int digits) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

template <class Real>
Real tgamma(const Real& x) {
    return boost::math::tgamma(x);
}

template <class Real>
Real lgamma(const Real& x) {
    return boost::math::lgamma(x);
}

template <class Real>
Real beta(const Real& a, const Real& b) {
    return boost::math::beta(a, b);
}

// Generalized binomial C(x, k) for real x, integer k >= 0.
template <class Real>
Real binom(const Real& x, int k) {
    Real r = 1;
    for (int i = 0; i < k; ++i) r = r * (x - i) / (i + 1);
    return r;
}

// Rising factorial (x)_k.
template <class Real>
Real pochhammer(const Real& x, int k) {
    Real r = 1;
    for (int i = 0; i < k; ++i) r *= (x + i);
    return r;
}

template <class Real>
Real factorial(int k) {
    Real r = 1;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

inline constexpr unsigned supported_bits[] = {128, 256, 512, 1024};

// Round a requested precision up to a compiled width.
inline unsigned effective_bits(long requested) {
    if (requested < 53 || requested > 1024)
        throw validation_error("precision_bits must be in [53, 1024], got " + std::to_string(requested));
    for (unsigned b : supported_bits)
        if (requested <= static_cast<long>(b)) return b;
    return 1024;
}

// Calls f.template operator()<Real>() with the mp type matching bits.
template <class F>
decltype(auto) with_precision(long requested_bits, F&& f) {
    switch (effective_bits(requested_bits)) {
    case 128: return f.template operator()<real128>();
    case 256: return f.template operator()<real256>();
    case 512: return f.template operator()<real512>();
    default: return f.template operator()<real1024>();
    }
}

} // namespace opx
