#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "opx/opcore/recurrence.hpp"

namespace opx {

enum class KernelMode { plain, weighted };

// Christoffel-Darboux kernel of degree cutoff n. Evaluation runs in double;
// the coefficients come from a multiprecision moment solve.
struct KernelOperator {
    int n = 1;
    RecurrenceCoefficients<double> recurrence;
    Weight weight;
    KernelMode mode = KernelMode::weighted;
    double switch_tol = 1e-6; // confluent form when |x-y| < switch_tol (1+|x|)
    // kept for determinants of kernel matrices, where near-coincident points cancel badly in double
    std::shared_ptr<const RecurrenceCoefficients<real256>> recurrence_hp;
};

inline KernelOperator make_kernel(const Weight& w, int n, KernelMode mode = KernelMode::weighted,
                                  long precision_bits = 256) {
    require(n >= 1, "kernel degree n must be >= 1");
    require(w.family != Family::opuc_bessel, "opuc_bessel is a unit-circle weight; no real-line kernel");
    KernelOperator k;
    k.n = n;
    k.weight = w;
    k.mode = mode;
    if (precision_bits == 256) {
        auto hp = std::make_shared<const RecurrenceCoefficients<real256>>(recurrence_for<real256>(w, n));
        k.recurrence = hp->template cast<double>();
        k.recurrence_hp = hp;
        return k;
    }
    k.recurrence = with_precision(precision_bits, [&]<class Real>() {
        return recurrence_for<Real>(w, n).template cast<double>();
    });
    return k;
}

inline KernelOperator make_kernel(const RecurrenceCoefficients<double>& rec, int n,
                                  KernelMode mode = KernelMode::weighted) {
    require(n >= 1 && n <= rec.size(), "kernel degree must be in [1, stored coefficients]");
    KernelOperator k;
    k.n = n;
    k.weight = rec.weight;
    k.recurrence = rec;
    k.mode = mode;
    return k;
}

inline double weight_factor(const KernelOperator& k, double x, double y) {
    if (k.mode == KernelMode::plain) return 1.0;
    if (!k.weight.domain().contains(x) || !k.weight.domain().contains(y))
        throw validation_error("cd_kernel: point outside the weight domain in weighted mode");
    return std::sqrt(density<double>(k.weight, x) * density<double>(k.weight, y));
}

// Sum form sum_{k<n} p_k(x) p_k(y) (times sqrt(w(x)w(y)) in weighted mode).
inline double cd_kernel_sum(const KernelOperator& k, double x, double y) {
    const double wf = weight_factor(k, x, y);
    if (wf == 0) return 0.0;
    auto px = eval_poly(k.recurrence, k.n - 1, x, Normalization::orthonormal);
    auto py = eval_poly(k.recurrence, k.n - 1, y, Normalization::orthonormal);
    double s = 0;
    for (int i = 0; i < k.n; ++i) s += px[i] * py[i];
    return s * wf;
}

// Christoffel-Darboux closed form, confluent form near the diagonal.
inline double cd_kernel(const KernelOperator& k, double x, double y) {
    require(k.n >= 1, "cd_kernel: degree must be >= 1");
    const int n = k.n;
    const double an = std::sqrt(k.recurrence.a_sq[n]);
    const double wf = weight_factor(k, x, y);
    if (wf == 0) return 0.0; // also keeps far-tail quadrature nodes from overflowing
    double v;
    if (std::abs(x - y) > k.switch_tol * (1 + std::abs(x))) {
        auto px = eval_poly(k.recurrence, n, x, Normalization::orthonormal);
        auto py = eval_poly(k.recurrence, n, y, Normalization::orthonormal);
        v = an * (px[n] * py[n - 1] - px[n - 1] * py[n]) / (x - y);
    } else {
        // evaluated at the midpoint the O(|x-y|) term cancels
        double z = 0.5 * (x + y);
        auto [p, d] = eval_poly_with_derivative(k.recurrence, n, z, Normalization::orthonormal);
        v = an * (d[n] * p[n - 1] - d[n - 1] * p[n]);
    }
    return v * wf;
}

} // namespace opx
