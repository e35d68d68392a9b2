// Recurrence coefficients of a Jacobi weight at two precisions, and the
// Gauss rule they generate.
#include <cstdio>

#include "opx/opcore/recurrence.hpp"

using namespace opx;

int main() {
    const Weight w = Weight::jacobi(0.5, -0.5);
    auto lo = recurrence_for<real128>(w, 12);
    auto hi = recurrence_for<real512>(w, 12);
    std::printf("%3s %24s %24s %12s\n", "n", "a_n^2", "b_n", "|128 - 512|");
    for (int n = 0; n < 12; ++n) {
        double diff = to_double(real512(abs(real512(lo.a_sq[n]) - hi.a_sq[n])));
        std::printf("%3d %24.17g %24.17g %12.3g\n", n, to_double(hi.a_sq[n]), to_double(hi.b[n]), diff);
    }
    auto rule = gauss_rule(hi.template cast<double>(), 6);
    std::printf("\n6-point Gauss rule\n");
    for (std::size_t i = 0; i < rule.x.size(); ++i) std::printf("%22.17f %22.17f\n", rule.x[i], rule.w[i]);
}
