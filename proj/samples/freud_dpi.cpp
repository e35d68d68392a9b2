// Positive solution of d-PI for the Freud weight e^{-x^4 + t x^2}: the
// n^{1/4} scaling and the first entry against Gamma(3/4)/Gamma(1/4).
#include <cmath>
#include <cstdio>

#include "opx/painleve/painleve.hpp"

using namespace opx;

int main() {
    for (double t : {0.0, 1.0, 3.0}) {
        auto s = dp1_positive_solution(t, 1000, 1e-12);
        std::printf("t = %.1f: %d sweeps, %d Newton steps, residual %.2e\n", t, s.iterations, s.newton_steps,
                    s.residual);
        for (int n : {1, 10, 100, 1000})
            std::printf("  n = %4d  x_n = %.12f  a_n / n^(1/4) = %.10f\n", n, s.x[n],
                        std::sqrt(s.x[n]) / std::pow(n, 0.25));
    }
    std::printf("12^(-1/4) = %.10f, Gamma(3/4)/Gamma(1/4) = %.13f\n", std::pow(12.0, -0.25),
                std::tgamma(0.75) / std::tgamma(0.25));
}
