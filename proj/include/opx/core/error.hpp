#pragma once

#include <stdexcept>
#include <string>

namespace opx {

// Bad input: parameters out of range, size mismatch, unknown family.
// The CLI maps this to exit code 2.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Something numerical did not work out. Exit code 3.
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& what, std::string kind, double achieved = 0.0, long index = -1)
        : std::runtime_error(what), kind_(std::move(kind)), achieved_(achieved), index_(index) {}

    const std::string& kind() const { return kind_; }
    double achieved() const { return achieved_; }
    long index() const { return index_; }

private:
    std::string kind_;
    double achieved_;
    long index_;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw validation_error(msg);
}

inline numerical_error divergent_moment(const std::string& family, const std::string& detail) {
    return numerical_error("divergent moment for " + family + ": " + detail, "divergent_moment");
}

inline numerical_error hankel_degenerate(long index) {
    return numerical_error("Hankel determinant D_" + std::to_string(index) + " vanishes at working precision",
                           "hankel_degenerate", 0.0, index);
}

inline numerical_error no_convergence(const std::string& what, double achieved) {
    return numerical_error(what + " did not converge (achieved " + std::to_string(achieved) + ")",
                           "no_convergence", achieved);
}

} // namespace opx
