#pragma once

#include <cstdint>

namespace decayrate {

/// Arithmetic tally filled by the instrumented estimator overloads.
/// Divisions are counted as multiplications.
struct OpCount {
    std::uint64_t multiplies = 0;
    std::uint64_t transcendentals = 0;  ///< exp/log/sqrt calls
};

namespace detail {

struct PlainArith {
    static double mul(double a, double b) noexcept { return a * b; }
    static double div(double a, double b) noexcept { return a / b; }
    static void transcendental(unsigned = 1) noexcept {}
};

struct CountingArith {
    OpCount* count;
    double mul(double a, double b) const noexcept {
        ++count->multiplies;
        return a * b;
    }
    double div(double a, double b) const noexcept {
        ++count->multiplies;
        return a / b;
    }
    void transcendental(unsigned k = 1) const noexcept { count->transcendentals += k; }
};

}  // namespace detail
}  // namespace decayrate
