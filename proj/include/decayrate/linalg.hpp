#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>

namespace decayrate::detail {

/// Solves the dense K x K system `a x = b` by Gaussian elimination with
/// partial pivoting. Returns nullopt when |det| <= rel_tol * prod(|a_ii|) of
/// the input, which for a Gram matrix flags (near) collinear regressors.
/// Every multiply and divide goes through `ops`.
template <std::size_t K, class Ops>
std::optional<std::array<double, K>> solve_pivoted(std::array<std::array<double, K>, K> a,
                                                    std::array<double, K> b, Ops& ops,
                                                    double rel_tol = 1e-12) {
    double diag_scale = 1.0;
    for (std::size_t i = 0; i < K; ++i) diag_scale = ops.mul(diag_scale, std::abs(a[i][i]));

    double det = 1.0;
    for (std::size_t col = 0; col < K; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < K; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) return std::nullopt;
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
            std::swap(b[pivot], b[col]);
            det = -det;
        }
        det = ops.mul(det, a[col][col]);
        for (std::size_t r = col + 1; r < K; ++r) {
            const double factor = ops.div(a[r][col], a[col][col]);
            for (std::size_t c = col + 1; c < K; ++c) a[r][c] -= ops.mul(factor, a[col][c]);
            b[r] -= ops.mul(factor, b[col]);
        }
    }
    if (!(std::abs(det) > ops.mul(rel_tol, diag_scale))) return std::nullopt;

    std::array<double, K> x{};
    for (std::size_t i = K; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < K; ++c) acc -= ops.mul(a[i][c], x[c]);
        x[i] = ops.div(acc, a[i][i]);
    }
    return x;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least-squares line through (x_i, y_i).
template <class XFn, class YFn, class Ops>
std::optional<LineFit> fit_line(std::size_t n, XFn x, YFn y, Ops& ops) {
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x(i);
        my += y(i);
    }
    mx = ops.div(mx, static_cast<double>(n));
    my = ops.div(my, static_cast<double>(n));
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x(i) - mx;
        sxx += ops.mul(dx, dx);
        sxy += ops.mul(dx, y(i) - my);
    }
    if (!(sxx > 0.0)) return std::nullopt;
    LineFit fit;
    fit.slope = ops.div(sxy, sxx);
    fit.intercept = my - ops.mul(fit.slope, mx);
    return fit;
}

template <class XFn, class YFn>
std::optional<LineFit> fit_line(std::size_t n, XFn x, YFn y) {
    struct {
        static double mul(double a, double b) noexcept { return a * b; }
        static double div(double a, double b) noexcept { return a / b; }
    } plain;
    return fit_line(n, x, y, plain);
}

}  // namespace decayrate::detail
