#pragma once

// Brute-force references used only by the tests. Nothing here shares code
// with the estimators or the bound routines it checks.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

/// Noiseless Gaussian log-likelihood with sigma_v2 replaced by its ML value
/// (1/N) sum f^2 e^{2 n rho}, evaluated with plain exponentials.
inline double concentrated_ml_loglik(std::span<const double> f, double rho) {
    const double n = static_cast<double>(f.size());
    double s = 0.0, sum_n = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        s += f[k] * f[k] * std::exp(2.0 * rho * static_cast<double>(k));
        sum_n += static_cast<double>(k);
    }
    const double sigma2 = s / n;
    return -0.5 * (n * std::log(2.0 * std::numbers::pi) + n * std::log(sigma2) - 2.0 * rho * sum_n + n);
}

/// Full Gaussian log-likelihood of f with variance v e^{-2 n rho} + d.
inline double gaussian_loglik(std::span<const double> f, double rho, double v, double d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double s2 = v * std::exp(-2.0 * rho * static_cast<double>(k)) + d;
        acc += std::log(2.0 * std::numbers::pi * s2) + f[k] * f[k] / s2;
    }
    return -0.5 * acc;
}

/// Early-window variance with the noise contribution removed, clamped at 0.
inline double early_window_variance(std::span<const double> f, std::size_t n_l, double rho, double d) {
    double acc = 0.0, weight = 0.0;
    for (std::size_t k = 0; k < n_l; ++k) {
        const double g = std::exp(2.0 * rho * static_cast<double>(k));
        acc += f[k] * f[k] * g;
        weight += g;
    }
    const double v = acc / static_cast<double>(n_l) - d * weight / static_cast<double>(n_l);
    return v > 0.0 ? v : 0.0;
}

inline std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> g;
    for (std::size_t i = 0;; ++i) {
        const double x = lo + step * static_cast<double>(i);
        if (x > hi + 1e-15) break;
        g.push_back(x);
    }
    return g;
}

template <class Fn>
double grid_argmax(const std::vector<double>& candidates, Fn objective) {
    double best = candidates.front();
    double best_val = -std::numeric_limits<double>::infinity();
    for (const double x : candidates) {
        const double v = objective(x);
        if (v > best_val) {
            best_val = v;
            best = x;
        }
    }
    return best;
}

/// Hessian of theta -> E_{theta0}[loglik(theta)] at theta0 over
/// (rho, sigma_v2, sigma_d2), by central differences applied term by term
/// with a step scaled to each term. E[f^2(n)] = s_n^2(theta0).
inline std::array<std::array<double, 3>, 3> expected_loglik_hessian_fd(double rho, double sv, double sd,
                                                                       std::size_t n) {
    std::array<std::array<double, 3>, 3> h{};
    for (std::size_t k = 0; k < n; ++k) {
        const double nk = static_cast<double>(k);
        const double s0 = sv * std::exp(-2.0 * nk * rho) + sd;
        const auto term = [&](const std::array<double, 3>& th) {
            const double s = th[1] * std::exp(-2.0 * nk * th[0]) + th[2];
            return -0.5 * (std::log(s) + s0 / s);
        };
        const std::array<double, 3> theta{rho, sv, sd};
        const std::array<double, 3> step{1e-4 / (2.0 * nk + 1.0), 1e-4 * sv, 1e-4 * s0};
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = i; j < 3; ++j) {
                double val = 0.0;
                if (i == j) {
                    auto p = theta, m = theta;
                    p[i] += step[i];
                    m[i] -= step[i];
                    val = (term(p) - 2.0 * term(theta) + term(m)) / (step[i] * step[i]);
                } else {
                    auto pp = theta, pm = theta, mp = theta, mm = theta;
                    pp[i] += step[i], pp[j] += step[j];
                    pm[i] += step[i], pm[j] -= step[j];
                    mp[i] -= step[i], mp[j] += step[j];
                    mm[i] -= step[i], mm[j] -= step[j];
                    val = (term(pp) - term(pm) - term(mp) + term(mm)) / (4.0 * step[i] * step[j]);
                }
                h[i][j] += val;
                if (i != j) h[j][i] += val;
            }
        }
    }
    return h;
}

/// Solves a 3x3 system by Cramer's rule.
inline std::array<double, 3> cramer3(const std::array<std::array<double, 3>, 3>& a, const std::array<double, 3>& b) {
    const auto det = [](const std::array<std::array<double, 3>, 3>& m) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det(a);
    std::array<double, 3> x{};
    for (std::size_t c = 0; c < 3; ++c) {
        auto m = a;
        for (std::size_t r = 0; r < 3; ++r) m[r][c] = b[r];
        x[c] = det(m) / d;
    }
    return x;
}

}  // namespace oracle
