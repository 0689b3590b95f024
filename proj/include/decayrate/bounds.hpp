#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "decayrate/model.hpp"

namespace decayrate {

/// Which parameters besides rho are treated as unknown when inverting.
enum class BoundMode {
    RhoOnly,       ///< sigma_v2 and sigma_d2 known: 1 / I_rho_rho
    Nuisance,      ///< sigma_v2 is a nuisance parameter, sigma_d2 known
    FullNuisance,  ///< both variances are nuisance parameters
};

std::string_view to_string(BoundMode mode) noexcept;

/// Fisher information of N zero-mean Gaussian samples with variance
/// s_n^2 = sigma_v2 e^{-2 n rho} + sigma_d2, over (rho, sigma_v2, sigma_d2):
///   I_jk = 1/2 sum_n s_n^-4 (d s_n^2 / d theta_j)(d s_n^2 / d theta_k).
struct FisherInfo {
    std::array<std::array<double, 3>, 3> matrix{};
    double crb_rho = 0.0;
    std::size_t n = 0;
    BoundMode mode = BoundMode::Nuisance;
};

/// known_noise = true keeps the (rho, sigma_v2) block before inverting.
/// Throws DegenerateInputError (naming the null direction) when the retained
/// block is singular and ParameterError for n < 2 or sigma_v2 <= 0.
FisherInfo fisher_info(const DecayParams& params, std::size_t n, bool known_noise = true);

FisherInfo fisher_info(const DecayParams& params, std::size_t n, BoundMode mode);

/// Shorthand for fisher_info(params, n, mode).crb_rho.
double crb_rho(const DecayParams& params, std::size_t n, BoundMode mode = BoundMode::Nuisance);

}  // namespace decayrate
