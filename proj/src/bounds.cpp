#include "decayrate/bounds.hpp"

#include <cmath>
#include <string>

#include "decayrate/errors.hpp"
#include "decayrate/linalg.hpp"
#include "decayrate/op_count.hpp"

namespace decayrate {

std::string_view to_string(BoundMode mode) noexcept {
    switch (mode) {
        case BoundMode::RhoOnly: return "rho-only";
        case BoundMode::Nuisance: return "nuisance";
        case BoundMode::FullNuisance: return "full-nuisance";
    }
    return "?";
}

namespace {

constexpr std::array<const char*, 3> kParamNames{"rho", "sigma_v2", "sigma_d2"};

// (rho, rho) entry of the inverse of the leading K x K block.
template <std::size_t K>
double inverse_rho_entry(const std::array<std::array<double, 3>, 3>& full) {
    std::array<std::array<double, K>, K> block{};
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) block[i][j] = full[i][j];
    std::array<double, K> unit{};
    unit[0] = 1.0;
    detail::PlainArith ops;
    const auto col = detail::solve_pivoted<K>(block, unit, ops, 1e-14);
    if (!col) {
        // Report the parameter whose information is smallest relative to its
        // diagonal after removing the others; for a rank-one defect this is
        // the direction that carries no information.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < K; ++i)
            if (block[i][i] < block[worst][worst]) worst = i;
        throw DegenerateInputError(std::string("Fisher information is singular along ") +
                                   kParamNames[worst]);
    }
    return (*col)[0];
}

}  // namespace

FisherInfo fisher_info(const DecayParams& params, std::size_t n, BoundMode mode) {
    if (n < 2) throw ParameterError("Fisher information needs n >= 2");
    if (!(params.sigma_v2 > 0.0)) throw ParameterError("Fisher information needs sigma_v2 > 0");
    params.validate();

    FisherInfo info;
    info.n = n;
    info.mode = mode;
    auto& m = info.matrix;
    for (std::size_t k = 0; k < n; ++k) {
        const double nk = static_cast<double>(k);
        const double decay = std::exp(-2.0 * nk * params.rho_d);
        const double s2 = params.sigma_v2 * decay + params.sigma_d2;
        const double inv_s4 = 1.0 / (s2 * s2);
        const std::array<double, 3> grad{-2.0 * nk * params.sigma_v2 * decay, decay, 1.0};
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) m[i][j] += 0.5 * inv_s4 * grad[i] * grad[j];
    }

    switch (mode) {
        case BoundMode::RhoOnly:
            if (!(m[0][0] > 0.0)) throw DegenerateInputError("Fisher information is singular along rho");
            info.crb_rho = 1.0 / m[0][0];
            break;
        case BoundMode::Nuisance: info.crb_rho = inverse_rho_entry<2>(m); break;
        case BoundMode::FullNuisance: info.crb_rho = inverse_rho_entry<3>(m); break;
    }
    return info;
}

FisherInfo fisher_info(const DecayParams& params, std::size_t n, bool known_noise) {
    return fisher_info(params, n, known_noise ? BoundMode::Nuisance : BoundMode::FullNuisance);
}

double crb_rho(const DecayParams& params, std::size_t n, BoundMode mode) {
    return fisher_info(params, n, mode).crb_rho;
}

}  // namespace decayrate
