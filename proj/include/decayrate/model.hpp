#pragma once

#include <cstddef>
#include <cstdint>

#include "decayrate/signal.hpp"

namespace decayrate {

inline constexpr double kDefaultSampleRateHz = 8000.0;

/// Ground-truth parameters of the discrete decay model
/// f(n) = v(n) exp(-n rho_d) + d(n), v ~ N(0, sigma_v2), d ~ N(0, sigma_d2).
struct DecayParams {
    double rho_d = 0.0;     ///< decay rate per sample
    double sigma_v2 = 1.0;  ///< reverberation process variance
    double sigma_d2 = 0.0;  ///< noise process variance

    /// Throws ParameterError when the invariants do not hold.
    void validate() const;
};

/// Draws one realization of the decay model. The reverberation and noise
/// processes come from two independent streams derived from `seed`, so
/// changing sigma_d2 leaves the v(n) draw untouched and vice versa.
SampledSignal synth_polack(const DecayParams& params, std::size_t n_samples, std::uint64_t seed,
                           double sample_rate_hz = kDefaultSampleRateHz);

/// T60 = 3 / (rho_d * Fs * log10(e)).
double rho_to_t60(double rho_d, double sample_rate_hz);
double t60_to_rho(double t60_s, double sample_rate_hz);

/// Synthetic room impulse response: unit-variance Gaussian carrier decaying
/// at the rate implied by `t60_s`, plus stationary Gaussian noise whose power
/// sits `noise_floor_db` below the initial power. Pass -infinity for no noise.
SampledSignal synth_rir(double t60_s, double sample_rate_hz, std::size_t length,
                        double noise_floor_db, std::uint64_t seed);

}  // namespace decayrate
