#include "decayrate/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>

#include "decayrate/errors.hpp"
#include "decayrate/rng.hpp"

namespace decayrate {

SampledSignal::SampledSignal(std::vector<double> samples, double sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    if (samples_.empty()) throw ParameterError("signal must contain at least one sample");
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
        throw ParameterError("sample rate must be positive and finite");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i]))
            throw ParameterError("non-finite sample at index " + std::to_string(i));
    }
}

SampledSignal SampledSignal::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > samples_.size()) {
        throw ParameterError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") is outside a signal of length " + std::to_string(samples_.size()));
    }
    return {std::vector<double>(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                samples_.begin() + static_cast<std::ptrdiff_t>(end)),
            sample_rate_hz_};
}

double SampledSignal::mean_power() const noexcept {
    double acc = 0.0;
    for (const double x : samples_) acc += x * x;
    return acc / static_cast<double>(samples_.size());
}

void DecayParams::validate() const {
    if (!std::isfinite(rho_d) || !std::isfinite(sigma_v2) || !std::isfinite(sigma_d2))
        throw ParameterError("decay parameters must be finite");
    if (sigma_v2 < 0.0 || sigma_d2 < 0.0) throw ParameterError("variances must be non-negative");
    if (sigma_v2 == 0.0 && sigma_d2 == 0.0)
        throw ParameterError("sigma_v2 and sigma_d2 cannot both be zero");
    if (sigma_v2 > 0.0 && !(rho_d > 0.0))
        throw ParameterError("rho_d must be positive for a decaying component, got " +
                             std::to_string(rho_d));
}

SampledSignal synth_polack(const DecayParams& params, std::size_t n_samples, std::uint64_t seed,
                           double sample_rate_hz) {
    params.validate();
    if (n_samples < 1) throw ParameterError("n_samples must be at least 1");

    std::mt19937_64 v_stream(derive_seed(seed, {0}));
    std::mt19937_64 d_stream(derive_seed(seed, {1}));
    std::normal_distribution<double> v_dist(0.0, std::sqrt(params.sigma_v2));
    std::normal_distribution<double> d_dist(0.0, std::sqrt(params.sigma_d2));

    std::vector<double> out(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double v = params.sigma_v2 > 0.0 ? v_dist(v_stream) : 0.0;
        const double d = params.sigma_d2 > 0.0 ? d_dist(d_stream) : 0.0;
        const double envelope = params.sigma_v2 > 0.0
                                    ? std::exp(-static_cast<double>(n) * params.rho_d)
                                    : 0.0;
        out[n] = v * envelope + d;
    }
    return {std::move(out), sample_rate_hz};
}

double rho_to_t60(double rho_d, double sample_rate_hz) {
    if (!(rho_d > 0.0)) throw ParameterError("rho_d must be positive");
    if (!(sample_rate_hz > 0.0)) throw ParameterError("sample rate must be positive");
    return 3.0 / (rho_d * sample_rate_hz * std::numbers::log10e);
}

double t60_to_rho(double t60_s, double sample_rate_hz) {
    if (!(t60_s > 0.0)) throw ParameterError("t60 must be positive");
    if (!(sample_rate_hz > 0.0)) throw ParameterError("sample rate must be positive");
    return 3.0 / (t60_s * sample_rate_hz * std::numbers::log10e);
}

SampledSignal synth_rir(double t60_s, double sample_rate_hz, std::size_t length,
                        double noise_floor_db, std::uint64_t seed) {
    if (length < 1) throw ParameterError("RIR length must be at least 1");
    if (std::isnan(noise_floor_db) || noise_floor_db == std::numeric_limits<double>::infinity())
        throw ParameterError("noise floor must be a finite level or -inf");
    DecayParams params;
    params.rho_d = t60_to_rho(t60_s, sample_rate_hz);
    params.sigma_v2 = 1.0;
    params.sigma_d2 = std::isinf(noise_floor_db) ? 0.0 : std::pow(10.0, noise_floor_db / 10.0);
    return synth_polack(params, length, seed, sample_rate_hz);
}

}  // namespace decayrate
