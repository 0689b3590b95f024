#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "decayrate/op_count.hpp"
#include "decayrate/signal.hpp"

namespace decayrate {

enum class Estimator { NI, LR, ML, HybridMLN, Schroeder };

std::string_view to_string(Estimator e) noexcept;
/// Accepts "ni", "lr", "ml", "hybrid", "hybrid-mln", "schroeder" (case-insensitive).
std::optional<Estimator> parse_estimator(std::string_view name);

/// Decay-rate estimate for one signal segment.
struct EstimateResult {
    double rho_hat = 0.0;          ///< per-sample decay rate, reported even when invalid
    std::optional<double> t60_s;   ///< present iff valid
    bool valid = false;
    std::map<std::string, double> diagnostics;
};

/// Separately obtained estimate of the stationary noise power.
struct NoiseEstimate {
    double sigma_d2_hat = 0.0;
};

// ---------------------------------------------------------------------------
// Noise-robust successive integration (NI)
// ---------------------------------------------------------------------------

struct NiOptions {
    /// Fit g = a0 t + a1 g_I + a2. When false the constant a2 is dropped.
    bool with_offset = true;
};

/// Noise-compensated successive-integration estimator.
///
/// g(n) is the cumulative trapezoid of f^2 minus n * sigma_d2_hat, g_I(n) the
/// cumulative trapezoid of g (both zero at n = 0, unit sample spacing). The
/// least-squares fit g = a0 n + a1 g_I + a2 yields rho_hat = -a1 / 2.
/// Diagnostics: alpha0, alpha1, alpha2.
///
/// Throws ParameterError for N < 3 or a non-finite/negative noise estimate and
/// DegenerateInputError when the normal matrix is singular. valid is false
/// when a1 >= 0.
EstimateResult estimate_ni(const SampledSignal& signal, NoiseEstimate noise, NiOptions options = {});

/// Same as above; adds the multiplies of the core computation to `ops`.
EstimateResult estimate_ni(const SampledSignal& signal, NoiseEstimate noise, NiOptions options,
                           OpCount& ops);

/// Normal equations of the NI fit, in the unscaled (t, g_I, 1) basis.
struct NiSystem {
    std::array<std::array<double, 3>, 3> matrix{};
    std::array<double, 3> rhs{};
};
NiSystem ni_normal_equations(const SampledSignal& signal, NoiseEstimate noise);

// ---------------------------------------------------------------------------
// Reference estimators
// ---------------------------------------------------------------------------

inline constexpr double kDefaultLogFloor = std::numeric_limits<double>::min();

/// Least-squares line through (n, ln(f^2 + floor_eps)); rho_hat = -slope / 2.
/// floor_eps <= 0 falls back to kDefaultLogFloor. Diagnostics: slope, intercept.
EstimateResult estimate_lr(const SampledSignal& signal, double floor_eps = kDefaultLogFloor);

struct SearchBracket {
    double rho_min = 1e-4;
    double rho_max = 0.05;
    double tolerance = 1e-6;
};

/// Noiseless maximum likelihood: sigma_v2 is concentrated out and the
/// remaining concave objective in rho is maximized by golden-section search.
/// An argmax on the bracket edge gives valid = false.
/// Diagnostics: sigma_v2_hat, log_likelihood, iterations.
EstimateResult estimate_ml(const SampledSignal& signal, SearchBracket bracket = {});

struct HybridOptions {
    std::size_t max_refinements = 5;  ///< R, Fisher-scoring steps on rho
    SearchBracket bracket{};
};

/// Hybrid ML with a known noise power. For each candidate rho the
/// reverberation variance is estimated from the first n_l samples with the
/// noise contribution removed,
///   V(rho) = max(0, mean_{n<n_l} (f^2(n) - sigma_d2_hat) e^{2 n rho}),
/// and the full Gaussian log-likelihood with (V(rho), sigma_d2_hat, rho) is
/// maximized over rho by bracketed Fisher scoring started from a log-linear
/// fit of the early window, at most `max_refinements` steps.
/// Diagnostics: sigma_v2_hat, log_likelihood, iterations, start_rho.
EstimateResult estimate_hybrid_mln(const SampledSignal& signal, NoiseEstimate noise, std::size_t n_l,
                                   HybridOptions options = {});
EstimateResult estimate_hybrid_mln(const SampledSignal& signal, NoiseEstimate noise, std::size_t n_l,
                                   HybridOptions options, OpCount& ops);

struct SchroederOptions {
    double fit_hi_db = -5.0;
    double fit_lo_db = -25.0;
};

/// Backward-integrated energy decay curve of an impulse response with a line
/// fitted to its level (dB) between fit_hi_db and fit_lo_db. Throws
/// RangeError when the curve never falls to fit_lo_db.
/// Diagnostics: slope_db_per_sample, intercept_db, fit_begin, fit_end.
EstimateResult estimate_schroeder(const SampledSignal& rir, SchroederOptions options = {});

/// Mean of f^2 over the trailing `tail_fraction` (0, 0.5] of the signal.
NoiseEstimate estimate_noise_floor(const SampledSignal& signal, double tail_fraction);

}  // namespace decayrate
