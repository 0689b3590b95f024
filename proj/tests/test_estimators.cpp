#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "decayrate/bounds.hpp"
#include "decayrate/errors.hpp"
#include "decayrate/estimators.hpp"
#include "decayrate/model.hpp"
#include "decayrate/rng.hpp"
#include "oracles.hpp"

using namespace decayrate;
using Catch::Approx;

namespace {

// f(n) = sqrt(scale * e^{-2 rho n} + c)
SampledSignal deterministic(double rho, std::size_t n, double c = 0.0, double scale = 1.0) {
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) f[k] = std::sqrt(scale * std::exp(-2.0 * rho * static_cast<double>(k)) + c);
    return {std::move(f), 8000.0};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

// ---------------------------------------------------------------------------
// NI
// ---------------------------------------------------------------------------

TEST_CASE("NI recovers the rate of a deterministic decay", "[ni]") {
    for (const double rho : {0.002, 0.004, 0.008}) {
        const auto r = estimate_ni(deterministic(rho, 1000), {0.0});
        REQUIRE(r.valid);
        CHECK(std::abs(r.rho_hat - rho) < 1e-4);
        CHECK(*r.t60_s == Approx(rho_to_t60(r.rho_hat, 8000.0)).epsilon(1e-15));
        CHECK(r.diagnostics.at("alpha1") == Approx(-2.0 * r.rho_hat).epsilon(1e-15));
    }
}

TEST_CASE("NI cancels a known constant noise power", "[ni]") {
    for (const double rho : {0.004, 0.008}) {
        const double clean = estimate_ni(deterministic(rho, 1000), {0.0}).rho_hat;
        for (const double c : {0.01, 0.1}) {
            const double noisy = estimate_ni(deterministic(rho, 1000, c), {c}).rho_hat;
            CHECK(rel(noisy, clean) < 1e-9);
        }
    }
    // without compensation the estimate is pulled down
    const double uncompensated = estimate_ni(deterministic(0.004, 1000, 0.01), {0.0}).rho_hat;
    CHECK(uncompensated < 0.9 * 0.004);
}

TEST_CASE("NI is invariant to power scaling", "[ni]") {
    const auto base = estimate_ni(deterministic(0.006, 800, 0.01), {0.01});
    for (const double c : {1e-3, 0.5, 7.0, 1e4}) {
        const auto scaled = estimate_ni(deterministic(0.006, 800, 0.01 * c, c), {0.01 * c});
        CHECK(rel(scaled.rho_hat, base.rho_hat) < 1e-10);
        CHECK(scaled.diagnostics.at("alpha0") == Approx(c * base.diagnostics.at("alpha0")).epsilon(1e-8));
    }
}

TEST_CASE("NI normal equations", "[ni]") {
    const auto small = ni_normal_equations(deterministic(0.01, 5), {0.0});
    CHECK(small.matrix[0][0] == 30.0);
    CHECK(small.matrix[0][2] == 10.0);
    CHECK(small.matrix[2][2] == 5.0);

    // the fast path and a direct solve of the unscaled system agree
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto sig = synth_polack({0.005, 1.0, 0.01}, 700, seed);
        const NoiseEstimate noise{0.01};
        const auto sys = ni_normal_equations(sig, noise);
        const auto x = oracle::cramer3(sys.matrix, sys.rhs);
        const auto r = estimate_ni(sig, noise);
        CHECK(r.diagnostics.at("alpha0") == Approx(x[0]).epsilon(1e-7));
        CHECK(r.diagnostics.at("alpha1") == Approx(x[1]).epsilon(1e-7));
        CHECK(r.diagnostics.at("alpha2") == Approx(x[2]).epsilon(1e-5).margin(1e-9));
        CHECK(r.rho_hat == Approx(-x[1] / 2.0).epsilon(1e-7));
    }
}

TEST_CASE("NI error handling and validity", "[ni]") {
    CHECK_THROWS_AS(estimate_ni(SampledSignal(std::vector<double>(100, 0.0), 8000.0), {0.0}),
                    DegenerateInputError);
    CHECK_THROWS_AS(estimate_ni(SampledSignal({1.0, 0.5}, 8000.0), {0.0}), ParameterError);
    CHECK_THROWS_AS(estimate_ni(deterministic(0.01, 100), {-1.0}), ParameterError);
    CHECK_THROWS_AS(estimate_ni(deterministic(0.01, 100), {std::nan("")}), ParameterError);

    // a growing envelope fits alpha1 >= 0
    const auto growing = estimate_ni(deterministic(-0.002, 500), {0.0});
    CHECK_FALSE(growing.valid);
    CHECK_FALSE(growing.t60_s.has_value());
    CHECK(growing.diagnostics.at("alpha1") >= 0.0);
    CHECK(growing.rho_hat == Approx(-0.002).epsilon(0.05));
}

TEST_CASE("NI without offset term", "[ni]") {
    const auto r = estimate_ni(deterministic(0.004, 1000), {0.0}, NiOptions{false});
    REQUIRE(r.valid);
    CHECK(std::abs(r.rho_hat - 0.004) < 1e-4);
    CHECK(r.diagnostics.at("alpha2") == 0.0);
}

TEST_CASE("NI multiply count is 4N plus a constant", "[ni]") {
    for (const std::size_t n : {100u, 1000u, 5000u}) {
        OpCount ops;
        const auto sig = synth_polack({0.008, 1.0, 0.01}, n, 9);
        const auto counted = estimate_ni(sig, {0.01}, {}, ops);
        CHECK(ops.multiplies >= 4 * n);
        CHECK(ops.multiplies <= 4 * n + 32);
        CHECK(ops.transcendentals == 0);
        // instrumentation does not change the arithmetic
        CHECK(counted.rho_hat == estimate_ni(sig, {0.01}).rho_hat);
    }
}

TEST_CASE("estimators are pure", "[estimators]") {
    const auto sig = synth_polack({0.008, 1.0, 0.01}, 1000, 21);
    CHECK(estimate_ni(sig, {0.01}).rho_hat == estimate_ni(sig, {0.01}).rho_hat);
    CHECK(estimate_lr(sig).rho_hat == estimate_lr(sig).rho_hat);
    CHECK(estimate_ml(sig).rho_hat == estimate_ml(sig).rho_hat);
    CHECK(estimate_hybrid_mln(sig, {0.01}, 200).rho_hat == estimate_hybrid_mln(sig, {0.01}, 200).rho_hat);
}

TEST_CASE("estimator names round trip", "[estimators]") {
    for (const auto e : {Estimator::NI, Estimator::LR, Estimator::ML, Estimator::HybridMLN, Estimator::Schroeder})
        CHECK(parse_estimator(to_string(e)) == e);
    CHECK(parse_estimator("HYBRID") == Estimator::HybridMLN);
    CHECK_FALSE(parse_estimator("edc").has_value());
}

// ---------------------------------------------------------------------------
// LR
// ---------------------------------------------------------------------------

TEST_CASE("LR on an exact exponential", "[lr]") {
    const auto r = estimate_lr(deterministic(0.004, 1000), 0.0);
    REQUIRE(r.valid);
    CHECK(r.rho_hat == Approx(0.004).epsilon(1e-10));
    CHECK(r.diagnostics.at("slope") == Approx(-0.008).epsilon(1e-10));
    CHECK_THROWS_AS(estimate_lr(SampledSignal({1.0}, 8000.0)), ParameterError);
}

TEST_CASE("LR bias with and without noise", "[lr][slow]") {
    const int trials = 2000;
    double clean_sum = 0.0, noisy_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto seed = derive_seed(31, {static_cast<std::uint64_t>(t)});
        clean_sum += estimate_lr(synth_polack({0.008, 1.0, 0.0}, 1000, seed)).rho_hat;
        noisy_sum += estimate_lr(synth_polack({0.008, 1.0, 0.01}, 1000, seed)).rho_hat;
    }
    CHECK(std::abs(clean_sum / trials - 0.008) < 0.05 * 0.008);
    CHECK(noisy_sum / trials - 0.008 <= -0.2 * 0.008);
}

// ---------------------------------------------------------------------------
// ML
// ---------------------------------------------------------------------------

TEST_CASE("ML matches a dense grid search", "[ml][slow]") {
    const auto grid = oracle::grid(1e-4, 0.05, 1e-5);
    const double sd = std::sqrt(crb_rho({0.008, 1.0, 0.0}, 1000));
    for (std::uint64_t seed : {3u, 4u}) {
        const auto sig = synth_polack({0.008, 1.0, 0.0}, 1000, seed);
        const auto r = estimate_ml(sig);
        REQUIRE(r.valid);
        const double best = oracle::grid_argmax(grid, [&](double rho) {
            return oracle::concentrated_ml_loglik(sig.samples(), rho);
        });
        CHECK(std::abs(r.rho_hat - best) <= 1e-5);
        CHECK(std::abs(r.rho_hat - 0.008) < 3.0 * sd);
        CHECK(r.diagnostics.at("log_likelihood") ==
              Approx(oracle::concentrated_ml_loglik(sig.samples(), r.rho_hat)).epsilon(1e-9));
    }
}

TEST_CASE("ML lacks noise robustness", "[ml][slow]") {
    const int trials = 300;
    double clean_bias = 0.0, noisy_bias = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto seed = derive_seed(47, {static_cast<std::uint64_t>(t)});
        clean_bias += estimate_ml(synth_polack({0.008, 1.0, 0.0}, 1000, seed)).rho_hat - 0.008;
        noisy_bias += estimate_ml(synth_polack({0.008, 1.0, 0.01}, 1000, seed)).rho_hat - 0.008;
    }
    CHECK(std::abs(noisy_bias) >= 5.0 * std::abs(clean_bias));
}

TEST_CASE("ML edge cases", "[ml]") {
    CHECK_THROWS_AS(estimate_ml(SampledSignal(std::vector<double>(50, 0.0), 8000.0)), DegenerateInputError);
    CHECK_THROWS_AS(estimate_ml(SampledSignal({1.0}, 8000.0)), ParameterError);
    CHECK_THROWS_AS(estimate_ml(deterministic(0.01, 100), {0.05, 0.01, 1e-6}), ParameterError);
    // a non-decaying signal pushes the argmax onto the lower edge
    const auto flat = estimate_ml(synth_polack({0.0, 0.0, 1.0}, 2000, 5));
    CHECK_FALSE(flat.valid);
    CHECK_FALSE(flat.t60_s.has_value());
}

// ---------------------------------------------------------------------------
// Hybrid MLN
// ---------------------------------------------------------------------------

TEST_CASE("hybrid MLN matches a dense grid search", "[hybrid][slow]") {
    const auto grid = oracle::grid(1e-4, 0.05, 1e-5);
    const std::size_t n_l = 200;
    const double d = 0.01;
    for (std::uint64_t seed : {5u, 6u}) {
        const auto sig = synth_polack({0.008, 1.0, d}, 1000, seed);
        const double best = oracle::grid_argmax(grid, [&](double rho) {
            const double v = oracle::early_window_variance(sig.samples(), n_l, rho, d);
            return oracle::gaussian_loglik(sig.samples(), rho, v, d);
        });
        const auto converged = estimate_hybrid_mln(sig, {d}, n_l, {50, {}});
        REQUIRE(converged.valid);
        CHECK(std::abs(converged.rho_hat - best) <= 1e-5);
        CHECK(converged.diagnostics.at("sigma_v2_hat") ==
              Approx(oracle::early_window_variance(sig.samples(), n_l, converged.rho_hat, d)).epsilon(1e-9));
    }
}

TEST_CASE("hybrid MLN at R = 5 is usually converged", "[hybrid][slow]") {
    const int trials = 500;
    int agree = 0;
    for (int t = 0; t < trials; ++t) {
        const auto sig = synth_polack({0.008, 1.0, 0.01}, 1000, derive_seed(8, {static_cast<std::uint64_t>(t)}));
        const double r5 = estimate_hybrid_mln(sig, {0.01}, 200).rho_hat;
        const double r50 = estimate_hybrid_mln(sig, {0.01}, 200, {50, {}}).rho_hat;
        if (std::abs(r5 - r50) <= 1e-5) ++agree;
    }
    CHECK(agree >= trials * 98 / 100);
}

TEST_CASE("hybrid MLN reduces to ML without noise", "[hybrid]") {
    for (std::uint64_t seed : {10u, 11u, 12u}) {
        const auto sig = synth_polack({0.006, 1.0, 0.0}, 1000, seed);
        const auto ml = estimate_ml(sig);
        const auto hy = estimate_hybrid_mln(sig, {0.0}, 1000, {50, {}});
        REQUIRE(hy.valid);
        CHECK(std::abs(ml.rho_hat - hy.rho_hat) <= 2e-6);
    }
}

TEST_CASE("hybrid MLN validity and errors", "[hybrid]") {
    // every early sample sits below the declared noise power
    const SampledSignal quiet(std::vector<double>(400, 0.1), 8000.0);
    const auto r = estimate_hybrid_mln(quiet, {1.0}, 80);
    CHECK_FALSE(r.valid);
    CHECK(r.diagnostics.at("sigma_v2_hat") == 0.0);

    const auto sig = synth_polack({0.008, 1.0, 0.01}, 100, 1);
    CHECK_THROWS_AS(estimate_hybrid_mln(sig, {0.01}, 1), ParameterError);
    CHECK_THROWS_AS(estimate_hybrid_mln(sig, {0.01}, 101), ParameterError);
    CHECK_THROWS_AS(estimate_hybrid_mln(sig, {-0.01}, 20), ParameterError);
}

TEST_CASE("hybrid MLN costs several times the NI multiplies", "[hybrid]") {
    const auto sig = synth_polack({0.008, 1.0, 0.01}, 1000, 13);
    OpCount ni, hy;
    estimate_ni(sig, {0.01}, {}, ni);
    const auto r = estimate_hybrid_mln(sig, {0.01}, 200, {}, hy);
    CHECK(r.diagnostics.at("iterations") <= 5.0);
    CHECK(static_cast<double>(hy.multiplies) / static_cast<double>(ni.multiplies) >= 3.0);
    CHECK(r.rho_hat == estimate_hybrid_mln(sig, {0.01}, 200).rho_hat);
}

// ---------------------------------------------------------------------------
// Schroeder and noise floor
// ---------------------------------------------------------------------------

TEST_CASE("Schroeder on a pure exponential", "[schroeder]") {
    for (const double rho : {0.002, 0.004, 0.01}) {
        const auto r = estimate_schroeder(deterministic(rho, 8000));
        REQUIRE(r.valid);
        CHECK(std::abs(r.rho_hat - rho) < 1e-4);
        CHECK(r.diagnostics.at("fit_begin") < r.diagnostics.at("fit_end"));
    }
}

TEST_CASE("Schroeder closed loop and noise-floor bias", "[schroeder]") {
    // same impulse responses as the experiment fixture
    const double inf = std::numeric_limits<double>::infinity();
    const double t60s[] = {0.2, 0.4, 0.6};
    for (std::uint64_t k = 0; k < 3; ++k) {
        const double t60 = t60s[k];
        const auto len = static_cast<std::size_t>(std::lround(1.5 * t60 * 8000.0));
        const auto seed = derive_seed(2015, {1000 + k});
        const auto clean = estimate_schroeder(synth_rir(t60, 8000.0, len, -inf, seed));
        REQUIRE(clean.valid);
        CHECK(*clean.t60_s == Approx(t60).epsilon(0.05));
        const auto noisy = estimate_schroeder(synth_rir(t60, 8000.0, len, -15.0, seed));
        REQUIRE(noisy.valid);
        CHECK(*noisy.t60_s > *clean.t60_s);
    }
}

TEST_CASE("Schroeder errors", "[schroeder]") {
    // too short to fall by 25 dB
    try {
        estimate_schroeder(deterministic(0.001, 100));
        FAIL("expected a range error");
    } catch (const RangeError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("deepest level"));
    }
    CHECK_THROWS_AS(estimate_schroeder(deterministic(0.01, 100), {-25.0, -5.0}), ParameterError);
    CHECK_THROWS_AS(estimate_schroeder(deterministic(0.01, 100), {-5.0, -60.0}), ParameterError);
    CHECK_THROWS_AS(estimate_schroeder(SampledSignal(std::vector<double>(10, 0.0), 8000.0)), DegenerateInputError);
}

TEST_CASE("noise floor estimate", "[noise]") {
    const auto noise = synth_polack({0.0, 0.0, 0.01}, 4000, 17);
    CHECK(estimate_noise_floor(noise, 0.25).sigma_d2_hat == Approx(0.01).epsilon(0.1));
    CHECK(estimate_noise_floor(SampledSignal(std::vector<double>(100, 0.0), 8000.0), 0.5).sigma_d2_hat == 0.0);
    // residual decay power leaks into the estimate when no noise is present
    const auto decay = deterministic(0.002, 1000);
    const double tail = estimate_noise_floor(decay, 0.1).sigma_d2_hat;
    CHECK(tail > 0.0);
    CHECK(tail == Approx(decay.slice(900, 1000).mean_power()).epsilon(1e-12));
    CHECK_THROWS_AS(estimate_noise_floor(noise, 0.0), ParameterError);
    CHECK_THROWS_AS(estimate_noise_floor(noise, 0.6), ParameterError);
}
