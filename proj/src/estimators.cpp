#include "decayrate/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "decayrate/errors.hpp"
#include "decayrate/linalg.hpp"
#include "decayrate/model.hpp"

namespace decayrate {

std::string_view to_string(Estimator e) noexcept {
    switch (e) {
        case Estimator::NI: return "NI";
        case Estimator::LR: return "LR";
        case Estimator::ML: return "ML";
        case Estimator::HybridMLN: return "HybridMLN";
        case Estimator::Schroeder: return "Schroeder";
    }
    return "?";
}

std::optional<Estimator> parse_estimator(std::string_view name) {
    std::string lower(name);
    std::ranges::transform(lower, lower.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "ni") return Estimator::NI;
    if (lower == "lr") return Estimator::LR;
    if (lower == "ml") return Estimator::ML;
    if (lower == "hybrid" || lower == "hybrid-mln" || lower == "hybridmln") return Estimator::HybridMLN;
    if (lower == "schroeder" || lower == "schroder") return Estimator::Schroeder;
    return std::nullopt;
}

namespace {

void check_noise(NoiseEstimate noise) {
    if (!std::isfinite(noise.sigma_d2_hat) || noise.sigma_d2_hat < 0.0)
        throw ParameterError("noise estimate must be finite and non-negative");
}

EstimateResult finish(double rho_hat, bool valid, double sample_rate_hz) {
    EstimateResult r;
    r.rho_hat = rho_hat;
    r.valid = valid && rho_hat > 0.0 && std::isfinite(rho_hat);
    if (r.valid) r.t60_s = rho_to_t60(rho_hat, sample_rate_hz);
    return r;
}

// NI works on doubled quantities so that both trapezoid passes are pure
// additions: G(n) = 2 g(n), H(n) = 4 g_I(n). Fitting G = b0 t + b1 H + b2 gives
// a0 = b0 / 2, a1 = 2 b1, a2 = b2 / 2, hence rho_hat = -b1.
// <t, G> comes from summation by parts over the running prefix sums of G, so
// the per-sample work is one squaring plus <t,H>, <H,H> and <H,G>.
template <class Ops>
EstimateResult ni_core(const SampledSignal& signal, NoiseEstimate noise, NiOptions options, Ops& ops) {
    check_noise(noise);
    const auto f = signal.samples();
    const std::size_t n_total = f.size();
    if (n_total < 3) throw ParameterError("NI needs at least 3 samples");

    const double two_noise = ops.mul(2.0, noise.sigma_d2_hat);
    double f2_prev = ops.mul(f[0], f[0]);
    double g_prev = 0.0;
    double h = 0.0;
    double sum_h = 0.0, t_h = 0.0, h_h = 0.0, h_g = 0.0;
    double prefix_g = 0.0, sum_prefix_g = 0.0;
    for (std::size_t n = 1; n < n_total; ++n) {
        const double f2 = ops.mul(f[n], f[n]);
        const double g = g_prev + (f2_prev + f2) - two_noise;
        h += g_prev + g;
        sum_prefix_g += prefix_g;
        prefix_g += g;
        sum_h += h;
        t_h += ops.mul(static_cast<double>(n), h);
        h_h += ops.mul(h, h);
        h_g += ops.mul(h, g);
        f2_prev = f2;
        g_prev = g;
    }
    const double sum_g = prefix_g;
    const double n_d = static_cast<double>(n_total);
    const double n_nm1 = ops.mul(n_d, n_d - 1.0);
    const double t_1 = ops.mul(n_nm1, 0.5);
    const double t_t = ops.div(ops.mul(n_nm1, 2.0 * n_d - 1.0), 6.0);
    const double t_g = ops.mul(n_d - 1.0, sum_g) - sum_prefix_g;

    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    if (options.with_offset) {
        const auto x = detail::solve_pivoted<3>({{{t_t, t_h, t_1}, {t_h, h_h, sum_h}, {t_1, sum_h, n_d}}},
                                                {t_g, h_g, sum_g}, ops);
        if (!x) throw DegenerateInputError("NI normal matrix is singular");
        b0 = (*x)[0];
        b1 = (*x)[1];
        b2 = (*x)[2];
    } else {
        const auto x = detail::solve_pivoted<2>({{{t_t, t_h}, {t_h, h_h}}}, {t_g, h_g}, ops);
        if (!x) throw DegenerateInputError("NI normal matrix is singular");
        b0 = (*x)[0];
        b1 = (*x)[1];
    }

    const double alpha0 = ops.mul(b0, 0.5);
    const double alpha1 = b1 + b1;
    const double alpha2 = ops.mul(b2, 0.5);
    EstimateResult r = finish(-b1, alpha1 < 0.0, signal.sample_rate_hz());
    r.diagnostics["alpha0"] = alpha0;
    r.diagnostics["alpha1"] = alpha1;
    r.diagnostics["alpha2"] = alpha2;
    return r;
}

template <class Ops>
std::optional<detail::LineFit> log_power_line(std::span<const double> f, double floor_eps, Ops& ops) {
    std::vector<double> y(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) y[i] = std::log(ops.mul(f[i], f[i]) + floor_eps);
    ops.transcendental(static_cast<unsigned>(f.size()));
    return detail::fit_line(
        f.size(), [](std::size_t i) { return static_cast<double>(i); },
        [&](std::size_t i) { return y[i]; }, ops);
}

double effective_floor(double floor_eps) { return floor_eps > 0.0 ? floor_eps : kDefaultLogFloor; }

// Hybrid MLN ------------------------------------------------------------------

struct HybridEval {
    double v = 0.0;      // early-window reverberation variance V(rho)
    double score = 0.0;  // d loglik / d rho, up to a factor 1/2
    double info = 0.0;   // expected information in rho, same factor
};

struct EarlyVariance {
    double v = 0.0;   // V(rho), clamped at zero
    double dv = 0.0;  // dV/drho, zero where clamped
};

template <class Ops>
EarlyVariance early_variance(std::span<const double> f2, double noise, std::size_t n_l, double rho,
                             Ops& ops) {
    const double grow = std::exp(2.0 * rho);
    ops.transcendental();
    double s0 = 0.0, s1 = 0.0, e = 1.0;
    for (std::size_t k = 0; k < n_l; ++k) {
        const double w = ops.mul(f2[k] - noise, e);
        s0 += w;
        s1 += ops.mul(static_cast<double>(k), w);
        e = ops.mul(e, grow);
    }
    const double inv_nl = ops.div(1.0, static_cast<double>(n_l));
    const double v = ops.mul(s0, inv_nl);
    if (!(v > 0.0) || !std::isfinite(v)) return {};
    return {v, ops.mul(s1 + s1, inv_nl)};
}

template <class Ops>
HybridEval hybrid_eval(std::span<const double> f2, double noise, std::size_t n_l, double rho, Ops& ops) {
    HybridEval ev;
    const auto [v, dv] = early_variance(f2, noise, n_l, rho, ops);
    ev.v = v;
    if (v == 0.0) return ev;

    const double shrink = std::exp(-2.0 * rho);
    ops.transcendental();
    double e = 1.0;
    for (std::size_t n = 0; n < f2.size(); ++n) {
        const double decay = ops.mul(v, e);
        const double s = decay + noise;
        const double nv = ops.mul(static_cast<double>(n), v);
        const double ds = ops.mul(e, dv - (nv + nv));
        const double inv_s = ops.div(1.0, s);
        const double u = ops.mul(ds, inv_s);
        const double w = ops.mul(f2[n], inv_s);
        ev.score += ops.mul(w - 1.0, u);
        ev.info += ops.mul(u, u);
        e = ops.mul(e, shrink);
    }
    return ev;
}

template <class Ops>
EstimateResult hybrid_core(const SampledSignal& signal, NoiseEstimate noise, std::size_t n_l,
                           HybridOptions options, Ops& ops) {
    check_noise(noise);
    const auto f = signal.samples();
    const std::size_t n_total = f.size();
    if (n_l < 2 || n_l > n_total)
        throw ParameterError("hybrid MLN window n_l must satisfy 2 <= n_l <= N (n_l=" +
                             std::to_string(n_l) + ", N=" + std::to_string(n_total) + ")");
    const auto& br = options.bracket;
    if (!(br.rho_min > 0.0 && br.rho_max > br.rho_min && br.tolerance > 0.0))
        throw ParameterError("invalid search bracket");

    std::vector<double> f2(n_total);
    for (std::size_t n = 0; n < n_total; ++n) f2[n] = ops.mul(f[n], f[n]);

    double start = 0.5 * (br.rho_min + br.rho_max);
    if (const auto line = log_power_line(f.first(n_l), kDefaultLogFloor, ops); line && line->slope < 0.0)
        start = -0.5 * line->slope;
    double rho = std::clamp(start, br.rho_min, br.rho_max);

    double lo = br.rho_min, hi = br.rho_max;
    std::size_t iterations = 0;
    HybridEval ev;
    for (; iterations < options.max_refinements; ++iterations) {
        ev = hybrid_eval(f2, noise.sigma_d2_hat, n_l, rho, ops);
        double next = 0.5 * (lo + hi);
        if (ev.info > 0.0) {
            if (ev.score > 0.0)
                lo = rho;
            else
                hi = rho;
            const double stepped = rho + ops.div(ev.score, ev.info);
            next = (stepped > lo && stepped < hi) ? stepped : 0.5 * (lo + hi);
        }
        const bool converged = std::abs(next - rho) < br.tolerance;
        rho = next;
        if (converged) {
            ++iterations;
            break;
        }
    }
    const double v_final = early_variance(f2, noise.sigma_d2_hat, n_l, rho, ops).v;
    const bool interior = rho - br.rho_min > br.tolerance && br.rho_max - rho > br.tolerance;

    EstimateResult r = finish(rho, interior && v_final > 0.0, signal.sample_rate_hz());
    r.diagnostics["sigma_v2_hat"] = v_final;
    r.diagnostics["iterations"] = static_cast<double>(iterations);
    r.diagnostics["start_rho"] = start;
    r.diagnostics["score"] = ev.score;
    return r;
}

}  // namespace

EstimateResult estimate_ni(const SampledSignal& signal, NoiseEstimate noise, NiOptions options) {
    detail::PlainArith ops;
    return ni_core(signal, noise, options, ops);
}

EstimateResult estimate_ni(const SampledSignal& signal, NoiseEstimate noise, NiOptions options,
                           OpCount& count) {
    detail::CountingArith ops{&count};
    return ni_core(signal, noise, options, ops);
}

NiSystem ni_normal_equations(const SampledSignal& signal, NoiseEstimate noise) {
    check_noise(noise);
    const auto f = signal.samples();
    const std::size_t n_total = f.size();
    std::vector<double> g(n_total, 0.0), g_int(n_total, 0.0);
    for (std::size_t n = 1; n < n_total; ++n)
        g[n] = g[n - 1] + 0.5 * (f[n - 1] * f[n - 1] + f[n] * f[n]) - noise.sigma_d2_hat;
    for (std::size_t n = 1; n < n_total; ++n) g_int[n] = g_int[n - 1] + 0.5 * (g[n - 1] + g[n]);

    NiSystem sys;
    auto& m = sys.matrix;
    for (std::size_t n = 0; n < n_total; ++n) {
        const double t = static_cast<double>(n);
        const std::array<double, 3> row{t, g_int[n], 1.0};
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            sys.rhs[i] += row[i] * g[n];
        }
    }
    return sys;
}

EstimateResult estimate_lr(const SampledSignal& signal, double floor_eps) {
    if (signal.size() < 2) throw ParameterError("LR needs at least 2 samples");
    detail::PlainArith ops;
    const auto line = log_power_line(signal.samples(), effective_floor(floor_eps), ops);
    if (!line) throw DegenerateInputError("LR fit failed");
    EstimateResult r = finish(-0.5 * line->slope, line->slope < 0.0, signal.sample_rate_hz());
    r.diagnostics["slope"] = line->slope;
    r.diagnostics["intercept"] = line->intercept;
    return r;
}

EstimateResult estimate_ml(const SampledSignal& signal, SearchBracket bracket) {
    const auto f = signal.samples();
    const std::size_t n_total = f.size();
    if (n_total < 2) throw ParameterError("ML needs at least 2 samples");
    if (!(bracket.rho_min > 0.0 && bracket.rho_max > bracket.rho_min && bracket.tolerance > 0.0))
        throw ParameterError("invalid search bracket");

    // Only non-zero samples contribute to sum f^2 e^{2 n rho}.
    std::vector<double> log_f2;
    std::vector<double> index;
    for (std::size_t n = 0; n < n_total; ++n) {
        if (f[n] != 0.0) {
            log_f2.push_back(2.0 * std::log(std::abs(f[n])));
            index.push_back(static_cast<double>(n));
        }
    }
    if (log_f2.empty()) throw DegenerateInputError("ML needs a signal that is not all zero");

    const double n_d = static_cast<double>(n_total);
    const double sum_n = 0.5 * n_d * (n_d - 1.0);
    // log of sigma_v2_hat(rho) = (1/N) sum f^2 e^{2 n rho}, evaluated stably.
    const auto log_sigma_v2 = [&](double rho) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < log_f2.size(); ++i) peak = std::max(peak, log_f2[i] + 2.0 * rho * index[i]);
        double acc = 0.0;
        for (std::size_t i = 0; i < log_f2.size(); ++i) acc += std::exp(log_f2[i] + 2.0 * rho * index[i] - peak);
        return peak + std::log(acc) - std::log(n_d);
    };
    const auto log_likelihood = [&](double rho) {
        return -0.5 * (n_d * std::log(2.0 * std::numbers::pi) + n_d * log_sigma_v2(rho) - 2.0 * rho * sum_n + n_d);
    };

    const double inv_phi = 1.0 / std::numbers::phi;
    double a = bracket.rho_min, b = bracket.rho_max;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = log_likelihood(c), fd = log_likelihood(d);
    std::size_t iterations = 0;
    while (b - a > bracket.tolerance) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = log_likelihood(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = log_likelihood(d);
        }
        ++iterations;
    }
    const double rho = 0.5 * (a + b);
    const bool interior = rho - bracket.rho_min > bracket.tolerance && bracket.rho_max - rho > bracket.tolerance;
    EstimateResult r = finish(rho, interior, signal.sample_rate_hz());
    r.diagnostics["sigma_v2_hat"] = std::exp(log_sigma_v2(rho));
    r.diagnostics["log_likelihood"] = log_likelihood(rho);
    r.diagnostics["iterations"] = static_cast<double>(iterations);
    return r;
}

EstimateResult estimate_hybrid_mln(const SampledSignal& signal, NoiseEstimate noise, std::size_t n_l,
                                   HybridOptions options) {
    detail::PlainArith ops;
    return hybrid_core(signal, noise, n_l, options, ops);
}

EstimateResult estimate_hybrid_mln(const SampledSignal& signal, NoiseEstimate noise, std::size_t n_l,
                                   HybridOptions options, OpCount& count) {
    detail::CountingArith ops{&count};
    return hybrid_core(signal, noise, n_l, options, ops);
}

EstimateResult estimate_schroeder(const SampledSignal& rir, SchroederOptions options) {
    if (!(options.fit_lo_db > -60.0 && options.fit_lo_db < options.fit_hi_db && options.fit_hi_db <= 0.0))
        throw ParameterError("fit range must satisfy -60 < fit_lo_db < fit_hi_db <= 0");
    const auto h = rir.samples();
    const std::size_t n_total = h.size();

    std::vector<double> edc(n_total);
    double acc = 0.0;
    for (std::size_t n = n_total; n-- > 0;) {
        acc += h[n] * h[n];
        edc[n] = acc;
    }
    if (!(edc[0] > 0.0)) throw DegenerateInputError("impulse response has no energy");

    const double ref = edc[0];
    const auto level_db = [&](std::size_t n) { return 10.0 * std::log10(edc[n] / ref); };

    std::size_t begin = n_total, end = n_total;
    bool reached = false;
    for (std::size_t n = 0; n < n_total; ++n) {
        const double lvl = level_db(n);
        if (begin == n_total && lvl <= options.fit_hi_db) begin = n;
        if (lvl <= options.fit_lo_db) {
            end = n + 1;
            reached = true;
            break;
        }
    }
    if (!reached) {
        throw RangeError("energy decay curve never reaches " + std::to_string(options.fit_lo_db) +
                         " dB; deepest level is " + std::to_string(level_db(n_total - 1)) + " dB");
    }
    if (end - begin < 2) throw RangeError("fewer than two points inside the fit range");

    const auto line = detail::fit_line(
        end - begin, [&](std::size_t i) { return static_cast<double>(begin + i); },
        [&](std::size_t i) { return level_db(begin + i); });
    if (!line) throw DegenerateInputError("Schroeder line fit failed");

    const double rho = -line->slope / (20.0 * std::numbers::log10e);
    EstimateResult r = finish(rho, line->slope < 0.0, rir.sample_rate_hz());
    r.diagnostics["slope_db_per_sample"] = line->slope;
    r.diagnostics["intercept_db"] = line->intercept;
    r.diagnostics["fit_begin"] = static_cast<double>(begin);
    r.diagnostics["fit_end"] = static_cast<double>(end);
    return r;
}

NoiseEstimate estimate_noise_floor(const SampledSignal& signal, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 0.5))
        throw ParameterError("tail_fraction must lie in (0, 0.5]");
    const auto f = signal.samples();
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(f.size()))));
    double acc = 0.0;
    for (std::size_t n = f.size() - count; n < f.size(); ++n) acc += f[n] * f[n];
    return {acc / static_cast<double>(count)};
}

}  // namespace decayrate
