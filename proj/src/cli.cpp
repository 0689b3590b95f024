#include "decayrate/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "decayrate/audio.hpp"
#include "decayrate/bench.hpp"
#include "decayrate/bounds.hpp"
#include "decayrate/errors.hpp"
#include "decayrate/estimators.hpp"
#include "decayrate/model.hpp"
#include "decayrate/wav.hpp"

namespace decayrate::cli {

namespace {

/// Flag values that parse but fail validation.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr const char* kFormatsHelp = R"(Output formats
  simulate CSV  : estimator,rho_true,n,bias,variance,mse,mse_db,crb,crb_db,trials,invalid,flagged
  crb CSV       : n,crb_rho,crb_db,mode
  experiment CSV: rir_id,t60_ground_truth_s,noise_power,estimator,median_t60_s,error_variance,
                  segments,invalid,flagged,error
  segment CSV   : rir_id,label,start,end,estimator,rho_hat,t60_s,valid,error
  estimate --json-lines: one JSON object per segment
Numbers use 9 significant digits. N ranges: start:stop:step, start:stop, or a value; comma lists allowed.
Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.)";

std::string fmt(double x, const char* pattern = "%.9g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, x);
    return buf;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (const char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::size_t parse_count(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("'" + s + "' is not a non-negative integer");
    return std::stoull(s);
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const std::string& item : split(text, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw UsageError(std::string("bad ") + what + " value '" + item + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<Estimator> parse_estimator_list(const std::string& text) {
    std::vector<Estimator> out;
    for (const std::string& item : split(text, ',')) {
        const auto e = parse_estimator(item);
        if (!e) throw UsageError("unknown estimator '" + item + "'");
        out.push_back(*e);
    }
    return out;
}

BoundMode parse_bound_mode(const std::string& s) {
    if (s == "rho-only") return BoundMode::RhoOnly;
    if (s == "nuisance") return BoundMode::Nuisance;
    if (s == "full-nuisance") return BoundMode::FullNuisance;
    throw UsageError("unknown bound mode '" + s + "' (rho-only, nuisance, full-nuisance)");
}

std::vector<std::size_t> n_range_or_usage(const std::string& text) {
    try {
        return parse_n_range(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--n: ") + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

// simulate -------------------------------------------------------------------

struct SimulateFlags {
    std::string rho = "0.008";
    double sigma_v2 = 1.0;
    double sigma_d2 = 0.01;
    std::string n = "100:1000:100";
    long long trials = 10000;
    std::uint64_t seed = 1;
    std::string estimators = "ni,lr,ml,hybrid";
    std::string noise = "exact";
    std::string crb_mode = "nuisance";
    long long refinements = 5;
    int workers = 0;
    std::string out;
};

McConfig make_mc_config(const SimulateFlags& f) {
    McConfig c;
    c.rho_list = parse_double_list(f.rho, "--rho");
    c.sigma_v2 = f.sigma_v2;
    c.sigma_d2 = f.sigma_d2;
    c.n_list = n_range_or_usage(f.n);
    if (f.trials < 1) throw UsageError("--trials must be at least 1");
    c.trials = static_cast<std::size_t>(f.trials);
    c.seed = f.seed;
    c.estimators = parse_estimator_list(f.estimators);
    if (f.noise == "exact")
        c.noise_knowledge = NoiseKnowledge::Exact;
    else if (f.noise == "estimated")
        c.noise_knowledge = NoiseKnowledge::Estimated;
    else
        throw UsageError("--noise must be 'exact' or 'estimated'");
    c.crb_mode = parse_bound_mode(f.crb_mode);
    if (f.refinements < 1) throw UsageError("--refinements must be at least 1");
    c.hybrid_refinements = static_cast<std::size_t>(f.refinements);
    c.workers = f.workers;
    try {
        c.validate();
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    return c;
}

void print_mc_summary(const McConfig& config, const McReport& report, std::ostream& out) {
    for (const double rho : config.rho_list) {
        out << "rho = " << fmt(rho) << " (T60 = " << fmt(rho_to_t60(rho, kDefaultSampleRateHz), "%.3f")
            << " s at 8 kHz), sigma_v2 = " << fmt(config.sigma_v2) << ", sigma_d2 = " << fmt(config.sigma_d2)
            << ", trials = " << config.trials << "\n";
        out << "MSE [dB]\n" << "        N";
        char head[32];
        for (const Estimator e : config.estimators) {
            std::snprintf(head, sizeof head, "%12s", std::string(to_string(e)).c_str());
            out << head;
        }
        std::snprintf(head, sizeof head, "%12s", "CRB");
        out << head << "\n";
        for (const std::size_t n : config.n_list) {
            char cell[32];
            std::snprintf(cell, sizeof cell, "%9zu", n);
            out << cell;
            double crb_db = 0.0;
            for (const Estimator e : config.estimators) {
                const auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const McRow& r) {
                    return r.rho_true == rho && r.n == n && r.estimator == e;
                });
                if (it == report.rows.end()) continue;
                std::snprintf(cell, sizeof cell, "%11.2f%s", it->mse_db, it->flagged ? "*" : " ");
                out << cell;
                crb_db = it->crb_db;
            }
            std::snprintf(cell, sizeof cell, "%12.2f", crb_db);
            out << cell << "\n";
        }
    }
    out << "CRB mode: " << to_string(config.crb_mode) << "; * marks cells with more than 50% invalid estimates\n";
}

int cmd_simulate(const SimulateFlags& flags, std::ostream& out) {
    const McConfig config = make_mc_config(flags);
    const McReport report = run_sweep(config);
    if (!flags.out.empty()) export_report(report, flags.out);
    print_mc_summary(config, report, out);
    return kExitOk;
}

// estimate -------------------------------------------------------------------

struct EstimateFlags {
    std::string input;
    std::vector<std::string> segments;
    std::string estimator = "ni";
    std::optional<double> noise_var;
    std::optional<double> noise_from_tail;
    long long n_l = 0;
    long long refinements = 5;
    double fit_hi = -5.0;
    double fit_lo = -25.0;
    bool no_offset = false;
    bool json_lines = false;
};

int cmd_estimate(const EstimateFlags& f, std::ostream& out) {
    const auto estimator = parse_estimator(f.estimator);
    if (!estimator) throw UsageError("unknown estimator '" + f.estimator + "'");
    if (f.noise_var && f.noise_from_tail) throw UsageError("give either --noise-var or --noise-from-tail");
    if (f.noise_var && !(*f.noise_var >= 0.0)) throw UsageError("--noise-var must be non-negative");
    if (f.noise_from_tail && !(*f.noise_from_tail > 0.0 && *f.noise_from_tail <= 0.5))
        throw UsageError("--noise-from-tail must lie in (0, 0.5]");
    const bool needs_noise = *estimator == Estimator::NI || *estimator == Estimator::HybridMLN;
    if (needs_noise && !f.noise_var && !f.noise_from_tail)
        throw UsageError(std::string(to_string(*estimator)) + " needs --noise-var or --noise-from-tail");
    if (f.refinements < 1) throw UsageError("--refinements must be at least 1");
    if (f.n_l < 0) throw UsageError("--n-l must be non-negative");

    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (const std::string& s : f.segments) {
        const auto parts = split(s, ':');
        if (parts.size() != 2) throw UsageError("--segment expects start:end, got '" + s + "'");
        try {
            ranges.emplace_back(parse_count(parts[0]), parse_count(parts[1]));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--segment: ") + e.what());
        }
        if (ranges.back().first >= ranges.back().second) throw UsageError("--segment needs start < end");
    }

    const WavFile wav = load_wav(f.input);
    const SampledSignal& signal = wav.signal;
    if (ranges.empty()) ranges.emplace_back(0, signal.size());

    NoiseEstimate noise{0.0};
    if (f.noise_var) noise.sigma_d2_hat = *f.noise_var;
    if (f.noise_from_tail) noise = estimate_noise_floor(signal, *f.noise_from_tail);

    for (const auto& [a, b] : ranges) {
        const SampledSignal piece = signal.slice(a, b);
        EstimateResult r;
        switch (*estimator) {
            case Estimator::NI: r = estimate_ni(piece, noise, NiOptions{!f.no_offset}); break;
            case Estimator::LR: r = estimate_lr(piece); break;
            case Estimator::ML: r = estimate_ml(piece); break;
            case Estimator::HybridMLN: {
                HybridOptions opts;
                opts.max_refinements = static_cast<std::size_t>(f.refinements);
                const std::size_t n_l = f.n_l > 0 ? static_cast<std::size_t>(f.n_l)
                                                  : std::max<std::size_t>(2, piece.size() / 5);
                r = estimate_hybrid_mln(piece, noise, n_l, opts);
                break;
            }
            case Estimator::Schroeder: r = estimate_schroeder(piece, {f.fit_hi, f.fit_lo}); break;
        }
        if (f.json_lines) {
            nlohmann::ordered_json j;
            j["file"] = f.input;
            j["segment"] = {a, b};
            j["estimator"] = to_string(*estimator);
            j["rho_hat"] = r.rho_hat;
            j["t60_s"] = r.t60_s ? nlohmann::ordered_json(*r.t60_s) : nlohmann::ordered_json(nullptr);
            j["valid"] = r.valid;
            j["noise_power"] = noise.sigma_d2_hat;
            j["diagnostics"] = r.diagnostics;
            if (wav.first_channel_only) j["warning"] = "multi-channel input; first channel used";
            out << j.dump() << "\n";
        } else {
            out << "segment " << a << ":" << b << "  estimator " << to_string(*estimator) << "\n";
            out << "  rho_hat " << fmt(r.rho_hat) << "\n";
            out << "  t60_s   " << (r.t60_s ? fmt(*r.t60_s) : std::string("-")) << "\n";
            out << "  valid   " << (r.valid ? "yes" : "no") << "\n";
            for (const auto& [k, v] : r.diagnostics) out << "  " << k << " " << fmt(v) << "\n";
            if (wav.first_channel_only) out << "  warning: multi-channel input; first channel used\n";
        }
    }
    return kExitOk;
}

// crb ------------------------------------------------------------------------

struct CrbFlags {
    double rho = 0.008;
    double sigma_v2 = 1.0;
    double sigma_d2 = 0.01;
    std::string n = "100:1000:100";
    std::string mode = "nuisance";
    std::string out;
};

int cmd_crb(const CrbFlags& f, std::ostream& out) {
    const BoundMode mode = parse_bound_mode(f.mode);
    const auto ns = n_range_or_usage(f.n);
    if (ns.front() < 2) throw UsageError("--n values must be at least 2");
    const DecayParams params{f.rho, f.sigma_v2, f.sigma_d2};
    try {
        params.validate();
        if (!(params.sigma_v2 > 0.0)) throw ParameterError("sigma_v2 must be positive");
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    std::string csv = "n,crb_rho,crb_db,mode\n";
    out << "CRB for rho = " << fmt(f.rho) << ", sigma_v2 = " << fmt(f.sigma_v2) << ", sigma_d2 = " << fmt(f.sigma_d2)
        << " (" << to_string(mode) << ")\n";
    char line[96];
    std::snprintf(line, sizeof line, "%8s %16s %10s\n", "N", "crb_rho", "dB");
    out << line;
    for (const std::size_t n : ns) {
        const double crb = crb_rho(params, n, mode);
        std::snprintf(line, sizeof line, "%8zu %16.4e %10.2f\n", n, crb, 10.0 * std::log10(crb));
        out << line;
        csv += std::to_string(n) + ',' + fmt(crb) + ',' + fmt(10.0 * std::log10(crb)) + ',' +
               std::string(to_string(mode)) + '\n';
    }
    if (!f.out.empty()) write_text(f.out, csv);
    return kExitOk;
}

// experiment -----------------------------------------------------------------

struct ExperimentFlags {
    bool synthetic = false;
    std::uint64_t fixture_seed = 2015;
    std::string write_fixture;
    std::string dry;
    std::vector<std::string> rirs;
    std::string noise;
    std::string manifest;
    double snr_db = 12.0;
    std::string estimators = "ni,hybrid,ml,lr";
    std::uint64_t noise_seed = 1;
    int workers = 0;
    std::string out;
    std::string segments_out;
};

int cmd_experiment(const ExperimentFlags& f, std::ostream& out) {
    ExperimentConfig config;
    config.snr_db = f.snr_db;
    config.estimators = parse_estimator_list(f.estimators);
    config.noise_seed = f.noise_seed;
    config.workers = f.workers;
    if (f.workers < 0) throw UsageError("--workers must be non-negative");
    if (!std::isfinite(f.snr_db)) throw UsageError("--snr must be finite");

    ExperimentResult result;
    if (f.synthetic) {
        if (!f.dry.empty() || !f.rirs.empty() || !f.manifest.empty())
            throw UsageError("--synthetic cannot be combined with --dry/--rir/--manifest");
        FixtureConfig fc;
        fc.seed = f.fixture_seed;
        ExperimentInputs inputs = make_fixture(fc);
        if (!f.write_fixture.empty()) write_fixture(inputs, f.write_fixture);
        if (!f.noise.empty()) inputs.noise = load_wav(f.noise).signal;
        result = run_experiment(inputs, config);
    } else {
        if (f.dry.empty() || f.rirs.empty() || f.manifest.empty())
            throw UsageError("experiment needs --synthetic or all of --dry, --rir, --manifest");
        std::vector<std::filesystem::path> rirs(f.rirs.begin(), f.rirs.end());
        std::optional<std::filesystem::path> noise;
        if (!f.noise.empty()) noise = f.noise;
        result = run_experiment(f.dry, rirs, noise, f.manifest, config);
    }
    if (!f.out.empty()) write_text(f.out, format_experiment_csv(result));
    if (!f.segments_out.empty()) write_text(f.segments_out, format_segment_csv(result));

    char line[160];
    for (const ExperimentRow& row : result.rows) {
        out << row.rir_id << ": ground truth T60 "
            << (row.t60_ground_truth_s ? fmt(*row.t60_ground_truth_s, "%.4f") + " s" : std::string("n/a"));
        if (row.noise_power) out << ", noise power " << fmt(*row.noise_power, "%.4g");
        out << (row.flagged ? "  [flagged: " + row.error + "]" : std::string()) << "\n";
        for (const EstimatorSummary& s : row.estimators) {
            std::snprintf(line, sizeof line, "  %-10s median T60 %10s s   error variance %12s   %zu/%zu valid\n",
                          std::string(to_string(s.estimator)).c_str(),
                          s.median_t60_s ? fmt(*s.median_t60_s, "%.4f").c_str() : "-",
                          s.error_variance ? fmt(*s.error_variance, "%.3e").c_str() : "-",
                          s.segments - s.invalid, s.segments);
            out << line;
        }
    }
    return kExitOk;
}

// bench ----------------------------------------------------------------------

struct BenchFlags {
    std::string n = "1000";
    long long refinements = 5;
    long long n_l = 0;
    long long repeats = 21;
    double rho = 0.008;
    double sigma_d2 = 0.01;
    std::uint64_t seed = 1;
};

template <class Fn>
double median_microseconds(long long repeats, Fn fn) {
    std::vector<double> times;
    for (long long i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

int cmd_bench(const BenchFlags& f, std::ostream& out) {
    const auto ns = n_range_or_usage(f.n);
    if (ns.front() < 3) throw UsageError("--n values must be at least 3");
    if (f.refinements < 1) throw UsageError("--refinements must be at least 1");
    if (f.repeats < 1) throw UsageError("--repeats must be at least 1");
    if (f.n_l < 0) throw UsageError("--n-l must be non-negative");
    const DecayParams params{f.rho, 1.0, f.sigma_d2};
    try {
        params.validate();
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }

    char line[200];
    std::snprintf(line, sizeof line, "%7s %6s %10s %8s %12s %8s | %9s %9s %9s %9s\n", "N", "N_L", "NI mults", "4N",
                  "Hybrid mults", "ratio", "NI us", "LR us", "ML us", "Hybrid us");
    out << line;
    for (const std::size_t n : ns) {
        const std::size_t n_l = f.n_l > 0 ? static_cast<std::size_t>(f.n_l) : std::max<std::size_t>(2, n / 5);
        if (n_l > n) throw UsageError("--n-l must not exceed N");
        const SampledSignal signal = synth_polack(params, n, f.seed);
        const NoiseEstimate noise{f.sigma_d2};
        HybridOptions opts;
        opts.max_refinements = static_cast<std::size_t>(f.refinements);

        OpCount ni_ops, hy_ops;
        estimate_ni(signal, noise, {}, ni_ops);
        estimate_hybrid_mln(signal, noise, n_l, opts, hy_ops);

        volatile double sink = 0.0;
        const double t_ni = median_microseconds(f.repeats, [&] { sink = estimate_ni(signal, noise).rho_hat; });
        const double t_lr = median_microseconds(f.repeats, [&] { sink = estimate_lr(signal).rho_hat; });
        const double t_ml = median_microseconds(f.repeats, [&] { sink = estimate_ml(signal).rho_hat; });
        const double t_hy =
            median_microseconds(f.repeats, [&] { sink = estimate_hybrid_mln(signal, noise, n_l, opts).rho_hat; });
        (void)sink;

        std::snprintf(line, sizeof line, "%7zu %6zu %10llu %8zu %12llu %8.2f | %9.1f %9.1f %9.1f %9.1f\n", n, n_l,
                      static_cast<unsigned long long>(ni_ops.multiplies), 4 * n,
                      static_cast<unsigned long long>(hy_ops.multiplies),
                      static_cast<double>(hy_ops.multiplies) / static_cast<double>(ni_ops.multiplies), t_ni, t_lr,
                      t_ml, t_hy);
        out << line;
    }
    out << "Hybrid MLN refinements R = " << f.refinements << "; times are medians over " << f.repeats
        << " runs\n";
    return kExitOk;
}

}  // namespace

std::vector<std::size_t> parse_n_range(std::string_view text) {
    std::vector<std::size_t> out;
    if (text.empty()) throw std::invalid_argument("empty N list");
    for (const std::string& item : split(text, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() == 1) {
            out.push_back(parse_count(parts[0]));
        } else if (parts.size() == 2 || parts.size() == 3) {
            const std::size_t start = parse_count(parts[0]);
            const std::size_t stop = parse_count(parts[1]);
            const std::size_t step = parts.size() == 3 ? parse_count(parts[2]) : 1;
            if (step == 0) throw std::invalid_argument("range step must be positive");
            if (stop < start) throw std::invalid_argument("range '" + item + "' is descending");
            for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
        } else {
            throw std::invalid_argument("bad range '" + item + "'");
        }
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] <= out[i - 1]) throw std::invalid_argument("N values must be strictly ascending");
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Decay-rate and reverberation-time estimation toolkit", "decayrate"};
    app.footer(kFormatsHelp);
    app.require_subcommand(1, 1);

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo sweep of the estimators on synthetic decays");
    simulate->add_option("--rho", sim.rho, "Decay rate(s) per sample, comma separated")->capture_default_str();
    simulate->add_option("--sigma-v2", sim.sigma_v2, "Reverberation variance")->capture_default_str();
    simulate->add_option("--sigma-d2", sim.sigma_d2, "Noise variance")->capture_default_str();
    simulate->add_option("--n", sim.n, "Window lengths (start:stop:step)")->capture_default_str();
    simulate->add_option("--trials", sim.trials, "Monte-Carlo trials per cell")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    simulate->add_option("--estimators", sim.estimators, "Subset of ni,lr,ml,hybrid")->capture_default_str();
    simulate->add_option("--noise", sim.noise, "Noise power given to NI/Hybrid: exact or estimated")
        ->capture_default_str();
    simulate->add_option("--crb-mode", sim.crb_mode, "rho-only, nuisance (sigma_v2 unknown) or full-nuisance")->capture_default_str();
    simulate->add_option("--refinements", sim.refinements, "Hybrid MLN refinement steps R")->capture_default_str();
    simulate->add_option("--workers", sim.workers, "Threads (0 = all)")->capture_default_str();
    simulate->add_option("--out", sim.out, "CSV report path");

    EstimateFlags est;
    auto* estimate = app.add_subcommand("estimate", "Estimate the decay rate of a WAV file or its segments");
    estimate->add_option("input,--input", est.input, "WAV file")->required();
    estimate->add_option("--segment", est.segments, "start:end sample range (repeatable)");
    estimate->add_option("--estimator", est.estimator, "ni, lr, ml, hybrid or schroeder")->capture_default_str();
    estimate->add_option("--noise-var", est.noise_var, "Known noise power");
    estimate->add_option("--noise-from-tail", est.noise_from_tail, "Estimate noise power from this trailing fraction");
    estimate->add_option("--n-l", est.n_l, "Hybrid MLN early window (default N/5)");
    estimate->add_option("--refinements", est.refinements, "Hybrid MLN refinement steps R")->capture_default_str();
    estimate->add_option("--fit-hi", est.fit_hi, "Schroeder fit start [dB]")->capture_default_str();
    estimate->add_option("--fit-lo", est.fit_lo, "Schroeder fit end [dB]")->capture_default_str();
    estimate->add_flag("--no-offset", est.no_offset, "NI: drop the constant term of the fit");
    estimate->add_flag("--json-lines", est.json_lines, "One JSON object per segment");

    CrbFlags crb;
    auto* crb_cmd = app.add_subcommand("crb", "Cramer-Rao bound on the decay rate");
    crb_cmd->add_option("--rho", crb.rho, "Decay rate per sample")->capture_default_str();
    crb_cmd->add_option("--sigma-v2", crb.sigma_v2, "Reverberation variance")->capture_default_str();
    crb_cmd->add_option("--sigma-d2", crb.sigma_d2, "Noise variance")->capture_default_str();
    crb_cmd->add_option("--n", crb.n, "Window lengths (start:stop:step)")->capture_default_str();
    crb_cmd->add_option("--mode", crb.mode, "rho-only, nuisance (sigma_v2 unknown) or full-nuisance")->capture_default_str();
    crb_cmd->add_option("--out", crb.out, "CSV output path");

    ExperimentFlags exp;
    auto* experiment = app.add_subcommand("experiment", "Blind estimation on reverberant, noisy segments");
    experiment->add_flag("--synthetic", exp.synthetic, "Use the built-in burst/RIR fixture");
    experiment->add_option("--fixture-seed", exp.fixture_seed, "Seed of the synthetic fixture")->capture_default_str();
    experiment->add_option("--write-fixture", exp.write_fixture, "Also write the fixture WAVs and manifest here");
    experiment->add_option("--dry", exp.dry, "Dry excitation WAV");
    experiment->add_option("--rir", exp.rirs, "Room impulse response WAV (repeatable)");
    experiment->add_option("--noise", exp.noise, "Stationary noise WAV (Gaussian noise if omitted)");
    experiment->add_option("--manifest", exp.manifest, "Segment manifest");
    experiment->add_option("--snr", exp.snr_db, "Signal-to-noise ratio [dB]")->capture_default_str();
    experiment->add_option("--estimators", exp.estimators, "Subset of ni,hybrid,ml,lr")->capture_default_str();
    experiment->add_option("--noise-seed", exp.noise_seed, "Seed of the synthetic noise")->capture_default_str();
    experiment->add_option("--workers", exp.workers, "Threads (0 = all)")->capture_default_str();
    experiment->add_option("--out", exp.out, "Per-RIR CSV path");
    experiment->add_option("--segments-out", exp.segments_out, "Per-segment CSV path");

    BenchFlags bench;
    auto* bench_cmd = app.add_subcommand("bench", "Multiply counts and run times per estimator");
    bench_cmd->add_option("--n", bench.n, "Window lengths (start:stop:step)")->capture_default_str();
    bench_cmd->add_option("--refinements", bench.refinements, "Hybrid MLN refinement steps R")->capture_default_str();
    bench_cmd->add_option("--n-l", bench.n_l, "Hybrid MLN early window (default N/5)");
    bench_cmd->add_option("--repeats", bench.repeats, "Timing repetitions")->capture_default_str();
    bench_cmd->add_option("--rho", bench.rho, "Decay rate of the test signal")->capture_default_str();
    bench_cmd->add_option("--sigma-d2", bench.sigma_d2, "Noise variance of the test signal")->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Seed of the test signal")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim, out);
        if (*estimate) return cmd_estimate(est, out);
        if (*crb_cmd) return cmd_crb(crb, out);
        if (*experiment) return cmd_experiment(exp, out);
        if (*bench_cmd) return cmd_bench(bench, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace decayrate::cli
