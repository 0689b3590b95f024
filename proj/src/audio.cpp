#include "decayrate/audio.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "decayrate/errors.hpp"
#include "decayrate/model.hpp"
#include "decayrate/rng.hpp"
#include "decayrate/wav.hpp"

namespace decayrate {

namespace {

void require_same_rate(const SampledSignal& a, const SampledSignal& b) {
    if (a.sample_rate_hz() != b.sample_rate_hz())
        throw ParameterError("sample rate mismatch: " + std::to_string(a.sample_rate_hz()) + " Hz vs " +
                             std::to_string(b.sample_rate_hz()) + " Hz");
}

std::string number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::string optional_number(const std::optional<double>& x) { return x ? number(*x) : std::string(); }

std::string csv_text(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + '"';
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

EstimateResult run_blind(Estimator e, const SampledSignal& segment, NoiseEstimate noise,
                         const ExperimentConfig& config) {
    switch (e) {
        case Estimator::NI: return estimate_ni(segment, noise);
        case Estimator::LR: return estimate_lr(segment);
        case Estimator::ML: return estimate_ml(segment);
        case Estimator::HybridMLN: {
            HybridOptions opts;
            opts.max_refinements = config.hybrid_refinements;
            const std::size_t n_l = std::clamp<std::size_t>(segment.size() / config.hybrid_window_divisor, 2,
                                                            segment.size());
            return estimate_hybrid_mln(segment, noise, n_l, opts);
        }
        case Estimator::Schroeder: return estimate_schroeder(segment, config.schroeder);
    }
    throw ParameterError("unknown estimator");
}

struct RirOutcome {
    ExperimentRow row;
    std::vector<SegmentEstimate> segments;
};

RirOutcome process_rir(const ExperimentInputs& inputs, const ExperimentConfig& config, std::size_t index) {
    RirOutcome out;
    ExperimentRow& row = out.row;
    const NamedSignal& rir = inputs.rirs[index];
    row.rir_id = rir.id;
    const auto decay = inputs.manifest.decay_segments();

    const auto note_error = [&row](const std::string& what) {
        if (row.error.empty()) row.error = what;
        row.flagged = true;
    };

    try {
        const EstimateResult gt = estimate_schroeder(rir.signal, config.schroeder);
        if (gt.valid)
            row.t60_ground_truth_s = gt.t60_s;
        else
            note_error("ground truth: Schroeder fit is not decaying");
    } catch (const std::exception& e) {
        note_error(std::string("ground truth: ") + e.what());
    }

    std::optional<SampledSignal> mixed;
    try {
        const SampledSignal reverberant = convolve(inputs.dry, rir.signal, 1);
        SampledSignal noise = inputs.noise ? *inputs.noise : [&] {
            std::mt19937_64 gen(derive_seed(config.noise_seed, {index}));
            std::normal_distribution<double> dist(0.0, 1.0);
            std::vector<double> v(reverberant.size());
            for (double& x : v) x = dist(gen);
            return SampledSignal(std::move(v), reverberant.sample_rate_hz());
        }();
        mixed = mix_noise(reverberant, noise, config.snr_db).mixed;

        const auto silence = inputs.manifest.silence();
        row.noise_power = silence ? estimate_noise_floor(mixed->slice(silence->start, silence->end), 0.5).sigma_d2_hat
                                  : estimate_noise_floor(*mixed, config.fallback_noise_tail).sigma_d2_hat;
    } catch (const std::exception& e) {
        note_error(std::string("mixing: ") + e.what());
    }

    if (decay.empty()) note_error("manifest lists no decay segments");

    std::vector<std::vector<double>> t60s(config.estimators.size());
    row.estimators.resize(config.estimators.size());
    for (std::size_t e = 0; e < config.estimators.size(); ++e) row.estimators[e].estimator = config.estimators[e];

    if (mixed && row.noise_power) {
        const NoiseEstimate noise{*row.noise_power};
        for (const Segment& seg : decay) {
            const SampledSignal piece = mixed->slice(seg.start, seg.end);
            for (std::size_t e = 0; e < config.estimators.size(); ++e) {
                SegmentEstimate se;
                se.rir_id = rir.id;
                se.label = seg.label;
                se.start = seg.start;
                se.end = seg.end;
                se.estimator = config.estimators[e];
                try {
                    const EstimateResult r = run_blind(se.estimator, piece, noise, config);
                    se.rho_hat = r.rho_hat;
                    se.valid = r.valid;
                    se.t60_s = r.t60_s;
                } catch (const std::exception& ex) {
                    se.error = ex.what();
                }
                EstimatorSummary& sum = row.estimators[e];
                ++sum.segments;
                if (se.valid)
                    t60s[e].push_back(*se.t60_s);
                else
                    ++sum.invalid;
                out.segments.push_back(std::move(se));
            }
        }
    }

    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        EstimatorSummary& sum = row.estimators[e];
        if (t60s[e].empty()) continue;
        sum.median_t60_s = median(t60s[e]);
        if (row.t60_ground_truth_s) {
            double mean = 0.0;
            for (const double t : t60s[e]) mean += t - *row.t60_ground_truth_s;
            mean /= static_cast<double>(t60s[e].size());
            double var = 0.0;
            for (const double t : t60s[e]) {
                const double d = t - *row.t60_ground_truth_s - mean;
                var += d * d;
            }
            sum.error_variance = var / static_cast<double>(t60s[e].size());
        }
    }
    return out;
}

}  // namespace

SampledSignal convolve(const SampledSignal& dry, const SampledSignal& rir, int workers) {
    require_same_rate(dry, rir);
    const auto x = dry.samples();
    const auto h = rir.samples();
    const std::size_t out_len = x.size() + h.size() - 1;
    std::vector<double> y(out_len, 0.0);
    // Each block of outputs is owned by one thread and accumulated input by
    // input in ascending order, the same order as the serial scatter.
    constexpr std::size_t kBlock = 4096;
    const auto blocks = static_cast<std::ptrdiff_t>((out_len + kBlock - 1) / kBlock);
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t b = 0; b < blocks; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t hi = std::min(lo + kBlock, out_len);
        const std::size_t i_lo = lo >= h.size() ? lo - h.size() + 1 : 0;
        const std::size_t i_hi = std::min(hi, x.size());
        for (std::size_t i = i_lo; i < i_hi; ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            const std::size_t k_lo = lo > i ? lo - i : 0;
            const std::size_t k_hi = std::min(h.size(), hi - i);
            double* out = y.data() + i;
            for (std::size_t k = k_lo; k < k_hi; ++k) out[k] += xi * h[k];
        }
    }
    return {std::move(y), dry.sample_rate_hz()};
}

SampledSignal convolve_reference(const SampledSignal& dry, const SampledSignal& rir) {
    require_same_rate(dry, rir);
    const auto x = dry.samples();
    const auto h = rir.samples();
    std::vector<double> y(x.size() + h.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        for (std::size_t k = 0; k < h.size(); ++k) y[i + k] += x[i] * h[k];
    }
    return {std::move(y), dry.sample_rate_hz()};
}

MixResult mix_noise(const SampledSignal& clean, const SampledSignal& noise, double snr_db) {
    require_same_rate(clean, noise);
    if (!std::isfinite(snr_db)) throw ParameterError("SNR must be finite");
    const std::size_t n = clean.size();
    const bool looped = noise.size() < n;
    const auto noise_at = [&](std::size_t i) { return noise[i % noise.size()]; };

    const double p_clean = clean.mean_power();
    if (!(p_clean > 0.0)) throw DegenerateInputError("clean signal is silent; SNR is undefined");
    double p_noise = 0.0;
    for (std::size_t i = 0; i < n; ++i) p_noise += noise_at(i) * noise_at(i);
    p_noise /= static_cast<double>(n);
    if (!(p_noise > 0.0)) throw DegenerateInputError("noise signal is silent; SNR is undefined");

    const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = clean[i] + gain * noise_at(i);
    return {SampledSignal(std::move(out), clean.sample_rate_hz()), gain, looped};
}

SegmentManifest SegmentManifest::parse(std::string_view text) {
    SegmentManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        long long start = 0, end = 0;
        if (!(ls >> start)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw FormatError("manifest line " + std::to_string(line_no) + ": expected 'start end label'");
        }
        if (!(ls >> end)) throw FormatError("manifest line " + std::to_string(line_no) + ": missing end index");
        std::string label;
        std::getline(ls >> std::ws, label);
        while (!label.empty() && (label.back() == '\r' || label.back() == ' ' || label.back() == '\t'))
            label.pop_back();
        if (start < 0 || end <= start)
            throw FormatError("manifest line " + std::to_string(line_no) + ": need 0 <= start < end");
        m.entries.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end), label});
    }
    return m;
}

SegmentManifest SegmentManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string SegmentManifest::format() const {
    std::string out = "# start end label (sample indices, end exclusive)\n";
    for (const Segment& s : entries)
        out += std::to_string(s.start) + ' ' + std::to_string(s.end) + ' ' + s.label + '\n';
    return out;
}

void SegmentManifest::validate(std::size_t length) const {
    for (const Segment& s : entries) {
        if (!(s.start < s.end && s.end <= length))
            throw ParameterError("segment '" + s.label + "' [" + std::to_string(s.start) + ", " +
                                 std::to_string(s.end) + ") does not fit a signal of " + std::to_string(length) +
                                 " samples");
    }
}

std::optional<Segment> SegmentManifest::silence() const {
    for (const Segment& s : entries)
        if (s.label == kSilenceLabel) return s;
    return std::nullopt;
}

std::vector<Segment> SegmentManifest::decay_segments() const {
    std::vector<Segment> out;
    for (const Segment& s : entries)
        if (s.label != kSilenceLabel) out.push_back(s);
    return out;
}

ExperimentResult run_experiment(const ExperimentInputs& inputs, const ExperimentConfig& config) {
    inputs.manifest.validate(inputs.dry.size());
    if (config.hybrid_window_divisor < 1) throw ParameterError("hybrid window divisor must be at least 1");
    if (!(config.fallback_noise_tail > 0.0 && config.fallback_noise_tail <= 0.5))
        throw ParameterError("fallback noise tail must lie in (0, 0.5]");

    std::vector<RirOutcome> outcomes(inputs.rirs.size());
    const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
    const auto count = static_cast<std::ptrdiff_t>(inputs.rirs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t k = 0; k < count; ++k)
        outcomes[static_cast<std::size_t>(k)] = process_rir(inputs, config, static_cast<std::size_t>(k));

    ExperimentResult result;
    for (RirOutcome& o : outcomes) {
        result.rows.push_back(std::move(o.row));
        for (SegmentEstimate& s : o.segments) result.segments.push_back(std::move(s));
    }
    return result;
}

ExperimentResult run_experiment(const std::filesystem::path& dry_path,
                                const std::vector<std::filesystem::path>& rir_paths,
                                const std::optional<std::filesystem::path>& noise_path,
                                const std::filesystem::path& manifest_path, const ExperimentConfig& config) {
    ExperimentInputs inputs{load_wav(dry_path).signal, {}, std::nullopt, SegmentManifest::load(manifest_path)};
    for (const auto& p : rir_paths) inputs.rirs.push_back({p.stem().string(), load_wav(p).signal});
    if (noise_path) inputs.noise = load_wav(*noise_path).signal;
    return run_experiment(inputs, config);
}

std::string format_experiment_csv(const ExperimentResult& result) {
    std::string out =
        "rir_id,t60_ground_truth_s,noise_power,estimator,median_t60_s,error_variance,segments,invalid,flagged,error\n";
    for (const ExperimentRow& row : result.rows) {
        const auto prefix = csv_text(row.rir_id) + ',' + optional_number(row.t60_ground_truth_s) + ',' +
                            optional_number(row.noise_power) + ',';
        const auto suffix = std::string(row.flagged ? "1" : "0") + ',' + csv_text(row.error) + '\n';
        if (row.estimators.empty()) out += prefix + ",,,0,0," + suffix;
        for (const EstimatorSummary& s : row.estimators) {
            out += prefix + std::string(to_string(s.estimator)) + ',' + optional_number(s.median_t60_s) + ',' +
                   optional_number(s.error_variance) + ',' + std::to_string(s.segments) + ',' +
                   std::to_string(s.invalid) + ',' + suffix;
        }
    }
    return out;
}

std::string format_segment_csv(const ExperimentResult& result) {
    std::string out = "rir_id,label,start,end,estimator,rho_hat,t60_s,valid,error\n";
    for (const SegmentEstimate& s : result.segments) {
        out += csv_text(s.rir_id) + ',' + csv_text(s.label) + ',' + std::to_string(s.start) + ',' +
               std::to_string(s.end) + ',' + std::string(to_string(s.estimator)) + ',' + number(s.rho_hat) + ',' +
               optional_number(s.t60_s) + ',' + (s.valid ? "1" : "0") + ',' + csv_text(s.error) + '\n';
    }
    return out;
}

ExperimentInputs make_fixture(const FixtureConfig& config) {
    if (config.bursts < 1) throw ParameterError("fixture needs at least one burst");
    const double fs = config.sample_rate_hz;
    const auto sec = [fs](double s) { return static_cast<std::size_t>(std::llround(s * fs)); };
    const std::size_t gap = sec(1.0);
    const std::size_t tail = sec(1.0);

    std::vector<double> dry;
    SegmentManifest manifest;
    for (std::size_t i = 0; i < config.bursts; ++i) {
        const std::size_t burst = sec(0.2) + sec(0.01) * ((i * 7) % 11);
        std::mt19937_64 gen(derive_seed(config.seed, {i}));
        std::normal_distribution<double> dist(0.0, 0.25);
        for (std::size_t k = 0; k < burst; ++k) dry.push_back(dist(gen));
        const std::size_t decay_len = sec(0.15) + sec(0.0125) * ((i * 13) % 20);
        manifest.entries.push_back({dry.size(), dry.size() + decay_len, "decay" + std::to_string(i + 1)});
        dry.resize(dry.size() + gap, 0.0);
    }
    dry.resize(dry.size() + tail, 0.0);
    const std::size_t silence_len = sec(0.75);
    manifest.entries.push_back({dry.size() - silence_len, dry.size(), std::string(kSilenceLabel)});

    ExperimentInputs inputs{SampledSignal(std::move(dry), fs), {}, std::nullopt, std::move(manifest)};
    for (std::size_t k = 0; k < config.t60_s.size(); ++k) {
        const double t60 = config.t60_s[k];
        char id[32];
        std::snprintf(id, sizeof id, "rir_t60_%03d", static_cast<int>(std::lround(t60 * 1000.0)));
        inputs.rirs.push_back({id, synth_rir(t60, fs, sec(1.5 * t60), -std::numeric_limits<double>::infinity(),
                                             derive_seed(config.seed, {1000 + k}))});
    }
    return inputs;
}

std::vector<std::filesystem::path> write_fixture(const ExperimentInputs& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_wav(dir / "dry.wav", fixture.dry);
    std::vector<std::filesystem::path> paths;
    for (const NamedSignal& rir : fixture.rirs) {
        double peak = 0.0;
        for (const double x : rir.signal.samples()) peak = std::max(peak, std::abs(x));
        std::vector<double> scaled(rir.signal.samples().begin(), rir.signal.samples().end());
        if (peak > 0.0)
            for (double& x : scaled) x *= 0.99 / peak;
        const auto path = dir / (rir.id + ".wav");
        save_wav(path, SampledSignal(std::move(scaled), rir.signal.sample_rate_hz()));
        paths.push_back(path);
    }
    std::ofstream m(dir / "manifest.txt");
    if (!m) throw IoError("cannot write '" + (dir / "manifest.txt").string() + "'");
    m << fixture.manifest.format();
    return paths;
}

}  // namespace decayrate
