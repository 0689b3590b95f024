#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decayrate/estimators.hpp"
#include "decayrate/signal.hpp"

namespace decayrate {

// ---------------------------------------------------------------------------
// Signal plumbing
// ---------------------------------------------------------------------------

/// Full linear convolution, length N_dry + N_rir - 1. Output samples are
/// computed independently across OpenMP threads; each is a fixed-order sum,
/// so the result does not depend on the thread count.
SampledSignal convolve(const SampledSignal& dry, const SampledSignal& rir, int workers = 0);

/// Serial scatter-add reference for convolve().
SampledSignal convolve_reference(const SampledSignal& dry, const SampledSignal& rir);

struct MixResult {
    SampledSignal mixed;
    double noise_gain = 0.0;    ///< factor applied to the noise
    bool noise_looped = false;  ///< noise was shorter than the clean signal
};

/// Scales `noise` so that 10 log10(P_clean / P_noise) = snr_db over the
/// length of `clean`, then adds it. Throws DegenerateInputError for a silent
/// clean or noise signal.
MixResult mix_noise(const SampledSignal& clean, const SampledSignal& noise, double snr_db);

// ---------------------------------------------------------------------------
// Segment manifest
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSilenceLabel = "silence";

struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;  ///< exclusive
    std::string label;

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Plain text, one "start end label" entry per line (sample indices, end
/// exclusive), '#' starts a comment. A segment labelled "silence" marks the
/// noise-only region; every other entry is a decay segment.
struct SegmentManifest {
    std::vector<Segment> entries;

    static SegmentManifest parse(std::string_view text);
    static SegmentManifest load(const std::filesystem::path& path);
    [[nodiscard]] std::string format() const;

    /// Throws ParameterError unless 0 <= start < end <= length for every entry.
    void validate(std::size_t length) const;
    [[nodiscard]] std::optional<Segment> silence() const;
    [[nodiscard]] std::vector<Segment> decay_segments() const;
};

// ---------------------------------------------------------------------------
// Blind estimation experiment
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    double snr_db = 12.0;
    std::vector<Estimator> estimators{Estimator::NI, Estimator::HybridMLN, Estimator::ML, Estimator::LR};
    SchroederOptions schroeder{};
    std::size_t hybrid_refinements = 5;
    std::size_t hybrid_window_divisor = 5;
    double fallback_noise_tail = 0.1;  ///< used when the manifest has no silence entry
    std::uint64_t noise_seed = 1;      ///< synthetic noise when no noise recording is given
    int workers = 0;
};

struct NamedSignal {
    std::string id;
    SampledSignal signal;
};

struct ExperimentInputs {
    SampledSignal dry;
    std::vector<NamedSignal> rirs;
    std::optional<SampledSignal> noise;  ///< stationary noise recording; Gaussian if absent
    SegmentManifest manifest;
};

struct SegmentEstimate {
    std::string rir_id;
    std::string label;
    std::size_t start = 0;
    std::size_t end = 0;
    Estimator estimator = Estimator::NI;
    double rho_hat = 0.0;
    std::optional<double> t60_s;
    bool valid = false;
    std::string error;
};

struct EstimatorSummary {
    Estimator estimator = Estimator::NI;
    std::optional<double> median_t60_s;    ///< over valid segments
    std::optional<double> error_variance;  ///< of (t60 - ground truth) over valid segments
    std::size_t segments = 0;
    std::size_t invalid = 0;
};

struct ExperimentRow {
    std::string rir_id;
    std::optional<double> t60_ground_truth_s;  ///< Schroeder integration of the clean RIR
    std::optional<double> noise_power;         ///< sigma_d2 estimate used by the noise-robust estimators
    std::vector<EstimatorSummary> estimators;
    std::string error;     ///< first stage error affecting the row
    bool flagged = false;  ///< no decay segments, or a stage error
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::vector<SegmentEstimate> segments;
};

/// For each RIR: Schroeder ground truth on the clean RIR, convolution with the
/// dry signal, noise mixing at snr_db, noise power from the manifest's silence
/// region (else the trailing fallback_noise_tail of the file), then every
/// blind estimator on every decay segment. Stage errors are recorded on the
/// affected row; the run continues.
ExperimentResult run_experiment(const ExperimentInputs& inputs, const ExperimentConfig& config);

/// Loads the WAV and manifest files, then runs the experiment above.
ExperimentResult run_experiment(const std::filesystem::path& dry_path,
                                const std::vector<std::filesystem::path>& rir_paths,
                                const std::optional<std::filesystem::path>& noise_path,
                                const std::filesystem::path& manifest_path, const ExperimentConfig& config);

std::string format_experiment_csv(const ExperimentResult& result);
std::string format_segment_csv(const ExperimentResult& result);

// ---------------------------------------------------------------------------
// Synthetic fixture
// ---------------------------------------------------------------------------

struct FixtureConfig {
    double sample_rate_hz = 8000.0;
    std::vector<double> t60_s{0.2, 0.4, 0.6};
    std::size_t bursts = 20;
    std::uint64_t seed = 2015;
};

/// Interrupted white-noise bursts, synthetic noiseless RIRs and a manifest
/// listing one decay segment after each burst plus a trailing silence region.
ExperimentInputs make_fixture(const FixtureConfig& config = {});

/// Writes dry.wav, rir_<k>.wav (16-bit PCM, peak-normalized) and
/// manifest.txt into `dir`; returns the RIR paths in order.
std::vector<std::filesystem::path> write_fixture(const ExperimentInputs& fixture, const std::filesystem::path& dir);

}  // namespace decayrate
