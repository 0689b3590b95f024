#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "decayrate/bounds.hpp"
#include "decayrate/estimators.hpp"

namespace decayrate {

enum class NoiseKnowledge { Exact, Estimated };

/// Monte-Carlo grid: every (rho, N) cell runs `trials` realizations of the
/// decay model through each selected estimator.
struct McConfig {
    std::vector<double> rho_list{0.008};
    double sigma_v2 = 1.0;
    double sigma_d2 = 0.01;
    std::vector<std::size_t> n_list{1000};
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    std::vector<Estimator> estimators{Estimator::NI, Estimator::LR, Estimator::ML, Estimator::HybridMLN};
    NoiseKnowledge noise_knowledge = NoiseKnowledge::Exact;
    BoundMode crb_mode = BoundMode::Nuisance;
    std::size_t hybrid_refinements = 5;
    std::size_t hybrid_window_divisor = 5;  ///< N_L = N / divisor
    int workers = 0;                        ///< OpenMP threads; 0 = runtime default

    /// Throws ParameterError on an invalid grid.
    void validate() const;
};

struct McRow {
    Estimator estimator = Estimator::NI;
    double rho_true = 0.0;
    std::size_t n = 0;
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    double mse_db = 0.0;
    double crb = 0.0;
    double crb_db = 0.0;
    std::size_t trials = 0;
    std::size_t invalid = 0;  ///< trials with valid == false or an estimator error
    bool flagged = false;     ///< invalid > trials / 2

    friend bool operator==(const McRow&, const McRow&) = default;
};

struct McReport {
    std::vector<McRow> rows;
};

/// Decay-rate estimates of one trial, one entry per configured estimator.
/// An estimator error yields rho_hat = 0 with valid = false.
std::vector<EstimateResult> run_trial(const McConfig& config, std::size_t rho_index, std::size_t n_index,
                                      std::size_t trial);

/// Trials of each cell are spread over OpenMP threads. Per-trial seeds depend
/// only on (seed, rho index, N index, trial index) and the reduction runs in
/// trial order, so the report does not depend on the thread count.
McReport run_sweep(const McConfig& config);

/// Single-threaded reference for run_sweep.
McReport run_sweep_serial(const McConfig& config);

/// Aggregates raw estimates of one cell: bias, population variance, and
/// mse = variance + bias^2.
McRow summarize_cell(Estimator estimator, double rho_true, std::size_t n, const std::vector<double>& rho_hats,
                     std::size_t invalid, double crb);

inline constexpr std::string_view kReportHeader =
    "estimator,rho_true,n,bias,variance,mse,mse_db,crb,crb_db,trials,invalid,flagged";

std::string format_report_csv(const McReport& report);
McReport parse_report_csv(std::string_view text);

/// Writes format_report_csv(report) to `path`. Throws IoError naming the path.
void export_report(const McReport& report, const std::filesystem::path& path);
McReport import_report(const std::filesystem::path& path);

}  // namespace decayrate
