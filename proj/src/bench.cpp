#include "decayrate/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "decayrate/errors.hpp"
#include "decayrate/model.hpp"
#include "decayrate/rng.hpp"

namespace decayrate {

namespace {

constexpr std::uint64_t kNoiseStreamTag = 0x6e6f697365ULL;

std::string format_number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

double parse_number(const std::string& field) {
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double x = std::stod(field, &used);
    if (used != field.size()) throw FormatError("bad number '" + field + "'");
    return x;
}

struct CellBuffers {
    std::vector<std::vector<double>> rho_hat;  // [estimator][trial]
    std::vector<std::vector<unsigned char>> invalid;
};

CellBuffers make_buffers(const McConfig& config) {
    CellBuffers b;
    b.rho_hat.assign(config.estimators.size(), std::vector<double>(config.trials));
    b.invalid.assign(config.estimators.size(), std::vector<unsigned char>(config.trials));
    return b;
}

void store_trial(CellBuffers& b, std::size_t trial, const std::vector<EstimateResult>& results) {
    for (std::size_t e = 0; e < results.size(); ++e) {
        b.rho_hat[e][trial] = results[e].rho_hat;
        b.invalid[e][trial] = results[e].valid ? 0 : 1;
    }
}

void append_cell_rows(const McConfig& config, std::size_t rho_index, std::size_t n_index, const CellBuffers& b,
                      McReport& report) {
    const double rho = config.rho_list[rho_index];
    const std::size_t n = config.n_list[n_index];
    const double crb = crb_rho({rho, config.sigma_v2, config.sigma_d2}, n, config.crb_mode);
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        const auto invalid = static_cast<std::size_t>(std::count(b.invalid[e].begin(), b.invalid[e].end(), 1));
        report.rows.push_back(summarize_cell(config.estimators[e], rho, n, b.rho_hat[e], invalid, crb));
    }
}

template <class CellRunner>
McReport sweep(const McConfig& config, CellRunner run_cell) {
    config.validate();
    McReport report;
    for (std::size_t i = 0; i < config.rho_list.size(); ++i) {
        for (std::size_t j = 0; j < config.n_list.size(); ++j) {
            CellBuffers buffers = make_buffers(config);
            run_cell(i, j, buffers);
            append_cell_rows(config, i, j, buffers, report);
        }
    }
    return report;
}

}  // namespace

void McConfig::validate() const {
    if (trials < 1) throw ParameterError("trials must be at least 1");
    if (rho_list.empty()) throw ParameterError("rho list is empty");
    if (n_list.empty()) throw ParameterError("N list is empty");
    if (estimators.empty()) throw ParameterError("no estimators selected");
    for (const double r : rho_list)
        if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("decay rates must be positive");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 3) throw ParameterError("window lengths must be at least 3");
        if (i > 0 && n_list[i] <= n_list[i - 1]) throw ParameterError("N list must be strictly ascending");
    }
    if (!(sigma_v2 > 0.0) || !(sigma_d2 >= 0.0) || !std::isfinite(sigma_v2) || !std::isfinite(sigma_d2))
        throw ParameterError("need sigma_v2 > 0 and sigma_d2 >= 0");
    if (hybrid_window_divisor < 1) throw ParameterError("hybrid window divisor must be at least 1");
    if (workers < 0) throw ParameterError("workers must be non-negative");
    for (const Estimator e : estimators)
        if (e == Estimator::Schroeder)
            throw ParameterError("Schroeder integration needs an impulse response and is not a sweep estimator");
}

std::vector<EstimateResult> run_trial(const McConfig& config, std::size_t rho_index, std::size_t n_index,
                                      std::size_t trial) {
    const double rho = config.rho_list[rho_index];
    const std::size_t n = config.n_list[n_index];
    const std::uint64_t seed = derive_seed(config.seed, {rho_index, n_index, trial});
    const SampledSignal signal = synth_polack({rho, config.sigma_v2, config.sigma_d2}, n, seed);

    NoiseEstimate noise{config.sigma_d2};
    if (config.noise_knowledge == NoiseKnowledge::Estimated) {
        noise.sigma_d2_hat = 0.0;
        if (config.sigma_d2 > 0.0) {
            const SampledSignal noise_only = synth_polack({rho, 0.0, config.sigma_d2}, 2 * n,
                                                          derive_seed(seed, {kNoiseStreamTag}));
            noise = estimate_noise_floor(noise_only, 0.5);
        }
    }
    const std::size_t n_l = std::max<std::size_t>(2, n / config.hybrid_window_divisor);

    std::vector<EstimateResult> out;
    out.reserve(config.estimators.size());
    for (const Estimator e : config.estimators) {
        try {
            switch (e) {
                case Estimator::NI: out.push_back(estimate_ni(signal, noise)); break;
                case Estimator::LR: out.push_back(estimate_lr(signal)); break;
                case Estimator::ML: out.push_back(estimate_ml(signal)); break;
                case Estimator::HybridMLN: {
                    HybridOptions opts;
                    opts.max_refinements = config.hybrid_refinements;
                    out.push_back(estimate_hybrid_mln(signal, noise, n_l, opts));
                    break;
                }
                case Estimator::Schroeder: out.push_back(estimate_schroeder(signal)); break;
            }
        } catch (const Error&) {
            out.push_back(EstimateResult{});
        }
    }
    return out;
}

McReport run_sweep(const McConfig& config) {
    const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
    return sweep(config, [&](std::size_t i, std::size_t j, CellBuffers& buffers) {
        const auto trials = static_cast<std::ptrdiff_t>(config.trials);
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads)
        for (std::ptrdiff_t t = 0; t < trials; ++t) {
            const auto k = static_cast<std::size_t>(t);
            store_trial(buffers, k, run_trial(config, i, j, k));
        }
    });
}

McReport run_sweep_serial(const McConfig& config) {
    return sweep(config, [&](std::size_t i, std::size_t j, CellBuffers& buffers) {
        for (std::size_t k = 0; k < config.trials; ++k) store_trial(buffers, k, run_trial(config, i, j, k));
    });
}

McRow summarize_cell(Estimator estimator, double rho_true, std::size_t n, const std::vector<double>& rho_hats,
                     std::size_t invalid, double crb) {
    McRow row;
    row.estimator = estimator;
    row.rho_true = rho_true;
    row.n = n;
    row.trials = rho_hats.size();
    row.invalid = invalid;
    row.flagged = 2 * invalid > row.trials;

    const double count = static_cast<double>(rho_hats.size());
    double sum = 0.0;
    for (const double x : rho_hats) sum += x;
    const double mean = sum / count;
    double sq = 0.0;
    for (const double x : rho_hats) sq += (x - mean) * (x - mean);

    row.bias = mean - rho_true;
    row.variance = sq / count;
    row.mse = row.variance + row.bias * row.bias;
    row.mse_db = 10.0 * std::log10(row.mse);
    row.crb = crb;
    row.crb_db = 10.0 * std::log10(crb);
    return row;
}

std::string format_report_csv(const McReport& report) {
    std::string out(kReportHeader);
    out += '\n';
    for (const McRow& r : report.rows) {
        out += to_string(r.estimator);
        for (const double x : {r.rho_true, static_cast<double>(r.n), r.bias, r.variance, r.mse, r.mse_db, r.crb,
                               r.crb_db}) {
            out += ',';
            out += format_number(x);
        }
        out += ',' + std::to_string(r.trials) + ',' + std::to_string(r.invalid) + ',' + (r.flagged ? "1" : "0");
        out += '\n';
    }
    return out;
}

McReport parse_report_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kReportHeader) throw FormatError("missing report header");
    McReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
        if (fields.size() != 12) throw FormatError("expected 12 fields in report row: " + line);
        McRow r;
        const auto est = parse_estimator(fields[0]);
        if (!est) throw FormatError("unknown estimator '" + fields[0] + "'");
        r.estimator = *est;
        r.rho_true = parse_number(fields[1]);
        r.n = std::stoull(fields[2]);
        r.bias = parse_number(fields[3]);
        r.variance = parse_number(fields[4]);
        r.mse = parse_number(fields[5]);
        r.mse_db = parse_number(fields[6]);
        r.crb = parse_number(fields[7]);
        r.crb_db = parse_number(fields[8]);
        r.trials = std::stoull(fields[9]);
        r.invalid = std::stoull(fields[10]);
        r.flagged = fields[11] == "1";
        report.rows.push_back(r);
    }
    return report;
}

void export_report(const McReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const std::string text = format_report_csv(report);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

McReport import_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_report_csv(buf.str());
}

}  // namespace decayrate
