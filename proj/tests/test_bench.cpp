#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "decayrate/bench.hpp"
#include "decayrate/errors.hpp"

using namespace decayrate;
using Catch::Approx;

namespace {

McConfig small_config() {
    McConfig c;
    c.rho_list = {0.008, 0.004};
    c.n_list = {100, 300};
    c.trials = 40;
    c.seed = 7;
    return c;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("decayrate_test_" + name);
}

}  // namespace

TEST_CASE("single trial has zero variance", "[bench]") {
    auto c = small_config();
    c.trials = 1;
    const auto report = run_sweep(c);
    REQUIRE(report.rows.size() == 2 * 2 * 4);
    for (const auto& r : report.rows) {
        CHECK(r.trials == 1);
        CHECK(r.variance == 0.0);
        CHECK(r.mse == Approx(r.bias * r.bias).epsilon(1e-12));
    }
}

TEST_CASE("report rows satisfy the MSE decomposition", "[bench]") {
    const auto report = run_sweep(small_config());
    for (const auto& r : report.rows) {
        CHECK(std::abs(r.mse - (r.variance + r.bias * r.bias)) <= 1e-12 * r.mse);
        CHECK(r.mse >= 0.0);
        CHECK(r.crb > 0.0);
        CHECK(r.mse_db == Approx(10.0 * std::log10(r.mse)).epsilon(1e-12));
        CHECK(r.crb_db == Approx(10.0 * std::log10(r.crb)).epsilon(1e-12));
        CHECK(r.crb == Approx(crb_rho({r.rho_true, 1.0, 0.01}, r.n)).epsilon(1e-15));
    }
}

TEST_CASE("rows are ordered by rate, length, estimator", "[bench]") {
    const auto c = small_config();
    const auto report = run_sweep(c);
    std::size_t k = 0;
    for (const double rho : c.rho_list)
        for (const std::size_t n : c.n_list)
            for (const auto e : c.estimators) {
                CHECK(report.rows[k].rho_true == rho);
                CHECK(report.rows[k].n == n);
                CHECK(report.rows[k].estimator == e);
                ++k;
            }
}

TEST_CASE("parallel sweep equals the serial reference", "[bench]") {
    auto c = small_config();
    c.noise_knowledge = NoiseKnowledge::Estimated;
    const auto serial = run_sweep_serial(c);
    const auto serial_csv = format_report_csv(serial);
    for (const int workers : {0, 1, 2, 3, 4}) {
        c.workers = workers;
        const auto parallel = run_sweep(c);
        CHECK(parallel.rows == serial.rows);
        CHECK(format_report_csv(parallel) == serial_csv);
    }
}

TEST_CASE("trials are reproducible in isolation", "[bench]") {
    const auto c = small_config();
    const auto a = run_trial(c, 1, 0, 17);
    const auto b = run_trial(c, 1, 0, 17);
    REQUIRE(a.size() == c.estimators.size());
    for (std::size_t e = 0; e < a.size(); ++e) CHECK(a[e].rho_hat == b[e].rho_hat);
    CHECK(run_trial(c, 1, 0, 18)[0].rho_hat != a[0].rho_hat);
}

TEST_CASE("estimated noise differs from exact noise", "[bench]") {
    auto exact = small_config();
    auto estimated = exact;
    estimated.noise_knowledge = NoiseKnowledge::Estimated;
    const auto a = run_sweep(exact);
    const auto b = run_sweep(estimated);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto e = a.rows[i].estimator;
        if (e == Estimator::NI || e == Estimator::HybridMLN)
            CHECK(a.rows[i].mse != b.rows[i].mse);
        else
            CHECK(a.rows[i] == b.rows[i]);
    }
}

TEST_CASE("CSV export", "[bench]") {
    CHECK(format_report_csv({}) == std::string(kReportHeader) + "\n");

    McConfig c;
    c.rho_list = {0.008, 0.004, 0.002};
    c.n_list.clear();
    for (std::size_t n = 50; n <= 1000; n += 50) c.n_list.push_back(n);
    c.trials = 1;
    const auto report = run_sweep(c);
    CHECK(report.rows.size() == 240);
    const auto csv = format_report_csv(report);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 241);

    const auto path = temp_path("report.csv");
    export_report(report, path);
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == csv);

    const auto back = import_report(path);
    REQUIRE(back.rows.size() == report.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
        const auto& x = back.rows[i];
        const auto& y = report.rows[i];
        CHECK(x.estimator == y.estimator);
        CHECK(x.n == y.n);
        CHECK(x.rho_true == y.rho_true);
        CHECK(x.mse == Approx(y.mse).epsilon(1e-8));
        CHECK(x.trials == y.trials);
        CHECK(x.invalid == y.invalid);
    }
    // nine significant digits are a fixed point of export/import
    CHECK(format_report_csv(back) == csv);
    std::filesystem::remove(path);
}

TEST_CASE("CSV errors", "[bench]") {
    CHECK_THROWS_AS(parse_report_csv("bogus\n"), FormatError);
    CHECK_THROWS_AS(parse_report_csv(std::string(kReportHeader) + "\nNI,1,2\n"), FormatError);
    CHECK_THROWS_AS(import_report(temp_path("does_not_exist.csv")), IoError);
    CHECK_THROWS_AS(export_report({}, "/nonexistent-dir/x/report.csv"), IoError);
    try {
        import_report("/nonexistent-dir/r.csv");
    } catch (const IoError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("/nonexistent-dir/r.csv"));
    }
}

TEST_CASE("config validation", "[bench]") {
    auto c = small_config();
    CHECK_NOTHROW(c.validate());
    c.trials = 0;
    CHECK_THROWS_AS(run_sweep(c), ParameterError);
    c = small_config();
    c.n_list = {300, 100};
    CHECK_THROWS_AS(run_sweep(c), ParameterError);
    c = small_config();
    c.rho_list = {0.0};
    CHECK_THROWS_AS(run_sweep(c), ParameterError);
    c = small_config();
    c.estimators = {Estimator::Schroeder};
    CHECK_THROWS_AS(run_sweep(c), ParameterError);
}

TEST_CASE("cells with mostly invalid estimates are flagged", "[bench]") {
    const std::vector<double> rhos{0.0, 0.0, 0.01, 0.0};
    const auto flagged = summarize_cell(Estimator::ML, 0.01, 100, rhos, 3, 1e-6);
    CHECK(flagged.flagged);
    CHECK(flagged.invalid == 3);
    // invalid estimates still enter the statistics at their raw value
    CHECK(flagged.bias == Approx(0.0025 - 0.01));
    const auto ok = summarize_cell(Estimator::ML, 0.01, 100, rhos, 2, 1e-6);
    CHECK_FALSE(ok.flagged);
}
