#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "unidb/harness.hpp"

using namespace unidb;

namespace {

ExperimentSpec toy_spec() {
    ExperimentSpec spec;
    spec.schedule.kind = ScheduleKind::flipped_cosine;
    spec.schedule.gamma = 1e8;
    spec.oracle.kind = OracleKind::gaussian_prior;
    spec.oracle.m0 = 0.0;
    spec.oracle.s0_sq = 0.04;
    spec.oracle.dim = 1;
    spec.xT_value = 1.0;
    return spec;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string temp_path(const char* name) {
    return std::string("harness_test_") + name;
}

}  // namespace

TEST_CASE("one sampler, one NFE, one seed yields one result") {
    ExperimentSpec spec = toy_spec();
    spec.samplers = {parse_sampler_id("unidbpp-sde-1")};
    spec.nfe = {5};
    spec.seeds = 1;
    const auto results = run_experiment(spec);
    REQUIRE(results.size() == 1);
    CHECK(results[0].sampler == "unidbpp-sde-1");
    CHECK(results[0].nfe == 5);
    CHECK(results[0].evals == 5);
    CHECK(results[0].error.empty());
    CHECK(std::isfinite(results[0].rmse));
}

TEST_CASE("identical master seeds reproduce identical result sets") {
    ExperimentSpec spec = toy_spec();
    spec.samplers = {parse_sampler_id("unidbpp-sde-1"), parse_sampler_id("euler-sde")};
    spec.nfe = {5, 10};
    spec.seeds = 3;
    spec.master_seed = 99;
    const auto a = run_experiment(spec);
    const auto b = run_experiment(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sampler == b[i].sampler);
        CHECK(a[i].rmse == b[i].rmse);  // bit-identical
        CHECK(a[i].terminal == b[i].terminal);
    }
}

TEST_CASE("failed combinations are recorded without aborting the sweep") {
    ExperimentSpec spec = toy_spec();
    SamplerSpec bad;  // corrector requires the SDE process
    bad.process = ProcessKind::mean_ode;
    bad.corrector.enabled = true;
    spec.samplers = {bad, parse_sampler_id("unidbpp-sde-1")};
    spec.nfe = {4};
    spec.seeds = 2;
    const auto results = run_experiment(spec);
    REQUIRE(results.size() == 4);
    int failed = 0, ok = 0;
    for (const auto& r : results) {
        if (r.error.empty()) {
            ++ok;
            CHECK(std::isfinite(r.rmse));
        } else {
            ++failed;
            CHECK(std::isnan(r.rmse));
        }
    }
    CHECK(failed == 2);
    CHECK(ok == 2);
}

TEST_CASE("oracles without an analytic target score against a fine-grid reference") {
    ExperimentSpec spec = toy_spec();
    spec.oracle.kind = OracleKind::constant_noise;
    spec.oracle.eps_constant = {0.2};
    spec.reference_steps = 20000;
    spec.samplers = {parse_sampler_id("unidbpp-ode-1-n")};
    spec.nfe = {200};
    spec.seeds = 1;
    const auto results = run_experiment(spec);
    REQUIRE(results.size() == 1);
    CHECK(results[0].error.empty());
    CHECK(std::isfinite(results[0].rmse));
    CHECK(results[0].rmse < 0.05);  // close to its own fine-grid limit
}

TEST_CASE("convergence_order recovers exact slopes") {
    std::vector<std::pair<double, double>> first, second;
    for (double m : {10.0, 20.0, 40.0, 80.0}) {
        first.push_back({m, 3.0 / m});
        second.push_back({m, 5.0 / (m * m)});
    }
    CHECK(convergence_order(first) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(convergence_order(second) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(convergence_order({{10.0, 1.0}, {20.0, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(convergence_order({{10.0, 1.0}, {20.0, 0.0}, {40.0, 0.1}}),
                    std::domain_error);
}

TEST_CASE("euler convergence series produced by the experiment lands near slope 1") {
    ExperimentSpec spec = toy_spec();
    spec.schedule.gamma = std::numeric_limits<double>::infinity();
    spec.oracle.m0 = 0.25;
    spec.oracle.s0_sq = 0.09;
    SamplerSpec euler = parse_sampler_id("goub-euler-ode");
    SamplerSpec exact = parse_sampler_id("goub-unidbpp-ode-1");
    spec.samplers = {euler, exact};
    spec.nfe = {50, 100, 200, 400, 800};
    spec.seeds = 1;
    const auto results = run_experiment(spec);
    // reference: the exact solver at the finest grid
    double ref = 0.0;
    for (const auto& r : results) {
        if (r.sampler == exact.id() && r.nfe == 800) ref = r.terminal[0];
    }
    std::vector<std::pair<double, double>> series;
    for (const auto& r : results) {
        if (r.sampler == euler.id()) {
            series.push_back({double(r.nfe), std::abs(r.terminal[0] - ref)});
        }
    }
    const double slope = convergence_order(series);
    CHECK(slope >= 0.8);
    CHECK(slope <= 1.2);
}

TEST_CASE("mean-ODE RMSE stabilizes at fine grids") {
    ExperimentSpec spec = toy_spec();
    spec.schedule.gamma = std::numeric_limits<double>::infinity();
    spec.oracle.m0 = 0.25;
    spec.oracle.s0_sq = 0.09;
    spec.samplers = {parse_sampler_id("goub-unidbpp-ode-1")};
    spec.nfe = {50, 400, 800};
    spec.seeds = 1;
    const auto results = run_experiment(spec);
    REQUIRE(results.size() == 3);
    const double r50 = results[0].rmse;
    const double r400 = results[1].rmse;
    const double r800 = results[2].rmse;
    CHECK(std::abs(r400 - r800) <= 0.1 * r50);
}

TEST_CASE("CSV writing: header-only, row counts, deterministic bytes") {
    const std::string path = temp_path("empty.csv");
    write_results_csv({}, path);
    CHECK(slurp(path) == "sampler,process,order,corrector,gamma_mode,nfe,seed,rmse,wall_ms,evals\n");

    ExperimentSpec spec = toy_spec();
    spec.samplers = {parse_sampler_id("unidbpp-sde-1")};
    spec.nfe = {5};
    spec.seeds = 2;
    const auto results = run_experiment(spec);
    const std::string path2 = temp_path("two.csv");
    write_results_csv(results, path2);
    const std::string text = slurp(path2);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 rows
    CHECK(text.find("\r") == std::string::npos);             // LF endings only

    const std::string path3 = temp_path("two_again.csv");
    write_results_csv(results, path3);
    CHECK(slurp(path3) == text);
    std::remove(path.c_str());
    std::remove(path2.c_str());
    std::remove(path3.c_str());
}

TEST_CASE("CSV round-trips through the parser") {
    ExperimentSpec spec = toy_spec();
    spec.samplers = {parse_sampler_id("unidbpp-sde-1"), parse_sampler_id("unidbpp-sde-1c"),
                     parse_sampler_id("euler-ode")};
    spec.nfe = {5, 10};
    spec.seeds = 2;
    const auto results = run_experiment(spec);
    const std::string path = temp_path("roundtrip.csv");
    write_results_csv(results, path);
    const auto back = read_results_csv(path);
    REQUIRE(back.size() == results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        CHECK(back[i].sampler == results[i].sampler);
        CHECK(back[i].process == results[i].process);
        CHECK(back[i].order == results[i].order);
        CHECK(back[i].corrector == results[i].corrector);
        CHECK(back[i].gamma_mode == results[i].gamma_mode);
        CHECK(back[i].nfe == results[i].nfe);
        CHECK(back[i].seed == results[i].seed);
        CHECK(back[i].rmse == results[i].rmse);  // exact round-trip
        CHECK(back[i].evals == results[i].evals);
    }
    std::remove(path.c_str());
}

TEST_CASE("JSON mirror carries the same fields") {
    ExperimentSpec spec = toy_spec();
    spec.samplers = {parse_sampler_id("unidbpp-sde-1")};
    spec.nfe = {5};
    spec.seeds = 1;
    const auto results = run_experiment(spec);
    const std::string path = temp_path("mirror.json");
    write_results_json(results, path);
    const std::string text = slurp(path);
    CHECK(text.find("\"sampler\": \"unidbpp-sde-1\"") != std::string::npos);
    CHECK(text.find("\"rmse\"") != std::string::npos);
    std::remove(path.c_str());
}
