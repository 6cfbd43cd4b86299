#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

#ifndef UNIDB_CLI_PATH
#error "UNIDB_CLI_PATH must point at the built CLI"
#endif

std::string cli() { return std::string(UNIDB_CLI_PATH); }

int run(const std::string& args, std::string* output = nullptr) {
    const std::string out_file = "cli_test_stdout.txt";
    const std::string cmd = cli() + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output != nullptr) {
        std::ifstream is(out_file, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        *output = ss.str();
    }
    std::remove(out_file.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
}

}  // namespace

TEST_CASE("version flag") {
    std::string out;
    CHECK(run("--version", &out) == 0);
    CHECK(out.find("unidb") != std::string::npos);
}

TEST_CASE("validate exits 0 on the default config") {
    std::string out;
    CHECK(run("validate --samples 400", &out) == 0);
    CHECK(out.find("all checks passed") != std::string::npos);
}

TEST_CASE("validate writes a machine-readable report") {
    const std::string report = "cli_test_report.json";
    CHECK(run("validate --samples 300 --report " + report) == 0);
    const std::string text = slurp(report);
    CHECK(text.find("\"partition_of_unity\"") != std::string::npos);
    CHECK(text.find("\"passed\"") != std::string::npos);
    std::remove(report.c_str());
}

TEST_CASE("validate --filter narrows the checks") {
    std::string out;
    CHECK(run("validate --samples 300 --filter semigroup", &out) == 0);
    CHECK(out.find("semigroup_noise_variance") != std::string::npos);
    CHECK(out.find("partition_of_unity") == std::string::npos);
}

TEST_CASE("config errors exit 2 and name the offending key") {
    const std::string cfg = "cli_test_bad.ini";
    write_file(cfg, "[schedule]\ngamma = -3\n");
    std::string out;
    CHECK(run("--config " + cfg + " validate", &out) == 2);
    CHECK(out.find("gamma") != std::string::npos);

    write_file(cfg, "[schedule]\nnot_a_key = 1\n");
    CHECK(run("--config " + cfg + " validate", &out) == 2);
    CHECK(out.find("not_a_key") != std::string::npos);
    std::remove(cfg.c_str());
}

TEST_CASE("sweep writes deterministic CSV") {
    const std::string a = "cli_test_a.csv", b = "cli_test_b.csv";
    CHECK(run("sweep --nfe 5 --seeds 1 --seed 3 --out " + a) == 0);
    CHECK(run("sweep --nfe 5 --seeds 1 --seed 3 --out " + b) == 0);
    const std::string ta = slurp(a);
    CHECK(ta == slurp(b));
    // one row per sampler plus the header
    const auto rows = std::count(ta.begin(), ta.end(), '\n');
    CHECK(rows == 7);  // 6 default samplers + header
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("config round-trip: dumped config reproduces the behavior") {
    const std::string dump = "cli_test_dump.ini";
    const std::string a = "cli_test_rt_a.csv", b = "cli_test_rt_b.csv";
    CHECK(run("sweep --nfe 5,10 --seeds 2 --seed 11 --out " + a + " --dump-config " + dump) ==
          0);
    CHECK(run("sweep --nfe 5,10 --seeds 2 --seed 11 --out " + a) == 0);
    CHECK(run("--config " + dump + " sweep --out " + b) == 0);
    CHECK(slurp(a) == slurp(b));
    std::remove(dump.c_str());
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("sweep honors the sampler list and JSON mirror") {
    const std::string csv = "cli_test_s.csv", json = "cli_test_s.json";
    CHECK(run("sweep --nfe 5 --seeds 2 --samplers unidbpp-sde-1,euler-sde --out " + csv +
              " --json " + json) == 0);
    const std::string text = slurp(csv);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(text.find("unidbpp-sde-1") != std::string::npos);
    CHECK(text.find("euler-sde") != std::string::npos);
    CHECK(slurp(json).find("\"evals\"") != std::string::npos);
    std::remove(csv.c_str());
    std::remove(json.c_str());
}

TEST_CASE("unknown sampler name is a config error") {
    CHECK(run("sweep --samplers bogus-name --nfe 5 --seeds 1 --out cli_test_x.csv") == 2);
}

TEST_CASE("compare: goub ladder decreases, unknown mode exits 2") {
    std::string out;
    CHECK(run("compare --mode goub --grid 20", &out) == 0);
    CHECK(out.find("monotone decrease: yes") != std::string::npos);
    CHECK(run("compare --mode dbim_ve --grid 20", &out) == 0);
    CHECK(run("compare --mode bogus", &out) == 2);
}
