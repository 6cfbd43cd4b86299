// Command-line driver: invariant validation, NFE sweeps on toy bridge
// problems, and coefficient comparisons against the limit providers.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unidb/checks.hpp"
#include "unidb/harness.hpp"
#include "unidb/models.hpp"
#include "unidb/samplers.hpp"
#include "unidb/schedule.hpp"

namespace {

using namespace unidb;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Plain sectioned key-value config; unknown sections or keys are rejected.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file '" + path + "'");
        KeyValueConfig cfg;
        std::string line, section;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    throw ConfigError("malformed section header at line " +
                                      std::to_string(line_no));
                }
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("expected key = value at line " + std::to_string(line_no));
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (section.empty()) throw ConfigError("key '" + key + "' outside any section");
            cfg.values_[section + "." + key] = value;
        }
        return cfg;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return std::nullopt;
        consumed_.insert(section + "." + key);
        return it->second;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            if (consumed_.find(key) == consumed_.end()) {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

double parse_number(const std::string& section, const std::string& key,
                    const std::string& value) {
    if (value == "inf" || value == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' in [" + section + "] is not a number: '" +
                          value + "'");
    }
}

struct ToolConfig {
    ScheduleParams schedule;
    OracleSpec oracle;
    double xT_value = 1.0;
    int grid_steps = 50;
    std::vector<std::string> samplers{"unidbpp-sde-1", "unidbpp-ode-1", "unidbpp-sde-2s",
                                      "unidbpp-sde-1c", "euler-sde", "euler-ode"};
    std::vector<int> nfe{5, 10, 20, 25, 50, 100};
    int seeds = 4;
    std::uint64_t master_seed = 0;
    std::string out_path = "results.csv";
};

ToolConfig default_config() {
    ToolConfig cfg;
    cfg.schedule.kind = ScheduleKind::flipped_cosine;
    cfg.schedule.horizon = 1.0;
    cfg.schedule.lambda2 = kDefaultLambda2;
    cfg.schedule.gamma = 1e8;
    cfg.schedule.cosine_offset = 0.008;
    cfg.schedule.terminal_decay = 0.005;
    cfg.oracle.kind = OracleKind::gaussian_prior;
    cfg.oracle.m0 = 0.0;
    cfg.oracle.s0_sq = 0.04;
    cfg.oracle.dim = 1;
    return cfg;
}

void apply_file(ToolConfig& cfg, const std::string& path) {
    const KeyValueConfig kv = KeyValueConfig::parse_file(path);

    if (auto v = kv.get("schedule", "kind")) {
        if (*v == "constant") {
            cfg.schedule.kind = ScheduleKind::constant;
        } else if (*v == "flipped-cosine") {
            cfg.schedule.kind = ScheduleKind::flipped_cosine;
        } else {
            throw ConfigError("key 'kind' in [schedule] must be constant or flipped-cosine");
        }
    }
    if (auto v = kv.get("schedule", "T")) cfg.schedule.horizon = parse_number("schedule", "T", *v);
    if (auto v = kv.get("schedule", "s")) {
        cfg.schedule.cosine_offset = parse_number("schedule", "s", *v);
    }
    if (auto v = kv.get("schedule", "theta0")) {
        cfg.schedule.theta0 = parse_number("schedule", "theta0", *v);
    }
    if (auto v = kv.get("schedule", "lambda2")) {
        cfg.schedule.lambda2 = parse_number("schedule", "lambda2", *v);
    }
    if (auto v = kv.get("schedule", "gamma")) {
        cfg.schedule.gamma = parse_number("schedule", "gamma", *v);
    }
    if (auto v = kv.get("schedule", "terminal_decay")) {
        cfg.schedule.terminal_decay = parse_number("schedule", "terminal_decay", *v);
    }
    if (auto v = kv.get("schedule", "theta_scale")) {
        cfg.schedule.theta_scale = parse_number("schedule", "theta_scale", *v);
    }
    if (auto v = kv.get("schedule", "terminal_convention")) {
        if (*v == "decay") {
            cfg.schedule.terminal_convention = TerminalConvention::decay_equals;
        } else if (*v == "growth") {
            cfg.schedule.terminal_convention = TerminalConvention::growth_equals;
        } else {
            throw ConfigError(
                "key 'terminal_convention' in [schedule] must be decay or growth");
        }
    }

    if (auto v = kv.get("oracle", "kind")) {
        if (*v == "point_mass") {
            cfg.oracle.kind = OracleKind::point_mass;
        } else if (*v == "gaussian_prior") {
            cfg.oracle.kind = OracleKind::gaussian_prior;
        } else if (*v == "constant") {
            cfg.oracle.kind = OracleKind::constant;
        } else if (*v == "affine_in_beta") {
            cfg.oracle.kind = OracleKind::affine_in_beta;
        } else {
            throw ConfigError("key 'kind' in [oracle] is not a known oracle");
        }
    }
    if (auto v = kv.get("oracle", "m0")) cfg.oracle.m0 = parse_number("oracle", "m0", *v);
    if (auto v = kv.get("oracle", "s0_sq")) {
        cfg.oracle.s0_sq = parse_number("oracle", "s0_sq", *v);
    }
    if (auto v = kv.get("oracle", "x0")) {
        const double x0 = parse_number("oracle", "x0", *v);
        cfg.oracle.x0_star.assign(cfg.oracle.dim, x0);
        cfg.oracle.constant.assign(cfg.oracle.dim, x0);
    }
    if (auto v = kv.get("oracle", "a")) cfg.oracle.affine_a = parse_number("oracle", "a", *v);
    if (auto v = kv.get("oracle", "b")) cfg.oracle.affine_b = parse_number("oracle", "b", *v);
    if (auto v = kv.get("oracle", "dim")) {
        const double d = parse_number("oracle", "dim", *v);
        if (d < 1 || d != std::floor(d)) {
            throw ConfigError("key 'dim' in [oracle] must be a positive integer");
        }
        cfg.oracle.dim = static_cast<std::size_t>(d);
        if (!cfg.oracle.x0_star.empty()) cfg.oracle.x0_star.assign(cfg.oracle.dim, cfg.oracle.x0_star.front());
        if (!cfg.oracle.constant.empty()) cfg.oracle.constant.assign(cfg.oracle.dim, cfg.oracle.constant.front());
    }
    if (auto v = kv.get("oracle", "xT")) cfg.xT_value = parse_number("oracle", "xT", *v);

    if (auto v = kv.get("grid", "kind")) {
        if (*v != "uniform") throw ConfigError("key 'kind' in [grid] must be uniform");
    }
    if (auto v = kv.get("grid", "M")) {
        cfg.grid_steps = static_cast<int>(parse_number("grid", "M", *v));
    }

    if (auto v = kv.get("sweep", "nfe")) {
        cfg.nfe.clear();
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            cfg.nfe.push_back(static_cast<int>(parse_number("sweep", "nfe", item)));
        }
    }
    if (auto v = kv.get("sweep", "seeds")) {
        cfg.seeds = static_cast<int>(parse_number("sweep", "seeds", *v));
    }
    if (auto v = kv.get("sweep", "seed")) {
        cfg.master_seed = static_cast<std::uint64_t>(parse_number("sweep", "seed", *v));
    }
    if (auto v = kv.get("sweep", "samplers")) {
        cfg.samplers.clear();
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) cfg.samplers.push_back(item);
        }
    }
    if (auto v = kv.get("sweep", "out")) cfg.out_path = *v;

    kv.reject_unknown();
}

void validate_config(const ToolConfig& cfg) {
    if (!(cfg.schedule.gamma > 0.0)) throw ConfigError("key 'gamma' must be > 0");
    if (!(cfg.schedule.horizon > 0.0)) throw ConfigError("key 'T' must be > 0");
    if (!(cfg.schedule.lambda2 > 0.0)) throw ConfigError("key 'lambda2' must be > 0");
    if (cfg.oracle.kind == OracleKind::gaussian_prior && !(cfg.oracle.s0_sq > 0.0)) {
        throw ConfigError("key 's0_sq' must be > 0");
    }
    if ((cfg.oracle.kind == OracleKind::point_mass && cfg.oracle.x0_star.empty()) ||
        (cfg.oracle.kind == OracleKind::constant && cfg.oracle.constant.empty())) {
        throw ConfigError("key 'x0' in [oracle] is required for this oracle kind");
    }
    if (cfg.grid_steps < 1) throw ConfigError("key 'M' must be >= 1");
    if (cfg.seeds < 1) throw ConfigError("key 'seeds' must be >= 1");
    for (int m : cfg.nfe) {
        if (m < 1) throw ConfigError("key 'nfe' entries must be >= 1");
    }
    // Surface schedule-level validation as config errors too.
    try {
        Schedule probe(cfg.schedule);
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
}

std::string oracle_kind_name(OracleKind kind) {
    switch (kind) {
        case OracleKind::point_mass: return "point_mass";
        case OracleKind::gaussian_prior: return "gaussian_prior";
        case OracleKind::constant: return "constant";
        case OracleKind::affine_in_beta: return "affine_in_beta";
        case OracleKind::constant_noise: return "constant_noise";
    }
    return "?";
}

void dump_config(const ToolConfig& cfg, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os << "[schedule]\n";
    os << "kind = "
       << (cfg.schedule.kind == ScheduleKind::constant ? "constant" : "flipped-cosine")
       << "\n";
    os << "T = " << format_double(cfg.schedule.horizon) << "\n";
    os << "s = " << format_double(cfg.schedule.cosine_offset) << "\n";
    os << "theta0 = " << format_double(cfg.schedule.theta0) << "\n";
    os << "lambda2 = " << format_double(cfg.schedule.lambda2) << "\n";
    os << "gamma = " << format_double(cfg.schedule.gamma) << "\n";
    os << "terminal_decay = " << format_double(cfg.schedule.terminal_decay) << "\n";
    if (cfg.schedule.theta_scale > 0.0) {
        os << "theta_scale = " << format_double(cfg.schedule.theta_scale) << "\n";
    }
    os << "terminal_convention = "
       << (cfg.schedule.terminal_convention == TerminalConvention::decay_equals ? "decay"
                                                                                : "growth")
       << "\n\n";
    os << "[oracle]\n";
    os << "kind = " << oracle_kind_name(cfg.oracle.kind) << "\n";
    os << "m0 = " << format_double(cfg.oracle.m0) << "\n";
    os << "s0_sq = " << format_double(cfg.oracle.s0_sq) << "\n";
    if (!cfg.oracle.x0_star.empty()) {
        os << "x0 = " << format_double(cfg.oracle.x0_star.front()) << "\n";
    }
    os << "a = " << format_double(cfg.oracle.affine_a) << "\n";
    os << "b = " << format_double(cfg.oracle.affine_b) << "\n";
    os << "dim = " << cfg.oracle.dim << "\n";
    os << "xT = " << format_double(cfg.xT_value) << "\n\n";
    os << "[grid]\n";
    os << "kind = uniform\n";
    os << "M = " << cfg.grid_steps << "\n\n";
    os << "[sweep]\n";
    os << "nfe = ";
    for (std::size_t i = 0; i < cfg.nfe.size(); ++i) {
        os << cfg.nfe[i] << (i + 1 < cfg.nfe.size() ? "," : "");
    }
    os << "\n";
    os << "seeds = " << cfg.seeds << "\n";
    os << "seed = " << cfg.master_seed << "\n";
    os << "samplers = ";
    for (std::size_t i = 0; i < cfg.samplers.size(); ++i) {
        os << cfg.samplers[i] << (i + 1 < cfg.samplers.size() ? "," : "");
    }
    os << "\n";
    os << "out = " << cfg.out_path << "\n";
}

int cmd_validate(const ToolConfig& cfg, const std::string& filter,
                 const std::string& report_path, int samples, std::uint64_t seed) {
    ValidationConfig vc;
    vc.schedule = cfg.schedule;
    vc.samples = samples;
    vc.seed = seed;
    const auto results = run_validation_suite(vc, filter);
    if (results.empty()) {
        std::cout << "no checks match filter '" << filter << "'\n";
        return 1;
    }
    bool all_ok = true;
    for (const auto& r : results) {
        all_ok = all_ok && r.passed;
        std::printf("%-28s %s  metric=%.3e bound=%.3e %s\n", r.name.c_str(),
                    r.passed ? "PASS" : "FAIL", r.metric, r.bound, r.detail.c_str());
    }
    if (!report_path.empty()) {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& r : results) {
            doc.push_back({{"name", r.name},
                           {"passed", r.passed},
                           {"metric", r.metric},
                           {"bound", r.bound},
                           {"detail", r.detail}});
        }
        std::ofstream os(report_path, std::ios::binary);
        if (!os) throw ConfigError("cannot open report path '" + report_path + "'");
        os << doc.dump(2) << '\n';
    }
    std::printf("%s\n", all_ok ? "all checks passed" : "some checks FAILED");
    return all_ok ? 0 : 1;
}

int cmd_sweep(const ToolConfig& cfg, const std::string& json_path, bool timings) {
    ExperimentSpec spec;
    spec.schedule = cfg.schedule;
    spec.oracle = cfg.oracle;
    spec.dim = cfg.oracle.dim;
    spec.xT_value = cfg.xT_value;
    for (const auto& name : cfg.samplers) {
        try {
            spec.samplers.push_back(parse_sampler_id(name));
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(ex.what());
        }
    }
    spec.nfe = cfg.nfe;
    spec.seeds = cfg.seeds;
    spec.master_seed = cfg.master_seed;
    const auto results = run_experiment(spec);
    write_results_csv(results, cfg.out_path, timings);
    if (!json_path.empty()) write_results_json(results, json_path, timings);
    int failures = 0;
    for (const auto& r : results) {
        if (!r.error.empty()) ++failures;
    }
    std::printf("wrote %zu runs to %s (%d failed runs recorded)\n", results.size(),
                cfg.out_path.c_str(), failures);
    return 0;
}

int cmd_compare(const ToolConfig& cfg, const std::string& mode,
                const std::vector<double>& gamma_ladder,
                const std::vector<double>& theta_ladder, int grid_n) {
    std::vector<double> ladder;
    std::vector<double> rungs;
    if (mode == "goub") {
        rungs = gamma_ladder;
        ladder = goub_limit_ladder(cfg.schedule, gamma_ladder, grid_n);
        std::printf("%-12s %s\n", "gamma", "max coefficient diff vs unidb");
    } else if (mode == "dbim_ve") {
        rungs = theta_ladder;
        ladder = dbim_ve_recovery_ladder(theta_ladder, 1e12, grid_n);
        std::printf("%-12s %s\n", "theta0", "max coefficient diff vs unidb");
    } else {
        std::cerr << "unknown compare mode '" << mode << "' (expected goub or dbim_ve)\n";
        return 2;
    }
    bool decreasing = true;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        std::printf("%-12g %.6e\n", rungs[i], ladder[i]);
        if (i > 0 && !(ladder[i] < ladder[i - 1])) decreasing = false;
    }
    std::printf("monotone decrease: %s\n", decreasing ? "yes" : "NO");
    return decreasing ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion-bridge coefficient algebra and exact-solution samplers"};
    app.set_version_flag("--version", "unidb 0.1.0");
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "sectioned key=value config file")
        ->configurable(false);

    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    std::string filter, report_path;
    int samples = 2000;
    std::uint64_t vseed = 0;
    validate->add_option("--filter", filter, "run only checks whose name contains this");
    validate->add_option("--report", report_path, "write a JSON summary here");
    validate->add_option("--samples", samples, "random samples per check");
    validate->add_option("--seed", vseed, "seed for the randomized checks");

    auto* sweep = app.add_subcommand("sweep", "run samplers x NFE x seeds, write CSV");
    std::string nfe_csv, samplers_csv, out_path, json_path, dump_path;
    int seeds = -1;
    std::int64_t master_seed = -1;
    bool timings = false;
    sweep->add_option("--nfe", nfe_csv, "comma-separated NFE values");
    sweep->add_option("--seeds", seeds, "seeds per combination");
    sweep->add_option("--samplers", samplers_csv, "comma-separated sampler names");
    sweep->add_option("--out", out_path, "CSV output path");
    sweep->add_option("--json", json_path, "optional JSON mirror path");
    sweep->add_option("--seed", master_seed, "master seed");
    sweep->add_flag("--timings", timings, "record wall times in the outputs");
    sweep->add_option("--dump-config", dump_path, "write the effective config and exit");

    auto* compare = app.add_subcommand("compare", "limit-mode coefficient comparison");
    std::string mode = "goub";
    std::string gamma_csv = "1e3,1e6,1e9,1e12";
    std::string theta_csv = "1e-2,1e-3,1e-4";
    int grid_n = 40;
    compare->add_option("--mode", mode, "goub or dbim_ve");
    compare->add_option("--gamma-ladder", gamma_csv, "gamma rungs for goub mode");
    compare->add_option("--theta-ladder", theta_csv, "theta0 rungs for dbim_ve mode");
    compare->add_option("--grid", grid_n, "grid points per axis");

    CLI11_PARSE(app, argc, argv);

    try {
        ToolConfig cfg = default_config();
        if (!config_path.empty()) apply_file(cfg, config_path);

        if (sweep->parsed()) {
            if (!nfe_csv.empty()) {
                cfg.nfe.clear();
                std::stringstream ss(nfe_csv);
                std::string item;
                while (std::getline(ss, item, ',')) cfg.nfe.push_back(std::stoi(item));
            }
            if (seeds > 0) cfg.seeds = seeds;
            if (master_seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(master_seed);
            if (!samplers_csv.empty()) {
                cfg.samplers.clear();
                std::stringstream ss(samplers_csv);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    if (!item.empty()) cfg.samplers.push_back(item);
                }
            }
            if (!out_path.empty()) cfg.out_path = out_path;
        }
        validate_config(cfg);

        if (validate->parsed()) {
            return cmd_validate(cfg, filter, report_path, samples, vseed);
        }
        if (sweep->parsed()) {
            if (!dump_path.empty()) {
                dump_config(cfg, dump_path);
                return 0;
            }
            return cmd_sweep(cfg, json_path, timings);
        }
        if (compare->parsed()) {
            auto parse_ladder = [](const std::string& csv) {
                std::vector<double> out;
                std::stringstream ss(csv);
                std::string item;
                while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
                return out;
            };
            return cmd_compare(cfg, mode, parse_ladder(gamma_csv), parse_ladder(theta_csv),
                               grid_n);
        }
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 2;
}
