#include "zdam/config.hpp"
#include "zdam/error.hpp"
#include "zdam/harness.hpp"
#include "zdam/mapping_io.hpp"
#include "zdam/monte_carlo.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericAbort = 3;

struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::string mapping;
};

zdam::ExperimentConfig resolve(const Options& o) {
    std::vector<std::string> sets = o.sets;
    if (o.method) sets.push_back("method.name=" + *o.method);
    if (o.seed) sets.push_back("run.seed=" + std::to_string(*o.seed));
    if (o.out) sets.push_back("run.out=" + *o.out);
    return zdam::load_config(o.config, sets);
}

void write_diagnostic(const std::string& dir, const std::string& what, const std::string& config) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    nlohmann::json j;
    j["error"] = "numeric abort";
    j["message"] = what;
    j["config"] = config;
    std::ofstream(std::filesystem::path(dir) / "diagnostic.json") << j.dump(2) << "\n";
}

void print_result(const zdam::RunResult& r) {
    std::cout << zdam::summary_json(r);
}

int cmd_run(const Options& o) {
    const zdam::ExperimentConfig c = resolve(o);
    try {
        print_result(zdam::run(c, c.out));
    } catch (const zdam::NumericError& e) {
        write_diagnostic(c.out, e.what(), zdam::render_config(c));
        throw;
    }
    return 0;
}

int cmd_sweep(const Options& o) {
    const zdam::ExperimentConfig c = resolve(o);
    try {
        const auto rows = zdam::sweep(c, c.out);
        std::cout << "wrote " << rows.size() << " points to "
                  << (std::filesystem::path(c.out) / "sweep.csv").string() << "\n";
    } catch (const zdam::NumericError& e) {
        write_diagnostic(c.out, e.what(), zdam::render_config(c));
        throw;
    }
    return 0;
}

int cmd_validate(const Options& o) {
    const zdam::ExperimentConfig c = resolve(o);
    const std::string path =
        o.mapping.empty() ? (std::filesystem::path(c.out) / "mapping.json").string() : o.mapping;
    const zdam::MappingState s = zdam::load_mapping(path);
    const zdam::McResult mc =
        zdam::monte_carlo_validate(s.enc1, s.x_grid_1, s.enc2, s.x_grid_2, s.decoder, c.source,
                                   c.noise_var, c.noise_var, c.mc_samples, c.seed);
    nlohmann::json j = {{"mapping", path},     {"D", mc.D},   {"stderr", mc.stderr_D},
                        {"P1", mc.P1},         {"P2", mc.P2}, {"samples", mc.samples},
                        {"SNR_dB", zdam::snr_db(mc.D)}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_dump(const Options& o) {
    const zdam::ExperimentConfig c = resolve(o);
    const std::string path =
        o.mapping.empty() ? (std::filesystem::path(c.out) / "mapping.json").string() : o.mapping;
    const zdam::MappingState s = zdam::load_mapping(path);
    std::filesystem::create_directories(c.out);
    const std::string csv = (std::filesystem::path(c.out) / "mapping.csv").string();
    zdam::dump_mapping_csv(s, csv);
    std::cout << "wrote " << csv << " (" << s.x_grid_1.size() << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-delay distributed analog mapping design"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "Configuration file (INI sections)");
        sub->add_option("--set", o.sets, "Override, section.key=value (repeatable)");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--seed", o.seed, "Random seed");
        sub->add_option("--method", o.method, "da | greedy | ncr");
    };
    CLI::App* run = app.add_subcommand("run", "Design one encoder pair");
    CLI::App* sweep = app.add_subcommand("sweep", "Trace a performance curve");
    CLI::App* validate = app.add_subcommand("validate", "Simulate a stored mapping");
    CLI::App* dump = app.add_subcommand("dump", "Re-emit plot data from a stored mapping");
    for (CLI::App* sub : {run, sweep, validate, dump}) common(sub);
    validate->add_option("--mapping", o.mapping, "mapping.json (default: <out>/mapping.json)");
    dump->add_option("--mapping", o.mapping, "mapping.json (default: <out>/mapping.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) return cmd_run(o);
        if (*sweep) return cmd_sweep(o);
        if (*validate) return cmd_validate(o);
        if (*dump) return cmd_dump(o);
    } catch (const zdam::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfigError;
    } catch (const zdam::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kNumericAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
